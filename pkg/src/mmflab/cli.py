"""Command line entry point: ``python -m mmflab <command>``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import harness, hurst, lob, mmf, stochastic

log = logging.getLogger("mmflab")


def _simulate(args) -> int:
    params = mmf.ModelParams(alpha_x=args.alpha, hurst_x=args.hurst_x, hurst_s=args.hurst_s,
                             n_events=args.events, seed=args.seed, keep_returns=args.keep)
    try:
        result = mmf.run(params)
    except mmf.DegenerateRun as exc:
        print(f"degenerate run: {exc}", file=sys.stderr)
        print(json.dumps(exc.diagnostics, indent=1), file=sys.stderr)
        return 3
    if args.out:
        np.savetxt(args.out, result.returns.values, fmt="%.17g")
    fit = hurst.hurst_exponent(result.returns.values)
    print(json.dumps({"hurst_r": fit.hurst, "r2": fit.r2, **result.diagnostics}, indent=1))
    return 0


def _dfa(args) -> int:
    x = np.loadtxt(args.file, ndmin=1)
    res = hurst.dfa(x, both_ends=not args.forward_only)
    res = hurst.fit_hurst(res, (args.min_scale, args.max_scale))
    for scale, f in res.rows():
        print(f"{scale}\t{f:.10g}")
    print(f"# hurst={res.hurst:.6f} r2={res.r2:.6f} n_fit={res.n_fit}")
    return 0


def _config(args) -> harness.SweepConfig:
    cfg = harness.load_config(args.config) if args.config else harness.preset(args.preset)
    changes = {k: v for k, v in (("reps", args.reps), ("n_events", args.events),
                                 ("keep_returns", args.keep), ("master_seed", args.seed),
                                 ("workers", args.workers)) if v is not None}
    return harness.replace_config(cfg, **changes)


def _sweep(args) -> int:
    cfg = _config(args)
    out = Path(args.output_dir) if args.output_dir else cfg.resolved_output()
    n = len(cfg.cells()) * cfg.reps
    log.info("sweep: %d cells x %d reps -> %s", len(cfg.cells()), cfg.reps, out)

    def progress(i, total):
        if i % max(total // 20, 1) == 0 or i == total:
            log.info("%d/%d runs", i, total)

    records, manifest = harness.sweep(cfg, out, progress=progress)
    print(f"{len(records)} of {n} runs written to {out / 'records.csv'} "
          f"({manifest['invalid_runs']} invalid)")
    if args.report:
        harness.report(out / "records.csv", out)
        print(f"report written to {out / 'report.json'}")
    return 0


def _report(args) -> int:
    bundle = harness.report(args.records, args.output_dir)
    for a, table in bundle["tables"].items():
        print(f"H_r at alpha_x={a} (rows H_s, columns H_x)")
        print("      " + " ".join(f"{x:>8.2f}" for x in table["cols_hurst_x"]))
        for hs, row in zip(table["rows_hurst_s"], table["cells"]):
            print(f"{hs:5.2f} " + " ".join(f"{c:>8}" for c in row))
    for var, pr in bundle["pearson"].items():
        if "rho" in pr:
            print(f"pearson {var}: rho={pr['rho']:.4f} p={pr['p_value']:.3g}")
    for form, reg in bundle["regressions"].items():
        if "coefficients" in reg:
            terms = " ".join(f"{k}={v:+.4f}" for k, v in reg["coefficients"].items())
            print(f"{form}: {terms} adjR2={reg['adjusted_r2']:.4f}")
        else:
            print(f"{form}: {reg['error']}")
    return 0


def _selftest(args) -> int:
    failures = []

    def check(name, ok):
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
        if not ok:
            failures.append(name)

    rng = stochastic.make_rng(1)
    est = np.mean([hurst.hurst_exponent(rng.standard_normal(20_000)).hurst for _ in range(5)])
    check(f"dfa white noise ~0.5 ({est:.3f})", abs(est - 0.5) < 0.05)
    amp = stochastic.sample_student_t(8192, 1.3, rng)
    sur = stochastic.iaaft(amp, stochastic.generate_fgn(8192, 0.8, rng))
    check("iaaft keeps the marginal exactly", np.array_equal(np.sort(sur.values), np.sort(amp)))
    book = lob.OrderBook.seeded()
    book.place(lob.BUY, 0, 1)
    out = book.place(lob.SELL, -5, 2)
    check("crossing order executes at best bid", getattr(out, "trade_price", None) == 0)
    p = mmf.probability(0.0, 0.5, 10, mmf.CancellationModel())
    check("cancellation probability vanishes at the quote", p == 0.0)
    short = mmf.ModelParams(n_events=5000, seed=3, max_empty_fraction=1.0)
    res, again = mmf.run(short), mmf.run(short)
    check("simulation deterministic in its seed",
          np.array_equal(res.returns.values, again.returns.values))
    return 1 if failures else 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mmflab", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one simulation and print diagnostics")
    p.add_argument("--alpha", type=float, default=1.3)
    p.add_argument("--hurst-x", type=float, default=0.8)
    p.add_argument("--hurst-s", type=float, default=0.75)
    p.add_argument("--events", type=int, default=200_000)
    p.add_argument("--keep", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write kept returns, one per line")
    p.set_defaults(func=_simulate)

    p = sub.add_parser("dfa", help="DFA of a one-column text series")
    p.add_argument("file")
    p.add_argument("--min-scale", type=int, default=hurst.DEFAULT_FIT_RANGE[0])
    p.add_argument("--max-scale", type=int, default=hurst.DEFAULT_FIT_RANGE[1])
    p.add_argument("--forward-only", action="store_true")
    p.set_defaults(func=_dfa)

    p = sub.add_parser("sweep", help="parameter sweep")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--config", help="TOML config file")
    src.add_argument("--preset", default="desk", choices=sorted(harness.PRESETS))
    p.add_argument("--reps", type=int)
    p.add_argument("--events", type=int)
    p.add_argument("--keep", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--output-dir")
    p.add_argument("--report", action="store_true", help="run the report afterwards")
    p.set_defaults(func=_sweep)

    p = sub.add_parser("report", help="tables, correlations and regressions from records")
    p.add_argument("records")
    p.add_argument("--output-dir")
    p.set_defaults(func=_report)

    p = sub.add_parser("selftest", help="quick sanity checks")
    p.set_defaults(func=_selftest)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
