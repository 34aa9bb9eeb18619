"""Experiment orchestration: configs, seeds, parameter sweeps and reports."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import __version__, analytics
from .analytics import SweepRecord
from .hurst import DEFAULT_FIT_RANGE, hurst_exponent
from .mmf import CancellationModel, DegenerateRun, ModelParams, run

log = logging.getLogger(__name__)

OUTPUT_ENV = "MMFLAB_OUTPUT_DIR"
MASK64 = (1 << 64) - 1
RECORD_FIELDS = [f.name for f in fields(SweepRecord)]


class ConfigInvalid(ValueError):
    pass


class EmptyInput(ValueError):
    pass


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def derive_seed(master_seed: int, cell_index: int, rep_index: int) -> int:
    """Child seed of one (cell, repetition).

    splitmix64 is chained over the master seed, the cell index and the
    repetition index; each step mixes the running state xor the next input.
    The mapping is frozen: changing it changes every published number.
    """
    if cell_index < 0 or rep_index < 0:
        raise ValueError("indices must be nonnegative")
    h = _splitmix64(master_seed & MASK64)
    h = _splitmix64(h ^ (cell_index & MASK64))
    h = _splitmix64(h ^ _splitmix64(rep_index & MASK64))
    return h


def grid(lo: float, hi: float, step: float) -> list[float]:
    n = int(round((hi - lo) / step))
    return [round(lo + i * step, 10) for i in range(n + 1)]


@dataclass
class SweepConfig:
    alpha_grid: list[float] = field(default_factory=lambda: [1.3])
    hurst_x_grid: list[float] = field(default_factory=lambda: [0.5, 0.7, 0.9])
    hurst_s_grid: list[float] = field(default_factory=lambda: [0.5, 0.7, 0.9])
    reps: int = 10
    n_events: int = 50_000
    keep_returns: int = 10_000
    master_seed: int = 20140101
    workers: int = 1
    output_dir: str = ""
    model: dict = field(default_factory=dict)

    def validate(self) -> "SweepConfig":
        if self.reps < 1:
            raise ConfigInvalid("reps must be >= 1")
        if self.workers < 1:
            raise ConfigInvalid("workers must be >= 1")
        if self.n_events < 16 or self.keep_returns < 1:
            raise ConfigInvalid("n_events and keep_returns must be positive")
        if not (self.alpha_grid and self.hurst_x_grid and self.hurst_s_grid):
            raise ConfigInvalid("empty parameter grid")
        try:
            for cell in self.cells():
                self.params(cell, 0).validate()
        except ValueError as exc:
            raise ConfigInvalid(str(exc)) from exc
        return self

    def cells(self) -> list[tuple[float, float, float]]:
        return [(a, hx, hs) for a in self.alpha_grid
                for hs in self.hurst_s_grid for hx in self.hurst_x_grid]

    def params(self, cell, seed: int) -> ModelParams:
        model = dict(self.model)
        cancel = model.pop("cancellation", {})
        a, hx, hs = cell
        return ModelParams(alpha_x=a, hurst_x=hx, hurst_s=hs, n_events=self.n_events,
                           keep_returns=self.keep_returns, seed=seed,
                           cancellation=CancellationModel(**cancel), **model)

    def identity(self) -> dict:
        """Everything that determines the numbers (workers and paths excluded)."""
        d = asdict(self)
        d.pop("workers")
        d.pop("output_dir")
        return d

    def digest(self) -> str:
        blob = json.dumps(self.identity(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    def resolved_output(self) -> Path:
        return Path(self.output_dir or os.environ.get(OUTPUT_ENV, "results"))


PRESETS: dict[str, dict] = {
    "paper": dict(alpha_grid=grid(1.0, 1.65, 0.05), hurst_x_grid=grid(0.5, 0.95, 0.05),
                  hurst_s_grid=grid(0.5, 0.95, 0.05), reps=100, n_events=200_000,
                  keep_returns=40_000),
    "table1": dict(alpha_grid=[1.3], hurst_x_grid=grid(0.5, 0.95, 0.05),
                   hurst_s_grid=grid(0.5, 0.95, 0.05), reps=100, n_events=200_000,
                   keep_returns=40_000),
    "desk": dict(alpha_grid=[1.3], hurst_x_grid=[0.5, 0.7, 0.9], hurst_s_grid=[0.5, 0.7, 0.9],
                 reps=10, n_events=50_000, keep_returns=10_000),
    "reduced": dict(alpha_grid=[1.0, 1.3, 1.6], hurst_x_grid=[0.5, 0.6, 0.7, 0.8, 0.9],
                    hurst_s_grid=[0.5, 0.6, 0.7, 0.8, 0.9], reps=5, n_events=200_000,
                    keep_returns=40_000),
}


def preset(name: str, **overrides) -> SweepConfig:
    if name not in PRESETS:
        raise ConfigInvalid(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return SweepConfig(**{**PRESETS[name], **overrides})


def load_config(path) -> SweepConfig:
    """TOML config: optional ``preset`` key, a ``[sweep]`` table and a ``[model]`` table."""
    try:
        import tomllib
    except ModuleNotFoundError:  # python < 3.11
        import tomli as tomllib
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    base = dict(PRESETS[raw["preset"]]) if "preset" in raw else {}
    sweep = raw.get("sweep", {})
    unknown = set(sweep) - {f.name for f in fields(SweepConfig)}
    if unknown:
        raise ConfigInvalid(f"unknown sweep keys: {sorted(unknown)}")
    base.update(sweep)
    if "model" in raw:
        base["model"] = raw["model"]
    return SweepConfig(**base)


# -- running ------------------------------------------------------------

def run_task(task) -> SweepRecord:
    config, cell_index, cell, rep = task
    seed = derive_seed(config.master_seed, cell_index, rep)
    started = time.perf_counter()
    status, h, r2, kept = "ok", float("nan"), float("nan"), 0
    try:
        result = run(config.params(cell, seed))
        fit = hurst_exponent(result.returns.values, DEFAULT_FIT_RANGE)
        h, r2, kept = fit.hurst, fit.r2, result.returns.kept
    except DegenerateRun:
        status = "degenerate"
    except ValueError as exc:
        log.warning("cell %s rep %d failed: %s", cell, rep, exc)
        status = "failed"
    runtime_ms = int(round((time.perf_counter() - started) * 1000))
    return SweepRecord(alpha_x=cell[0], hurst_x=cell[1], hurst_s=cell[2], rep=rep,
                       hurst_r=h, r2=r2, seed=seed, runtime_ms=runtime_ms,
                       status=status, kept=kept)


def tasks(config: SweepConfig):
    return [(config, ci, cell, rep) for ci, cell in enumerate(config.cells())
            for rep in range(config.reps)]


def execute(config: SweepConfig, progress=None) -> list[SweepRecord]:
    """All records in canonical (cell, rep) order, whatever the worker count."""
    config.validate()
    work = tasks(config)
    if config.workers == 1:
        out = []
        for i, t in enumerate(work):
            out.append(run_task(t))
            if progress:
                progress(i + 1, len(work))
        return out
    with ProcessPoolExecutor(max_workers=config.workers) as pool:
        return list(pool.map(run_task, work, chunksize=1))


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def write_records(records, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_FIELDS)
        for r in records:
            w.writerow([_fmt(getattr(r, f)) for f in RECORD_FIELDS])


def read_records(path) -> list[SweepRecord]:
    casts = {"rep": int, "seed": int, "runtime_ms": int, "kept": int, "status": str}
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(SweepRecord(**{k: casts.get(k, float)(v) for k, v in row.items()}))
    return out


def sweep(config: SweepConfig, output_dir=None, progress=None):
    """Run the sweep, write ``records.csv`` and ``manifest.json``."""
    out = Path(output_dir) if output_dir else config.resolved_output()
    out.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    records = execute(config, progress)
    write_records(records, out / "records.csv")
    n_bad = sum(not r.ok for r in records)
    manifest = {
        "config_hash": config.digest(),
        "tool_version": __version__,
        "config": config.identity(),
        "seed_rule": "splitmix64 chain over (master_seed, cell_index, rep_index)",
        "runs": [{"cell": list(r.cell), "rep": r.rep, "seed": r.seed, "status": r.status}
                 for r in records],
        "invalid_runs": n_bad,
        "wall_time_s": time.perf_counter() - started,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1))
    if n_bad:
        log.warning("%d of %d runs excluded (degenerate or failed)", n_bad, len(records))
    return records, manifest


# -- reporting ----------------------------------------------------------

def build_report(records) -> dict:
    recs = analytics.valid(records)
    if not recs:
        raise EmptyInput("no valid records")
    report: dict = {"n_records": len(records), "n_valid": len(recs), "tables": {},
                    "pearson": {}, "regressions": {}, "sensitivity": {}}

    counts = Counter(r.cell for r in recs)
    thin = sorted(c for c, k in counts.items() if k < 2)
    report["thin_cells"] = [list(c) for c in thin]
    cells = analytics.cell_stats([r for r in recs if counts[r.cell] >= 2])
    if cells:
        for a in sorted({c[0] for c in cells}):
            hs, hx, table = analytics.hurst_table(cells, a)
            report["tables"][format(a, "g")] = {
                "rows_hurst_s": hs, "cols_hurst_x": hx,
                "cells": [[c.formatted() if c else "" for c in row] for row in table],
                "mean": [[c.mean if c else None for c in row] for row in table],
                "std": [[c.std if c else None for c in row] for row in table],
            }

    for var in analytics.VARIABLES:
        try:
            rho, p = analytics.pearson(recs, var)
            report["pearson"][var] = {"rho": rho, "p_value": p,
                                      "significant": p < analytics.SIGNIFICANCE}
        except ValueError as exc:
            report["pearson"][var] = {"error": str(exc)}

    alphas = sorted({r.alpha_x for r in recs})
    fixed_alpha = 1.3 if any(np.isclose(a, 1.3) for a in alphas) else alphas[0]
    for form in analytics.FORMS:
        two_var = form.endswith("2")
        try:
            rep = analytics.ols(recs, form, alpha_x=fixed_alpha if two_var else None)
            report["regressions"][form] = rep.to_dict()
        except ValueError as exc:
            report["regressions"][form] = {"error": str(exc)}

    for form in ("linear3", "linear2"):
        reg = report["regressions"].get(form, {})
        if "coefficients" in reg:
            rep = analytics.RegressionReport(**reg)
            report["sensitivity"] = {
                "form": form,
                **{v: analytics.sensitivity(rep, v, 1.0) for v in rep.names},
            }
            break
    return report


def _table_csv(table: dict) -> str:
    lines = ["hurst_s\\hurst_x," + ",".join(format(x, ".2f") for x in table["cols_hurst_x"])]
    for hs, row in zip(table["rows_hurst_s"], table["cells"]):
        lines.append(format(hs, ".2f") + "," + ",".join(row))
    return "\n".join(lines) + "\n"


def _regression_csv(regs: dict) -> str:
    lines = ["form,term,coefficient,std_error,p_value,adjusted_r2,n"]
    for form, reg in regs.items():
        if "coefficients" not in reg:
            continue
        for term, c in reg["coefficients"].items():
            lines.append(",".join([form, term, _fmt(c), _fmt(reg["std_errors"][term]),
                                   _fmt(reg["p_values"][term]), _fmt(reg["adjusted_r2"]),
                                   str(reg["n"])]))
    return "\n".join(lines) + "\n"


def report(record_file, output_dir=None) -> dict:
    """Analytics over a record file; writes ``report.json`` and CSV tables."""
    records = read_records(record_file)
    if not records:
        raise EmptyInput(f"{record_file} holds no records")
    bundle = build_report(records)
    out = Path(output_dir) if output_dir else Path(record_file).parent
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(bundle, indent=1, sort_keys=True))
    for a, table in bundle["tables"].items():
        (out / f"table_alpha_{a}.csv").write_text(_table_csv(table))
    (out / "regressions.csv").write_text(_regression_csv(bundle["regressions"]))
    return bundle


def replace_config(config: SweepConfig, **changes) -> SweepConfig:
    return replace(config, **changes)
