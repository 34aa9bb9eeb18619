"""Wall time of single full-length runs (target: under 10 s each)."""

import argparse
import time

from mmflab import mmf
from mmflab.hurst import hurst_exponent

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--events", type=int, default=200_000)
ap.add_argument("--seeds", type=int, default=3)
args = ap.parse_args()

mmf.run(mmf.ModelParams(n_events=2000, max_empty_fraction=1.0))  # jit warm-up
for seed in range(args.seeds):
    t0 = time.perf_counter()
    try:
        res = mmf.run(mmf.ModelParams(n_events=args.events, seed=seed))
        h = hurst_exponent(res.returns.values).hurst
        d = res.diagnostics
        note = f"H_r={h:.3f} depth={d['mean_depth']:.0f} empty={d['empty_fraction']:.4f}"
    except mmf.DegenerateRun as exc:
        note = f"degenerate ({exc})"
    print(f"seed {seed}: {time.perf_counter() - t0:6.2f} s  {note}")
