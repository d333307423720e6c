"""Median stabilization time over a sweep of population sizes.

    python scripts/scaling_sweep.py --n-min 10 --n-max 17 --trials 40 > sweep.csv

Prints one CSV row per n with the two scaling ratios next to the median.
"""

import argparse
import csv
import math
import sys

import numpy as np

from popelect import ProtocolParams, Stop, StopCondition, run_trial
from popelect.rng import derive_seed


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n-min", type=int, default=10, help="log2 of the smallest n")
    ap.add_argument("--n-max", type=int, default=17)
    ap.add_argument("--trials", type=int, default=40)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--drag-any-epoch", action="store_true")
    args = ap.parse_args()

    w = csv.writer(sys.stdout)
    w.writerow(["n", "median_time", "q95_time", "per_log2sq", "per_logloglog",
                "median_epoch2_survivors"])
    for k in range(args.n_min, args.n_max + 1):
        n = 2**k
        p = ProtocolParams(n, drag_final_epoch_only=not args.drag_any_epoch)
        recs = [run_trial(p, derive_seed(args.seed * 1000 + k, t),
                          StopCondition(Stop.SINGLE_ALIVE, 200_000 * n))
                for t in range(args.trials)]
        times = np.array([r.stabilization_parallel_time for r in recs
                          if r.stabilization_parallel_time is not None])
        surv = [r.epoch2_survivors for r in recs if r.epoch2_survivors is not None]
        med = float(np.median(times))
        w.writerow([n, f"{med:.1f}", f"{np.quantile(times, 0.95):.1f}",
                    f"{med / k**2:.3f}", f"{med / (k * math.log2(k)):.3f}",
                    float(np.median(surv)) if surv else ""])
        sys.stdout.flush()


if __name__ == "__main__":
    main()
