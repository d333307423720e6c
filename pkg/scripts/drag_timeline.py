"""Time between successive drag levels of the first leader to reach them.

    python scripts/drag_timeline.py --n 65536 --trials 10

T_l is measured in parallel time from the first active leader at drag l to
the first at drag l + 1.
"""

import argparse

import numpy as np

from popelect import ProtocolParams, Stop, StopCondition, new_population, run_until
from popelect.rng import derive_seed


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=2**16)
    ap.add_argument("--trials", type=int, default=10)
    ap.add_argument("--seed", type=int, default=5)
    ap.add_argument("--drag-any-epoch", action="store_true")
    args = ap.parse_args()

    n = args.n
    p = ProtocolParams(n, drag_final_epoch_only=not args.drag_any_epoch)
    rows = []
    for t in range(args.trials):
        seed = derive_seed(args.seed, t)
        state = new_population(p, seed)
        _, rec = run_until(state, StopCondition(Stop.DRAG, 400_000 * n, level=p.psi))
        fd = rec.first_drag
        T = [(fd[k + 1] - fd[k]) / n if fd[k + 1] is not None else np.nan
             for k in range(len(fd) - 1)]
        rows.append(T)
        print(seed, " ".join(f"{x:9.1f}" for x in T), flush=True)
    T = np.array(rows)
    print("median", " ".join(f"{x:9.1f}" for x in np.nanmedian(T, axis=0)))
    print("median ratios", " ".join(f"{x:.2f}" for x in np.nanmedian(T[:, 1:] / T[:, :-1], axis=0)))


if __name__ == "__main__":
    main()
