"""Coin and inhibitor histograms after the first global rounds of one trial.

    python scripts/first_round_census.py --n 65536 --seed 3
    python scripts/first_round_census.py --n 65536 --drag-advance-on-noncoin

The second form shows the inhibitor histogram under the printed drag rule,
which decays like (3/4)^l instead of 4^-l.
"""

import argparse

from popelect import ProtocolParams, Stop, StopCondition, new_population, run_until
from popelect.analytics import coin_census, drag_census


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=2**16)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--phi", type=int, default=None)
    ap.add_argument("--rounds", type=int, default=2)
    ap.add_argument("--drag-advance-on-noncoin", action="store_true")
    args = ap.parse_args()

    p = ProtocolParams(args.n, phi=args.phi, drag_advance_on_noncoin=args.drag_advance_on_noncoin)
    state = new_population(p, args.seed)
    run_until(state, StopCondition(Stop.ROUNDS, 2000 * args.n, rounds=args.rounds))
    roles = state.census_dict()["roles"]
    print("roles", roles)
    coins = coin_census(state)
    print("coins (C_l = coins at level >= l)")
    print(coins.to_csv(), end="")
    for lvl in range(len(coins.cumulative) - 1):
        q = coins.cumulative[lvl] / args.n
        print(f"  C_{lvl + 1} / (q^2 n) = {coins.cumulative[lvl + 1] / (q * q * args.n):.3f}")
    drags = drag_census(state)
    print(f"inhibitors (stopped {drags.stopped} of {drags.population})")
    print(drags.to_csv(), end="")
    for lvl, c in enumerate(drags.cumulative):
        print(f"  D_{lvl} / (n_I 4^-l) = {c / (drags.population * 4.0 ** -lvl):.3f}")


if __name__ == "__main__":
    main()
