"""Mean rounds of the abstract elimination chain as the starting field doubles.

    python scripts/round_oracle.py --p 0.25
"""

import argparse

from popelect.analytics import round_model_oracle


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--p", type=float, default=0.25)
    ap.add_argument("--samples", type=int, default=20000)
    args = ap.parse_args()
    prev = None
    for k in range(1, 11):
        f0 = 2**k
        b = round_model_oracle(f0, args.p, args.samples, seed=k).mean()
        step = "" if prev is None else f"  ({b - prev:+.2f})"
        print(f"F0={f0:5d}  mean B={b:.3f}{step}")
        prev = b


if __name__ == "__main__":
    main()
