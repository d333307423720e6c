"""Run the acceptance criteria and print one line per criterion.

    python scripts/validate.py               # full scale, slow
    python scripts/validate.py --trials 5    # quick smoke run
"""

import argparse
import sys

from popelect.acceptance import ALL_CRITERIA, Suite


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=None)
    ap.add_argument("--criteria", default=",".join(map(str, ALL_CRITERIA)))
    args = ap.parse_args()
    suite = Suite(trials=args.trials, log=lambda m: print(m, file=sys.stderr))
    ok = True
    for c in (int(x) for x in args.criteria.split(",")):
        res = suite.run([c])[0]
        print(res.line(), flush=True)
        ok &= res.passed
    sys.exit(0 if ok else 5)


if __name__ == "__main__":
    main()
