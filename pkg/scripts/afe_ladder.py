"""Functional-equation check along an X ladder, with the diagnostic variants.

Prints lhs (sharp sum), rhs, their relative gap, and the side quantities that
locate the gap: the smoothed-sum moment and the averages over the rationals
with denominators in (Q, 2Q], Q = sqrt(X X1).
"""
import argparse
import json

from twistlab.cli import jsonable
from twistlab.moments import afe_check


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--star", default="d", choices=("d", "f"))
    ap.add_argument("--s", type=float, default=1.0)
    ap.add_argument("--X", type=int, nargs="+", default=[2048, 4096, 8192])
    ap.add_argument("--X1", type=float, default=16.0)
    args = ap.parse_args(argv)
    for X in args.X:
        r = afe_check(args.star, args.s, X, X1=args.X1)
        print(json.dumps(jsonable(r.to_dict()), sort_keys=True))


if __name__ == "__main__":
    main()
