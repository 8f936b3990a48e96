"""Defect sweep over (Q, H) as CSV: Q,H,L,defect,bound,ratio."""
import argparse
import sys

from twistlab.circle import DEFECT_CSV_HEADER, build_farey_system, chi_l2_defect


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--Q", type=int, nargs="+", default=[64, 128, 256])
    ap.add_argument("--H", type=float, nargs="+", default=[2, 8, 32])
    args = ap.parse_args(argv)
    print(DEFECT_CSV_HEADER)
    for Q in args.Q:
        for H in args.H:
            print(chi_l2_defect(build_farey_system(Q, H)).csv_row())
            sys.stdout.flush()


if __name__ == "__main__":
    main()
