"""Tabulate f(alpha) next to sqrt(2 alpha) on a log-spaced grid of rationals."""

import argparse
import sys
from fractions import Fraction

from sumproduct.cli import falpha_rows, render


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--points", type=int, default=40)
    ap.add_argument("--min-exp", type=int, default=-5, help="smallest alpha is 10**min_exp")
    ap.add_argument("--format", choices=["csv", "json-lines"], default="csv")
    args = ap.parse_args()
    alphas = []
    for i in range(args.points):
        e = args.min_exp * (1 - i / (args.points - 1))  # min_exp .. 0
        a = Fraction(10**e).limit_denominator(10**7) / 2
        if 0 < a < 1 and a not in alphas:
            alphas.append(a)
    rows = falpha_rows(alphas)
    for r in rows:
        r["ratio_to_asymptote"] = r["value_float"] / r["asymptote"]
    sys.stdout.write(render(rows, args.format))


if __name__ == "__main__":
    main()
