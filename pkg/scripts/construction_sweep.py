"""Sweep the [1,N] cap H construction at one prime: ratio versus the
envelope max(2 l |A|/p, 1/l), and the Polya-Vinogradov deviation of |A|."""

import argparse
import sys
from fractions import Fraction

from sumproduct.cli import render
from sumproduct.groups import divisors
from sumproduct.sumprod import ConstructionParams, construct_extremal, polya_vinogradov_report


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", type=int, default=9973)
    ap.add_argument("--max-ell", type=int, default=6)
    ap.add_argument("--alphas", nargs="+", default=["0.01", "0.02", "0.05", "0.08", "0.1"])
    ap.add_argument("--format", choices=["csv", "json-lines"], default="csv")
    args = ap.parse_args()
    rows = []
    for ell in (d for d in divisors(args.p - 1) if d <= args.max_ell):
        for a in args.alphas:
            params = ConstructionParams.from_alpha(args.p, ell, a)
            _, r = construct_extremal(params)
            pv = polya_vinogradov_report(params)
            rows.append(
                {
                    "ell": ell,
                    "alpha": a,
                    "N": params.N,
                    "card": r.card,
                    "ratio": float(r.ratio),
                    "envelope": float(r.envelope),
                    "gap": float(r.ratio - r.envelope),
                    "fluctuation_term": float(Fraction(2 * ell, args.p) * (Fraction(params.N, ell) - r.card)),
                    "pv_deviation": pv.deviation,
                    "pv_bound": pv.bound,
                }
            )
    sys.stdout.write(render(rows, args.format))


if __name__ == "__main__":
    main()
