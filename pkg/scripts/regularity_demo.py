"""Run the weak regularity decomposition and the structured superset on a few
structured and random subsets of Z/p, reporting iterations, cells and defects."""

import argparse
import sys

import numpy as np

from sumproduct import regularity as reg
from sumproduct.cli import render
from sumproduct.groups import make_group, mul_subgroup
from sumproduct.setops import GSet
from sumproduct.spectral import GridFunction
from sumproduct.sumprod import interval


def inputs(p, seed):
    G = make_group([p])
    rng = np.random.default_rng(seed)
    return [
        ("interval", interval(G, 0, int(0.4 * p))),
        ("squares", mul_subgroup(p, 2)),
        ("random", GSet.from_bits(G, rng.random(p) < 0.3)),
        ("interval+noise", interval(G, 0, p // 4) | GSet.from_bits(G, rng.random(p) < 0.05)),
    ]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", type=int, nargs="+", default=[101, 211, 401])
    ap.add_argument("--delta", type=float, nargs="+", default=[0.2, 0.25, 0.3])
    ap.add_argument("--eps", default="1/8")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--format", choices=["csv", "json-lines"], default="csv")
    args = ap.parse_args()
    rows = []
    for p in args.p:
        for name, A in inputs(p, args.seed):
            f = GridFunction(A.group, A.indicator(), bounded=True)
            for d in args.delta:
                dec = reg.weak_regularity(f, d)
                rows.append(
                    {"p": p, "set": name, "delta": d, "iterations": dec.iterations, "cells": dec.factor.m,
                     "final_u2": dec.final_u2, "energy": dec.energy_trace[-1]}
                )
            _, rep = reg.structured_superset(A, args.eps, reg.delta_for_eps(args.eps))
            rows.append(
                {"p": p, "set": name, "delta": reg.delta_for_eps(args.eps), "iterations": rep.decomposition.iterations,
                 "cells": rep.decomposition.factor.m, "final_u2": rep.decomposition.final_u2,
                 "energy": rep.decomposition.energy_trace[-1], "missing": rep.missing, "spurious": rep.spurious}
            )
    sys.stdout.write(render(rows, args.format))


if __name__ == "__main__":
    main()
