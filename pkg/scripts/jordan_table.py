#!/usr/bin/env python3
"""Classify the builtin channels on a few algebras and print the flag table."""
import argparse

from renyi_lab import sampling
from renyi_lab.channels import classify_channel
from renyi_lab.operators import BlockAlgebra
from renyi_lab.suites import BUILTIN_PROFILES, builtin_table

FLAGS = ("unital", "trace_preserving", "positive", "completely_positive",
         "jordan_multiplicative", "injective")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dims", action="append", default=None,
                    help="block dimensions, e.g. 2,2 (repeatable)")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    dims_list = args.dims or ["2", "3", "2,2"]

    short = "".join(f"{f[:6]:>8}" for f in FLAGS)
    for text in dims_list:
        alg = BlockAlgebra(tuple(int(d) for d in text.split(",")))
        print(f"\nalgebra dims {list(alg.block_dims)}")
        print(f"{'channel':<22}{short}{'jordan defect':>15}{'choi min':>11}  match")
        for name, ch in builtin_table(alg, sampling.rng_for(args.seed)).items():
            p = classify_channel(ch)
            cells = "".join(f"{('yes' if getattr(p, f) else 'no'):>8}" for f in FLAGS)
            match = all(getattr(p, f) == v for f, v in BUILTIN_PROFILES[name].items())
            print(f"{name:<22}{cells}{p.jordan_defect:>15.2e}"
                  f"{p.choi_min_eigenvalue:>11.3f}  {match}")


if __name__ == "__main__":
    main()
