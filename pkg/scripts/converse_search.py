#!/usr/bin/env python3
"""Exploratory search for entropy-preserving maps that are not multiplicative.

Draws random positive unital trace-preserving channels and densities, keeps the
instances where |S_alpha(phi(h)) - S_alpha(h)| is small, and reports the
smallest entropy change seen among clearly non-multiplicative instances. A
counterexample to the rigidity statement would show up as a tiny delta S with a
large multiplicativity defect; none is expected.
"""
import argparse

from renyi_lab import sampling
from renyi_lab.config import DEFAULT_DIMS
from renyi_lab.suites import algebras_from, random_family_channel, random_test_density
from renyi_lab.theorems import preservation_test


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--alpha", type=float, default=2.0)
    ap.add_argument("--defect-floor", type=float, default=1e-3,
                    help="multiplicativity defect counted as clearly non-multiplicative")
    args = ap.parse_args()

    algebras = algebras_from(DEFAULT_DIMS)
    best = None
    preserved = 0
    for i in range(args.trials):
        rng = sampling.rng_for(args.seed, i)
        alg = algebras[i % len(algebras)]
        phi = random_family_channel(alg, rng)
        h = random_test_density(alg, rng)
        r = preservation_test(phi, h, args.alpha)
        if abs(r.delta_s) <= r.tol:
            preserved += 1
        if r.n_clusters >= 2 and r.multiplicativity_defect >= args.defect_floor:
            if best is None or abs(r.delta_s) < abs(best[0].delta_s):
                best = (r, phi, alg)
    print(f"{args.trials} trials at alpha = {args.alpha}: {preserved} with |delta S| <= 1e-10")
    if best:
        r, phi, alg = best
        print(f"smallest |delta S| among defect >= {args.defect_floor:g}: {abs(r.delta_s):.3e} "
              f"({phi.family} on {list(alg.block_dims)}, defect {r.multiplicativity_defect:.3e})")


if __name__ == "__main__":
    main()
