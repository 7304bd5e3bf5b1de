"""Seeded property suites over random (channel, density) instances.

Each suite draws its instances from ``rng_for(seed, suite_id, index)``, so
one instance can be regenerated without the others. A failing instance is
turned into a self-contained JSON record (channel, densities, parameters)
that :func:`replay` re-runs.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import io, sampling, theorems
from .channels import (Channel, build_channel, classify_channel, random_channel,
                       RANDOM_FAMILIES)
from .config import DEFAULT_DIMS, Tolerances
from .errors import PreconditionViolated, RenyiLabError
from .operators import BlockAlgebra, Density, Operator

SUITES = ("jensen", "monotone", "preservation", "jordan")
_SUITE_IDS = {"jensen": 1, "monotone": 2, "preservation": 3, "jordan": 4, "corpus": 5}

CONCAVE_ALPHAS = (0.3, 0.5, 0.9)
CONVEX_ALPHAS = (1.3, 2.0)
TRACE_ALPHAS = (2.5, 3.0)
RESOLVENT_S = (0.1, 1.0, 10.0)

T2_COUNTEREXAMPLE = (np.array([[1.0, 1.0], [1.0, 1.0]]), np.array([[2.0, 1.0], [1.0, 1.0]]))


@dataclass
class Violation:
    suite: str
    check: str
    detail: dict
    record: dict

    def to_json(self) -> dict:
        return {"suite": self.suite, "check": self.check, "detail": self.detail,
                "record": self.record}


@dataclass
class SuiteReport:
    suite: str
    seed: int
    instances: int
    checks: int = 0
    violations: list[Violation] = field(default_factory=list)
    stats: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {"suite": self.suite, "seed": self.seed, "instances": self.instances,
                "checks": self.checks, "violations": [v.to_json() for v in self.violations],
                "ok": self.ok, "stats": self.stats, "tolerances": self.tolerances,
                "seconds": round(self.seconds, 3)}


# -- checks: one function per check name, shared by suites and replay ---------------

def _json_safe(d: dict) -> dict:
    out = {}
    for k, v in d.items():
        if isinstance(v, float) and not math.isfinite(v):
            v = "inf" if v > 0 else ("-inf" if v < 0 else "nan")
        elif isinstance(v, (np.floating, np.integer, np.bool_)):
            v = v.item()
        out[k] = v
    return out


def _check_jensen_concave(o, p):
    v = theorems.jensen_concave_check(o["channel"], o["density"], p["alpha"], p["tol"])
    return v.holds, v.to_json()


def _check_jensen_convex(o, p):
    v = theorems.jensen_convex_check(o["channel"], o["density"], p["alpha"], p["tol"])
    return v.holds, v.to_json()


def _check_trace_jensen(o, p):
    v = theorems.trace_jensen_check(o["channel"], o["density"], p["alpha"], p["tol"])
    return v.holds, v.to_json()


def _check_resolvent_jensen(o, p):
    v = theorems.resolvent_jensen_check(o["channel"], o["density"], p["s"], p["tol"],
                                        p["identity_tol"])
    return v.holds, v.to_json()


def _check_monotone(o, p):
    v = theorems.monotonicity_check(o["u1"], o["u2"], p["alpha"], p["tol"],
                                    enforce_range=p.get("enforce_range", True))
    return v.holds != p.get("expect_violation", False), v.to_json()


def _check_preservation_isomorphism(o, p):
    r = theorems.preservation_test(o["channel"], o["density"], p["alpha"], p["tol"],
                                   p["tol_struct"])
    ok = (abs(r.delta_s) <= p["tol"] and r.multiplicativity_defect <= p["tol_struct"]
          and r.verdict == theorems.PRESERVED_ISOMORPHIC)
    return ok, r.to_json()


def _check_contrapositive(o, p):
    r = theorems.preservation_test(o["channel"], o["density"], p["alpha"], p["tol"],
                                   p["tol_struct"])
    counterexample = (abs(r.delta_s) <= p["tol"] and r.n_clusters >= 2
                      and r.multiplicativity_defect > p["tol_struct"])
    return not counterexample, r.to_json()


def _check_reduction(o, p):
    v = theorems.alpha_ge_2_reduction_check(o["channel"], o["density"], p["alpha"],
                                            p["gamma"], p["tol"])
    ok = v.holds
    if p.get("expect_equality"):
        scale = max(1.0, abs(v.lhs))
        ok = ok and abs(v.upper_gap) <= p["tol"] * scale and abs(v.lower_gap) <= p["tol"] * scale
    return ok, v.to_json()


def _check_relative_entropy(o, p):
    v = theorems.relative_entropy_invariance_test(o["channel"], o["density"], o["density2"],
                                                  p["tol"])
    ok = v.holds
    if p.get("expect_infinite"):
        ok = ok and math.isinf(v.d_before) and math.isinf(v.d_after)
    return ok, v.to_json()


def _check_profile(o, p):
    props = classify_channel(o["channel"])
    got = {k: getattr(props, k) for k in p["expected"]}
    return got == p["expected"], {"expected": p["expected"], "got": got,
                                  "jordan_defect": props.jordan_defect,
                                  "choi_min_eigenvalue": props.choi_min_eigenvalue}


CHECKS: dict[str, Callable] = {
    "jensen_concave": _check_jensen_concave,
    "jensen_convex": _check_jensen_convex,
    "trace_jensen": _check_trace_jensen,
    "resolvent_jensen": _check_resolvent_jensen,
    "monotone": _check_monotone,
    "preservation_isomorphism": _check_preservation_isomorphism,
    "contrapositive": _check_contrapositive,
    "reduction": _check_reduction,
    "relative_entropy": _check_relative_entropy,
    "profile": _check_profile,
}

_OBJECT_KEYS = ("channel", "density", "density2", "u1", "u2")


def make_record(check: str, objects: dict, params: dict) -> dict:
    rec = {"check": check, "params": _json_safe(params)}
    for key in _OBJECT_KEYS:
        if key in objects:
            obj = objects[key]
            rec[key] = (io.channel_to_json(obj) if isinstance(obj, Channel)
                        else io.operator_to_json(obj))
    return rec


def load_record(record: dict) -> tuple[str, dict, dict]:
    check = record["check"]
    if check not in CHECKS:
        raise io.FormatError(f"unknown check {check!r} in instance record")
    objects = {}
    for key in _OBJECT_KEYS:
        if key in record:
            if key == "channel":
                objects[key] = io.channel_from_json(record[key])
            else:
                objects[key] = io.operator_from_json(record[key], density=True)
    return check, objects, dict(record.get("params", {}))


def run_check(check: str, objects: dict, params: dict) -> tuple[bool, dict]:
    """Run one named check; unexpected library errors count as failures."""
    try:
        ok, detail = CHECKS[check](objects, params)
    except PreconditionViolated:
        raise
    except RenyiLabError as exc:
        ok, detail = False, {"error": f"{type(exc).__name__}: {exc}"}
    return bool(ok), _json_safe(detail)


def replay(record: dict) -> tuple[bool, dict]:
    """Re-run an archived instance; returns ``(passed, detail)``."""
    check, objects, params = load_record(record)
    return run_check(check, objects, params)


# -- instance generation --------------------------------------------------------

def algebras_from(dims: Iterable[Sequence[int]] = DEFAULT_DIMS,
                  weights: Sequence[Sequence[float] | None] | None = None
                  ) -> list[BlockAlgebra]:
    dims = [tuple(d) for d in dims]
    weights = weights or [None] * len(dims)
    return [BlockAlgebra(d, w) for d, w in zip(dims, weights)]


def random_family_channel(algebra: BlockAlgebra, rng: np.random.Generator,
                          families: Sequence[str] = RANDOM_FAMILIES) -> Channel:
    family = str(rng.choice(list(families)))
    ch = random_channel(algebra, family, int(rng.integers(2 ** 31)))
    ch.family = family
    return ch


def random_test_density(algebra: BlockAlgebra, rng: np.random.Generator,
                        p_degenerate: float = 0.25) -> Density:
    degenerate = algebra.dim >= 2 and rng.random() < p_degenerate
    return sampling.random_density(algebra, rng, degenerate=degenerate)


def _swap_permutation(algebra: BlockAlgebra) -> list[int] | None:
    dims, w = algebra.block_dims, algebra.trace_weights
    for i in range(len(dims)):
        for j in range(i + 1, len(dims)):
            if dims[i] == dims[j] and w[i] == w[j]:
                perm = list(range(len(dims)))
                perm[i], perm[j] = j, i
                return perm
    return None


def isomorphism_channel(algebra: BlockAlgebra, kind: str,
                        rng: np.random.Generator) -> Channel:
    """``haar`` unitary conjugation, ``transpose`` in a random basis, or ``block_swap``."""
    if kind == "haar":
        return build_channel(algebra, "unitary_conjugation",
                             unitary=sampling.random_unitary(algebra, rng))
    if kind == "transpose":
        return build_channel(algebra, "transpose", basis=sampling.random_unitary(algebra, rng))
    if kind == "block_swap":
        perm = _swap_permutation(algebra)
        if perm is None:
            raise PreconditionViolated(f"{algebra} has no pair of exchangeable blocks")
        return build_channel(algebra, "block_permutation", permutation=perm)
    raise ValueError(f"unknown isomorphism kind {kind!r}")


def commuting_pinching_instance(algebra: BlockAlgebra, rng: np.random.Generator
                                ) -> tuple[Channel, Density]:
    """A pinching together with a density it leaves fixed (entropy trivially preserved)."""
    from .channels import _random_pinching
    phi = _random_pinching(algebra, rng)
    h = Density.from_operator(phi(sampling.random_density(algebra, rng)))
    phi.family = "random_pinching"
    return phi, h


# -- suites ---------------------------------------------------------------------

class _Runner:
    def __init__(self, suite: str, seed: int, instances: int, tolerances: Tolerances,
                 progress: Callable[[str], None] | None = None):
        self.report = SuiteReport(suite, seed, instances, tolerances=tolerances.to_json())
        self.progress = progress
        self.last_detail: dict = {}

    def check(self, name: str, objects: dict, params: dict) -> bool:
        ok, detail = run_check(name, objects, params)
        self.last_detail = detail
        self.report.checks += 1
        self.report.stats[name] = self.report.stats.get(name, 0) + 1
        if not ok:
            self.report.violations.append(
                Violation(self.report.suite, name, detail, make_record(name, objects, params)))
        return ok


def jensen_suite(instances: int, seed: int, algebras: Sequence[BlockAlgebra],
                 tolerances: Tolerances = Tolerances(), progress=None) -> SuiteReport:
    """Jensen-type order checks on random positive unital trace-preserving channels."""
    t0 = time.perf_counter()
    run = _Runner("jensen", seed, instances, tolerances, progress)
    tol = tolerances.jensen
    for i in range(instances):
        rng = sampling.rng_for(seed, _SUITE_IDS["jensen"], i)
        alg = algebras[i % len(algebras)]
        objs = {"channel": random_family_channel(alg, rng),
                "density": random_test_density(alg, rng)}
        for a in CONCAVE_ALPHAS:
            run.check("jensen_concave", objs, {"alpha": a, "tol": tol})
        for a in CONVEX_ALPHAS:
            run.check("jensen_convex", objs, {"alpha": a, "tol": tol})
        for a in TRACE_ALPHAS:
            run.check("trace_jensen", objs, {"alpha": a, "tol": tol})
        for s in RESOLVENT_S:
            run.check("resolvent_jensen", objs,
                      {"s": s, "tol": tol, "identity_tol": tolerances.resolvent_identity})
    run.report.seconds = time.perf_counter() - t0
    return run.report


def monotone_suite(instances: int, seed: int, algebras: Sequence[BlockAlgebra],
                   tolerances: Tolerances = Tolerances(), inject_violation: bool = False,
                   progress=None) -> SuiteReport:
    """Operator monotonicity of ``t^(1/2)`` plus the ``t^2`` negative control."""
    t0 = time.perf_counter()
    run = _Runner("monotone", seed, instances, tolerances, progress)
    tol = tolerances.jensen
    for i in range(instances):
        rng = sampling.rng_for(seed, _SUITE_IDS["monotone"], i)
        alg = algebras[i % len(algebras)]
        u1, u2 = sampling.random_ordered_pair(alg, rng)
        run.check("monotone", {"u1": u1, "u2": u2}, {"alpha": 0.5, "tol": tol})
    m2 = BlockAlgebra((2,))
    fixture = {"u1": Density(m2, [T2_COUNTEREXAMPLE[0]]), "u2": Density(m2, [T2_COUNTEREXAMPLE[1]])}
    run.check("monotone", fixture, {"alpha": 2.0, "tol": tol, "enforce_range": False,
                                    "expect_violation": True})
    if inject_violation:
        # the same pair presented as if t^2 were monotone: must be caught
        run.check("monotone", fixture, {"alpha": 2.0, "tol": tol, "enforce_range": False})
    run.report.seconds = time.perf_counter() - t0
    return run.report


def preservation_suite(instances: int, seed: int, algebras: Sequence[BlockAlgebra],
                       tolerances: Tolerances = Tolerances(),
                       alpha_grid: Sequence[float] = (0.5, 2.0, 3.0),
                       progress=None) -> SuiteReport:
    """Isomorphisms preserve entropy; preserved entropy forces multiplicativity."""
    t0 = time.perf_counter()
    run = _Runner("preservation", seed, instances, tolerances, progress)
    tol, tol_s = tolerances.entropy, tolerances.structural
    for i in range(instances):
        rng = sampling.rng_for(seed, _SUITE_IDS["preservation"], i)
        alg = algebras[i % len(algebras)]
        kinds = ["haar", "transpose"] + (["block_swap"] if _swap_permutation(alg) else [])
        iso = isomorphism_channel(alg, kinds[i % len(kinds)], rng)
        h = random_test_density(alg, rng)
        other = random_family_channel(alg, rng)
        pin, hc = commuting_pinching_instance(alg, rng)
        for a in alpha_grid:
            params = {"alpha": a, "tol": tol, "tol_struct": tol_s}
            run.check("preservation_isomorphism", {"channel": iso, "density": h}, params)
            run.check("contrapositive", {"channel": other, "density": h}, params)
            run.check("contrapositive", {"channel": pin, "density": hc}, params)
        red = {"alpha": 3.0, "gamma": 1.5, "tol": tolerances.reduction}
        run.check("reduction", {"channel": iso, "density": h}, {**red, "expect_equality": True})
        run.check("reduction", {"channel": other, "density": h}, red)
    run.report.seconds = time.perf_counter() - t0
    return run.report


BUILTIN_PROFILES = {
    "identity": dict(positive=True, completely_positive=True, unital=True,
                     trace_preserving=True, jordan_multiplicative=True, injective=True),
    "unitary_conjugation": dict(positive=True, completely_positive=True, unital=True,
                                trace_preserving=True, jordan_multiplicative=True,
                                injective=True),
    "transpose": dict(positive=True, completely_positive=False, unital=True,
                      trace_preserving=True, jordan_multiplicative=True, injective=True),
    "pinching": dict(positive=True, completely_positive=True, unital=True,
                     trace_preserving=True, jordan_multiplicative=False, injective=False),
    "mixture": dict(positive=True, completely_positive=False, unital=True,
                    trace_preserving=True, jordan_multiplicative=False, injective=False),
    "block_permutation": dict(positive=True, completely_positive=True, unital=True,
                              trace_preserving=True, jordan_multiplicative=True,
                              injective=True),
}


def builtin_table(algebra: BlockAlgebra, rng: np.random.Generator) -> dict[str, Channel]:
    """The six documented builtins on ``algebra`` (block permutation only if one exists)."""
    out = {"identity": build_channel(algebra, "identity"),
           "unitary_conjugation": build_channel(algebra, "unitary_conjugation",
                                                unitary=sampling.random_unitary(algebra, rng)),
           "transpose": build_channel(algebra, "transpose")}
    ps = []
    for k, n in enumerate(algebra.block_dims):
        parts = sampling.random_projection_partition(n, rng, parts=max(1, min(n, 2)))
        for piece in parts:
            blocks = [np.zeros((m, m), dtype=complex) for m in algebra.block_dims]
            blocks[k] = piece
            ps.append(Operator(algebra, blocks))
    out["pinching"] = build_channel(algebra, "pinching", projections=ps)
    out["mixture"] = build_channel(algebra, "mixture",
                                   channels=[out["identity"], out["transpose"]],
                                   weights=[0.5, 0.5])
    perm = _swap_permutation(algebra)
    if perm is not None:
        out["block_permutation"] = build_channel(algebra, "block_permutation",
                                                 permutation=perm)
    return out


def jordan_suite(instances: int, seed: int, algebras: Sequence[BlockAlgebra],
                 tolerances: Tolerances = Tolerances(), progress=None) -> SuiteReport:
    """Builtin classification table and relative-entropy invariance under isomorphisms."""
    t0 = time.perf_counter()
    run = _Runner("jordan", seed, instances, tolerances, progress)
    for j, alg in enumerate(algebras):
        rng = sampling.rng_for(seed, _SUITE_IDS["jordan"], 10 ** 6 + j)
        for name, ch in builtin_table(alg, rng).items():
            if name == "pinching" and max(alg.block_dims) < 2:
                continue  # no nontrivial pinching of a commutative algebra
            run.check("profile", {"channel": ch}, {"expected": BUILTIN_PROFILES[name]})
    for i in range(instances):
        rng = sampling.rng_for(seed, _SUITE_IDS["jordan"], i)
        alg = algebras[i % len(algebras)]
        kinds = ["haar", "transpose"] + (["block_swap"] if _swap_permutation(alg) else [])
        iso = isomorphism_channel(alg, kinds[i % len(kinds)], rng)
        h, k = sampling.random_density(alg, rng), sampling.random_density(alg, rng)
        params = {"tol": tolerances.relative_entropy}
        run.check("relative_entropy", {"channel": iso, "density": h, "density2": k}, params)
        if alg.dim >= 2 and i % 4 == 0:
            k_def = rank_deficient_density(alg, rng)
            run.check("relative_entropy", {"channel": iso, "density": h, "density2": k_def},
                      {**params, "expect_infinite": True})
    run.report.seconds = time.perf_counter() - t0
    return run.report


def rank_deficient_density(algebra: BlockAlgebra, rng: np.random.Generator) -> Density:
    """Density with a kernel of dimension at least one."""
    lam = rng.uniform(0.05, 1.0, algebra.dim)
    lam[int(rng.integers(algebra.dim))] = 0.0
    blocks, pos = [], 0
    for n in algebra.block_dims:
        u = sampling.haar_unitary(n, rng)
        blocks.append((u * lam[pos:pos + n]) @ u.conj().T)
        pos += n
    return Density(algebra, blocks)


def contrapositive_corpus(instances: int, seed: int, algebras: Sequence[BlockAlgebra],
                          tolerances: Tolerances = Tolerances(),
                          alpha_grid: Sequence[float] = (0.5, 2.0, 3.0),
                          densities_per_channel: int = 4, progress=None) -> SuiteReport:
    """At least ``instances`` (channel, density, alpha) triples checked for the contrapositive.

    Channels cycle through the random families, the isomorphism builtins and
    pinchings paired with densities they fix (the only non-isomorphic maps
    here that preserve entropy).
    """
    t0 = time.perf_counter()
    run = _Runner("corpus", seed, instances, tolerances, progress)
    params = {"tol": tolerances.entropy, "tol_struct": tolerances.structural}
    per_channel = densities_per_channel * len(alpha_grid)
    n_channels = -(-instances // per_channel)
    preserved = 0
    for c in range(n_channels):
        rng = sampling.rng_for(seed, _SUITE_IDS["corpus"], c)
        alg = algebras[c % len(algebras)]
        mode = c % 3
        pairs = []
        if mode == 0:
            phi = random_family_channel(alg, rng)
            pairs = [(phi, random_test_density(alg, rng)) for _ in range(densities_per_channel)]
        elif mode == 1:
            kinds = ["haar", "transpose"] + (["block_swap"] if _swap_permutation(alg) else [])
            phi = isomorphism_channel(alg, kinds[c // 3 % len(kinds)], rng)
            pairs = [(phi, random_test_density(alg, rng)) for _ in range(densities_per_channel)]
        else:
            for _ in range(densities_per_channel):
                pairs.append(commuting_pinching_instance(alg, rng))
        for phi, h in pairs:
            for a in alpha_grid:
                run.check("contrapositive", {"channel": phi, "density": h},
                          {"alpha": a, **params})
                d = run.last_detail
                preserved += abs(d["delta_s"]) <= params["tol"] and d["n_clusters"] >= 2
    run.report.instances = run.report.checks
    run.report.stats["preserved_multi_cluster"] = preserved
    run.report.seconds = time.perf_counter() - t0
    return run.report


def run_suites(names: Sequence[str], instances: int, seed: int,
               algebras: Sequence[BlockAlgebra], tolerances: Tolerances = Tolerances(),
               alpha_grid: Sequence[float] = (0.5, 2.0, 3.0),
               inject_violation: bool = False) -> list[SuiteReport]:
    reports = []
    for name in names:
        if name == "jensen":
            reports.append(jensen_suite(instances, seed, algebras, tolerances))
        elif name == "monotone":
            reports.append(monotone_suite(instances, seed, algebras, tolerances,
                                          inject_violation=inject_violation))
        elif name == "preservation":
            reports.append(preservation_suite(instances, seed, algebras, tolerances,
                                              alpha_grid))
        elif name == "jordan":
            reports.append(jordan_suite(instances, seed, algebras, tolerances))
        else:
            raise ValueError(f"unknown suite {name!r}")
    if inject_violation and "monotone" not in names:
        reports.append(monotone_suite(0, seed, algebras, tolerances, inject_violation=True))
    return reports
