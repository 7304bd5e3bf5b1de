"""Executable checks of operator Jensen inequalities and entropy-preservation rigidity.

Every check takes a :class:`~renyi_lab.channels.Channel`, looks up its
classification flags and refuses (``PreconditionViolated``) when the
inequality being tested has no warrant for that map. Positivity is required
throughout, also where only unitality or trace preservation would appear in
a bare statement of the result.

Tolerances: entropy equality is decided at ``tol = 1e-10``; structural
defects (operator equality, multiplicativity on spectral projections,
resolvent equality) at ``tol_struct = 1e-7``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

from .channels import Channel, apply_channel, classify_channel
from .entropy import EntropyValue, check_alpha, relative_entropy, renyi_entropy
from .errors import InvalidAlpha, NumericalFailure, PreconditionViolated
from .integrals import ConvergenceTrace, _nondecreasing, _nonincreasing
from .operators import (DEFAULT_CLUSTER_TOL, HermitianOperator, OrderVerdict, as_hermitian,
                        l1_norm, loewner_leq, power, resolvent, resolvent_product,
                        spectral_decompose, support_projection, trace)
from . import sampling

ENTROPY_TOL = 1e-10
STRUCT_TOL = 1e-7
JENSEN_TOL = 1e-8
IDENTITY_TOL = 1e-9
RESOLVENT_GRID = (0.1, 1.0, 10.0)

PRESERVED_ISOMORPHIC = "preserved-and-isomorphic"
PRESERVED_INCONCLUSIVE = "preserved-but-inconclusive"
NOT_PRESERVED = "not-preserved"


def _require(phi: Channel, *flags: str) -> None:
    props = classify_channel(phi)
    missing = [f for f in flags if not getattr(props, f)]
    if missing:
        raise PreconditionViolated(f"{phi!r} is not {', '.join(missing)}")


def _image(phi: Channel, x: HermitianOperator) -> HermitianOperator:
    y = apply_channel(phi, x)
    return as_hermitian(y, atol=1e-9 * max(1.0, x.norm()))


def _scaled(tol: float, *values: float) -> float:
    return tol * max(1.0, *(abs(v) for v in values))


# -- Jensen-type order checks ------------------------------------------------

def jensen_concave_check(phi: Channel, h: HermitianOperator, alpha: float,
                         tol: float = JENSEN_TOL) -> OrderVerdict:
    """``phi(h^alpha) <= phi(h)^alpha`` for ``alpha`` in (0, 1)."""
    if not 0 < alpha < 1:
        raise InvalidAlpha(f"alpha must lie in (0, 1), got {alpha}")
    _require(phi, "positive", "unital")
    return loewner_leq(_image(phi, power(h, alpha)), power(_image(phi, h), alpha), tol)


def jensen_convex_check(phi: Channel, h: HermitianOperator, alpha: float,
                        tol: float = JENSEN_TOL) -> OrderVerdict:
    """``phi(h)^alpha <= phi(h^alpha)`` for ``alpha`` in (1, 2]."""
    if not 1 < alpha <= 2:
        raise InvalidAlpha(f"alpha must lie in (1, 2], got {alpha}")
    _require(phi, "positive", "unital")
    return loewner_leq(power(_image(phi, h), alpha), _image(phi, power(h, alpha)), tol)


@dataclass(frozen=True)
class ResolventVerdict:
    """Both forms of the resolvent inequality plus the defect of the exact identity."""

    holds: bool
    s: float
    product_form: OrderVerdict
    inverse_form: OrderVerdict
    identity_defect: float
    identity_ok: bool

    def to_json(self) -> dict:
        return {"holds": self.holds, "s": self.s, "product_form": self.product_form.to_json(),
                "inverse_form": self.inverse_form.to_json(),
                "identity_defect": self.identity_defect, "identity_ok": self.identity_ok}


def resolvent_jensen_check(phi: Channel, h: HermitianOperator, s: float,
                           tol: float = JENSEN_TOL,
                           identity_tol: float = IDENTITY_TOL) -> ResolventVerdict:
    """Check ``phi(h (s+h)^-1) <= phi(h) (s+phi(h))^-1`` and ``phi((s+h)^-1) >= (s+phi(h))^-1``.

    Also measures how far
    ``[phi(h^2 (s+h)^-1) - phi(h)^2 (s+phi(h))^-1] - s^2 [phi((s+h)^-1) - (s+phi(h))^-1]``
    is from zero. That expression vanishes identically for unital maps, since
    ``t^2/(s+t) = t - s + s^2/(s+t)``.
    """
    _require(phi, "positive", "unital")
    fh = _image(phi, h)
    product = loewner_leq(_image(phi, resolvent_product(h, s)), resolvent_product(fh, s), tol)
    inverse = loewner_leq(resolvent(fh, s), _image(phi, resolvent(h, s)), tol)
    h2 = h @ h
    lhs = (_image(phi, as_hermitian(h2 @ resolvent(h, s)))
           - as_hermitian(fh @ fh @ resolvent(fh, s)))
    rhs = (_image(phi, resolvent(h, s)) - resolvent(fh, s)) * (s * s)
    defect = (lhs - rhs).norm()
    identity_ok = defect <= identity_tol
    return ResolventVerdict(product.holds and inverse.holds and identity_ok, float(s),
                            product, inverse, defect, identity_ok)


@dataclass(frozen=True)
class TraceVerdict:
    holds: bool
    gap: float
    lhs: float
    rhs: float
    tol: float

    def to_json(self) -> dict:
        return asdict(self)


def trace_jensen_check(phi: Channel, h: HermitianOperator, alpha: float,
                       tol: float = JENSEN_TOL) -> TraceVerdict:
    """``tau(phi(h^alpha)) >= tau(phi(h)^alpha)`` for ``alpha > 1``.

    ``tau(phi(h^alpha)) = tau(h^alpha)`` is verified on the way; a mismatch
    means the trace-preservation flag is wrong and raises ``NumericalFailure``.
    """
    if not alpha > 1:
        raise InvalidAlpha(f"alpha must exceed 1, got {alpha}")
    _require(phi, "positive", "unital", "trace_preserving")
    ha = power(h, alpha)
    lhs = trace(_image(phi, ha))
    direct = trace(ha)
    if abs(lhs - direct) > 1e-9 * max(1.0, abs(direct)):
        raise NumericalFailure(f"trace not preserved on h^alpha: {lhs} vs {direct}")
    rhs = trace(power(_image(phi, h), alpha))
    gap = lhs - rhs
    return TraceVerdict(gap >= -_scaled(tol, lhs), gap, lhs, rhs, tol)


def monotonicity_check(u1: HermitianOperator, u2: HermitianOperator, alpha: float,
                       tol: float = JENSEN_TOL, *, enforce_range: bool = True) -> OrderVerdict:
    """Given ``u1 <= u2``, decide ``u1^alpha <= u2^alpha``.

    ``enforce_range=False`` lifts the restriction ``alpha`` in (0, 1). It is a
    hook for negative controls (``t^2`` is not operator monotone), not for
    regular use.
    """
    if enforce_range and not 0 < alpha < 1:
        raise InvalidAlpha(f"alpha must lie in (0, 1), got {alpha}")
    pre = loewner_leq(u1, u2, tol)
    if not pre.holds:
        raise PreconditionViolated(f"u1 <= u2 fails (lambda_min = {pre.lambda_min:.3e})")
    return loewner_leq(power(u1, alpha), power(u2, alpha), tol)


def l1_power_continuity_check(xs: Sequence[HermitianOperator], x: HermitianOperator,
                              alpha: float, tol: float = 1e-9,
                              order_tol: float = 1e-10) -> ConvergenceTrace:
    """Follow ``||x_n^alpha - x^alpha||_1`` along an increasing sequence ``x_n -> x``.

    ``monotone_flag`` records that the gaps do not increase and the traces
    ``tau(x_n^alpha)`` do not decrease; ``converged`` that the last gap is
    within ``tol``. ``loewner_ok`` holds ``x_n^alpha <= x^alpha`` per stage.
    """
    if not 0 < alpha < 1:
        raise InvalidAlpha(f"alpha must lie in (0, 1), got {alpha}")
    if not xs:
        raise PreconditionViolated("empty sequence")
    chain = list(xs) + [x]
    for a, b in zip(chain, chain[1:]):
        if not loewner_leq(a, b, order_tol).holds:
            raise PreconditionViolated("sequence is not increasing below its limit")
    dist = [l1_norm(xn - x) for xn in xs]
    if not _nonincreasing(dist):
        raise PreconditionViolated("||x_n - x||_1 does not decrease along the sequence")
    xa = power(x, alpha)
    values, gaps, order_ok = [], [], []
    for xn in xs:
        xna = power(xn, alpha)
        values.append(trace(xna))
        gaps.append(l1_norm(xna - xa))
        order_ok.append(loewner_leq(xna, xa, order_tol).holds)
    monotone = _nondecreasing(values) and _nonincreasing(gaps)
    return ConvergenceTrace("power-continuity", float(alpha), tuple(range(1, len(xs) + 1)),
                            tuple(values), tuple(gaps), tuple(dist), tuple(order_ok),
                            monotone, converged=gaps[-1] <= tol)


# -- entropy preservation ---------------------------------------------------

@dataclass(frozen=True)
class PreservationReport:
    """Outcome of comparing ``S_alpha(h)`` with ``S_alpha(phi(h))``.

    ``delta_s`` is ``S_alpha(phi(h)) - S_alpha(h)`` (signed); the verdict
    uses its absolute value.
    """

    alpha: float
    s_before: EntropyValue
    s_after: EntropyValue
    delta_s: float
    trace_equality_defect: float
    operator_equality_defect: float
    multiplicativity_defect: float
    min_projection_image_norm: float
    n_clusters: int
    cluster_gap: float
    resolvent_defect: float | None
    verdict: str
    tol: float
    tol_struct: float

    def to_json(self) -> dict:
        out = {k: v for k, v in asdict(self).items() if k not in ("s_before", "s_after")}
        out["s_before"] = self.s_before.to_json()
        out["s_after"] = self.s_after.to_json()
        out["cluster_gap"] = None if math.isinf(self.cluster_gap) else self.cluster_gap
        return out


def multiplicativity_defect(phi: Channel, projections: Sequence[HermitianOperator]
                            ) -> tuple[float, float]:
    """``max_ij ||phi(e_i) phi(e_j) - delta_ij phi(e_i)||`` and ``min_i ||phi(e_i)||``."""
    images = [_image(phi, p) for p in projections]
    worst = 0.0
    for i, a in enumerate(images):
        for j, b in enumerate(images):
            d = a @ b - a if i == j else a @ b
            worst = max(worst, d.norm())
    return worst, min(a.norm() for a in images)


def preservation_test(phi: Channel, h: HermitianOperator, alpha: float,
                      tol: float = ENTROPY_TOL, tol_struct: float = STRUCT_TOL,
                      s_grid: Sequence[float] = RESOLVENT_GRID,
                      cluster_tol: float = DEFAULT_CLUSTER_TOL) -> PreservationReport:
    """Compare entropies before and after ``phi``; test the structure forced by equality.

    The verdict is ``preserved-and-isomorphic`` when ``|delta_s| <= tol``,
    ``phi(h^alpha) = phi(h)^alpha`` and ``phi`` is multiplicative and nonzero
    on the spectral projections of ``h`` (all within ``tol_struct``), and the
    resolvent equality holds on ``s_grid``. It is ``preserved-but-inconclusive``
    when the entropy is preserved but the structural checks do not certify
    it. Otherwise it is ``not-preserved``.
    """
    alpha = check_alpha(alpha)
    _require(phi, "positive", "unital", "trace_preserving")
    fh = _image(phi, h)
    before = renyi_entropy(h, alpha, cluster_tol)
    after = renyi_entropy(fh, alpha, cluster_tol)
    delta = after.value - before.value

    f_ha = _image(phi, power(h, alpha, cluster_tol))
    fh_a = power(fh, alpha, cluster_tol)
    trace_defect = abs(trace(f_ha) - trace(fh_a))
    op_defect = l1_norm(f_ha - fh_a)

    dec = spectral_decompose(as_hermitian(h), cluster_tol)
    mult, min_image = multiplicativity_defect(phi, dec.projections)

    preserved = abs(delta) <= tol
    if preserved:
        # equal entropies and equal tau(h) force equal tau(h^alpha) up to first order in delta
        allowed = 2 * tol * max(1.0, abs(1 - alpha) * before.trace_h_alpha) \
            + 1e-12 * before.trace_h_alpha
        if trace_defect > allowed:
            raise NumericalFailure(f"entropy preserved but trace defect {trace_defect:.3e} "
                                   f"exceeds {allowed:.3e}")
    isomorphic = preserved and op_defect <= tol_struct and mult <= tol_struct \
        and min_image > tol_struct
    res_defect = None
    if isomorphic:
        res_defect = max((resolvent_product(fh, s, cluster_tol)
                          - _image(phi, resolvent_product(h, s, cluster_tol))).norm()
                         for s in s_grid)
        isomorphic = res_defect <= tol_struct
    verdict = (PRESERVED_ISOMORPHIC if isomorphic
               else PRESERVED_INCONCLUSIVE if preserved else NOT_PRESERVED)
    return PreservationReport(alpha, before, after, delta, trace_defect, op_defect, mult,
                              min_image, dec.rank, dec.cluster_gap, res_defect, verdict,
                              tol, tol_struct)


# -- Jordan structure ----------------------------------------------------------

@dataclass(frozen=True)
class JordanVerdict:
    is_jordan_isomorphism: bool
    defect: float
    injective: bool
    min_singular_value: float
    tol: float
    consistency_samples: int = 0

    def to_json(self) -> dict:
        return asdict(self)


CONSISTENCY_ALPHAS = (0.5, 2.0, 3.0)


def jordan_isomorphism_test(phi: Channel, tol: float = 1e-8, consistency_samples: int = 3,
                            seed: int = 0) -> JordanVerdict:
    """Decide whether ``phi`` is a Jordan *-isomorphism.

    The defect is ``max ||phi(x o y) - phi(x) o phi(y)||`` over Hermitian basis
    pairs. A positive verdict is cross-checked by running
    :func:`preservation_test` on ``consistency_samples`` random densities at
    each alpha in ``CONSISTENCY_ALPHAS``. Entropy must be preserved on every
    sample, otherwise ``NumericalFailure`` is raised.
    """
    key = ("jordan_test", tol, consistency_samples, seed)
    if key in phi._cache:
        return phi._cache[key]
    _require(phi, "unital", "trace_preserving")
    props = classify_channel(phi)
    defect = props.jordan_defect
    verdict = defect <= tol and props.injective
    checked = 0
    if verdict and props.positive:
        for i in range(consistency_samples):
            h = sampling.random_density(phi.algebra, sampling.rng_for(seed, i))
            for alpha in CONSISTENCY_ALPHAS:
                rep = preservation_test(phi, h, alpha)
                if rep.verdict != PRESERVED_ISOMORPHIC or abs(rep.delta_s) > 1e-9:
                    raise NumericalFailure(
                        f"Jordan isomorphism {phi!r} fails to preserve S_{alpha}: "
                        f"delta_s = {rep.delta_s:.3e}, verdict {rep.verdict}")
                checked += 1
    out = JordanVerdict(bool(verdict), float(defect), props.injective,
                        props.min_singular_value, tol, checked)
    phi._cache[key] = out
    return out


@dataclass(frozen=True)
class RelativeEntropyVerdict:
    holds: bool
    d_before: float
    d_after: float
    defect: float
    support_defect: float
    tol: float

    def to_json(self) -> dict:
        fix = lambda x: x if math.isfinite(x) else "inf"  # noqa: E731
        return {"holds": self.holds, "d_before": fix(self.d_before),
                "d_after": fix(self.d_after), "defect": fix(self.defect),
                "support_defect": self.support_defect, "tol": self.tol}


def relative_entropy_invariance_test(phi: Channel, h: HermitianOperator, k: HermitianOperator,
                                     tol: float = 1e-9) -> RelativeEntropyVerdict:
    """``D(phi(h) || phi(k)) = D(h || k)`` for a trace-preserving Jordan *-isomorphism.

    Also checks that supports are transported: ``phi(s(h)) = s(phi(h))``.
    """
    _require(phi, "trace_preserving", "unital")
    if not jordan_isomorphism_test(phi).is_jordan_isomorphism:
        raise PreconditionViolated(f"{phi!r} is not a Jordan *-isomorphism")
    fh, fk = _image(phi, h), _image(phi, k)
    d0 = relative_entropy(h, k)
    d1 = relative_entropy(fh, fk)
    support = (_image(phi, support_projection(h)) - support_projection(fh)).norm()
    if math.isinf(d0) or math.isinf(d1):
        defect = 0.0 if d0 == d1 else math.inf
    else:
        defect = abs(d1 - d0)
    holds = defect <= _scaled(tol, d0 if math.isfinite(d0) else 1.0) and support <= tol
    return RelativeEntropyVerdict(bool(holds), d0, d1, defect, support, tol)


# -- alpha >= 2 ---------------------------------------------------------------------

@dataclass(frozen=True)
class ReductionVerdict:
    """``tau(phi(h^a)) >= tau(phi(h^g)^(a/g)) >= tau(phi(h)^a)`` and its equality case."""

    holds: bool
    alpha: float
    gamma: float
    lhs: float
    middle: float
    rhs: float
    upper_gap: float
    lower_gap: float
    entropy_preserved: bool
    conclusion_defect: float | None
    conclusion_holds: bool | None
    tol: float

    def to_json(self) -> dict:
        return asdict(self)


def alpha_ge_2_reduction_check(phi: Channel, h: HermitianOperator, alpha: float,
                               gamma: float, tol: float = 1e-9,
                               tol_struct: float = STRUCT_TOL) -> ReductionVerdict:
    """Run the chain used to reduce exponents ``alpha >= 2`` to ``1 < gamma <= 2``.

    With ``f(t) = t^(alpha/gamma)`` (convex, increasing):
    ``tau(phi(h^alpha)) >= tau(f(phi(h^gamma)))`` by the trace Jensen inequality,
    and ``tau(f(phi(h^gamma))) >= tau(phi(h)^alpha)`` because
    ``phi(h^gamma) >= phi(h)^gamma``. If the outer terms agree (the entropy
    is preserved) then ``phi(h^gamma) = phi(h)^gamma`` is required.
    """
    if not alpha >= 2:
        raise InvalidAlpha(f"alpha must be at least 2, got {alpha}")
    if not 1 < gamma <= 2:
        raise InvalidAlpha(f"gamma must lie in (1, 2], got {gamma}")
    _require(phi, "positive", "unital", "trace_preserving")
    fh = _image(phi, h)
    f_hg = _image(phi, power(h, gamma))
    lhs = trace(_image(phi, power(h, alpha)))
    middle = trace(power(f_hg, alpha / gamma))
    rhs = trace(power(fh, alpha))
    upper_gap, lower_gap = lhs - middle, middle - rhs
    slack = _scaled(tol, lhs)
    holds = upper_gap >= -slack and lower_gap >= -slack
    preserved = abs(lhs - rhs) <= slack
    defect = conclusion = None
    if preserved:
        defect = (f_hg - power(fh, gamma)).norm()
        conclusion = defect <= max(tol_struct, slack)
        holds = holds and conclusion
    return ReductionVerdict(bool(holds), float(alpha), float(gamma), lhs, middle, rhs,
                            upper_gap, lower_gap, preserved, defect, conclusion, tol)
