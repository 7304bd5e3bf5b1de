"""Entropy functionals on densities: Renyi, generic trace functionals, Segal, relative.

All logarithms are natural, so entropies are in nats. Densities need not be
normalised; the Renyi entropy divides by ``tau(h)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DegenerateDensity, InvalidAlpha, NumericalFailure
from .operators import (DEFAULT_CLUSTER_TOL, HermitianOperator, _require_psd, apply_function,
                        as_hermitian, log_on_support, power, spectral_decompose,
                        support_projection, trace, _same_algebra)

ALPHA_ONE_EXCLUSION = 1e-6
DEGENERATE_TRACE_TOL = 1e-14
SUPPORT_TOL = 1e-9
RELATIVE_NEGATIVITY_TOL = 1e-9


@dataclass(frozen=True)
class EntropyValue:
    """``S_alpha(h)`` together with the two traces it was computed from."""

    value: float
    alpha: float
    trace_h: float
    trace_h_alpha: float

    def __post_init__(self):
        if math.isfinite(self.value) and not (self.trace_h > 0 and self.trace_h_alpha > 0):
            raise NumericalFailure("finite entropy needs positive tau(h) and tau(h^alpha)")

    def to_json(self) -> dict:
        return {"value": _json_float(self.value), "alpha": self.alpha,
                "trace_h": self.trace_h, "trace_h_alpha": self.trace_h_alpha}


def _json_float(x: float):
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")


def check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not alpha > 0 or not math.isfinite(alpha):
        raise InvalidAlpha(f"alpha must be a positive real, got {alpha}")
    if abs(alpha - 1.0) < ALPHA_ONE_EXCLUSION:
        raise InvalidAlpha(f"alpha = {alpha} is within {ALPHA_ONE_EXCLUSION:g} of 1")
    return alpha


def renyi_entropy(h: HermitianOperator, alpha: float,
                  cluster_tol: float = DEFAULT_CLUSTER_TOL) -> EntropyValue:
    """Renyi entropy ``ln(tau(h^alpha) / tau(h)) / (1 - alpha)``.

    Raises
    ------
    InvalidAlpha
        ``alpha <= 0`` or ``|alpha - 1| < 1e-6``.
    DegenerateDensity
        ``tau(h)`` is not positive.
    """
    alpha = check_alpha(alpha)
    h = as_hermitian(h)
    _require_psd(h)
    tr_h = trace(h)
    if not tr_h > DEGENERATE_TRACE_TOL * max(1.0, h.norm()):
        raise DegenerateDensity(f"tau(h) = {tr_h:.3e} is not positive")
    tr_ha = trace(power(h, alpha, cluster_tol))
    value = math.log(tr_ha / tr_h) / (1.0 - alpha)
    return EntropyValue(value, alpha, tr_h, tr_ha)


def entropy_functional(h: HermitianOperator, f: Callable[[float], float],
                       cluster_tol: float = DEFAULT_CLUSTER_TOL) -> float:
    """``tau(f(h))``; a :class:`DomainError` from ``f`` propagates."""
    return trace(apply_function(h, f, cluster_tol))


def xlogx(t: float) -> float:
    """``t ln t`` with ``0 ln 0 = 0`` (and the same for roundoff-negative ``t``)."""
    return t * math.log(t) if t > 0 else 0.0


def segal_entropy(h: HermitianOperator, cluster_tol: float = DEFAULT_CLUSTER_TOL) -> float:
    """``tau(h ln h)``."""
    h = as_hermitian(h)
    _require_psd(h)
    dec = spectral_decompose(h, cluster_tol)
    lam = np.where(np.abs(dec.eigenvalues) <= cluster_tol * max(1.0, h.norm()),
                   0.0, dec.eigenvalues)
    return trace(dec.reconstruct([xlogx(t) for t in lam]))


def support_excess(h: HermitianOperator, k: HermitianOperator,
                   tol: float = SUPPORT_TOL) -> float:
    """``||(1 - s(k)) s(h)||_inf``: zero iff the support of ``h`` lies under that of ``k``."""
    sh = support_projection(h, tol)
    sk = support_projection(k, tol)
    return ((h.algebra.identity() - sk) @ sh).norm()


def relative_entropy(h: HermitianOperator, k: HermitianOperator,
                     support_tol: float = SUPPORT_TOL,
                     cluster_tol: float = DEFAULT_CLUSTER_TOL) -> float:
    """``tau(h (ln h - ln k))``, or ``inf`` when ``s(h)`` is not below ``s(k)``.

    Both logarithms are taken on the respective supports. When
    ``tau(h) = tau(k)`` the result must be nonnegative; a clearly negative
    value raises :class:`NumericalFailure` instead of being returned.
    """
    _same_algebra(h, k)
    h, k = as_hermitian(h), as_hermitian(k)
    _require_psd(h)
    _require_psd(k)
    if support_excess(h, k, support_tol) > support_tol:
        return math.inf
    log_h = log_on_support(h, cluster_tol, support_tol)
    log_k = log_on_support(k, cluster_tol, support_tol)
    d = float(np.real(trace(h @ (log_h - log_k))))
    tr_h, tr_k = trace(h), trace(k)
    if abs(tr_h - tr_k) <= 1e-12 * max(1.0, tr_h) and d < -RELATIVE_NEGATIVITY_TOL * max(1.0, tr_h):
        raise NumericalFailure(f"relative entropy {d:.3e} < 0 for equal-trace densities")
    return d
