"""Quadrature for the Stieltjes-type representations of fractional powers.

For ``0 < a < 1`` and ``t >= 0``::

    t^a       = (sin(a pi)/pi) * int_0^inf s^(a-1) * t   / (s + t) ds
    t^(1 + a) = (sin(a pi)/pi) * int_0^inf s^(a-1) * t^2 / (s + t) ds

The finite-range piece ``int_m^M`` is evaluated with Gauss-Legendre panels
that are uniform in ``log s``. The operator objects :func:`z_tilde` and
:func:`z_convex` are exactly this truncated integral applied to a density,
so they sit below the true power in Loewner order and increase as the range
widens. The scalar routines additionally integrate the two tails, after a
change of variables that maps each onto a finite interval with a bounded
integrand. They return the full value together with the truncated core and
the analytic tail bounds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import InvalidAlpha, InvalidParameter, InvalidSchedule, NumericalFailure
from .operators import (DEFAULT_CLUSTER_TOL, Density, HermitianOperator, _require_psd,
                        as_hermitian, l1_norm, loewner_leq, power, spectral_decompose, trace)

MONOTONE_SLACK = 1e-12
TAIL_PANELS = 48
TAIL_NODES = 16


def _gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


@dataclass(frozen=True)
class QuadratureScheme:
    """Log-uniform Gauss-Legendre panels on ``[m, M]``."""

    m: float
    M: float
    panels: int = 200
    nodes_per_panel: int = 16

    def __post_init__(self):
        if not (self.m > 0 and math.isfinite(self.M) and self.M > self.m):
            raise InvalidParameter(f"need 0 < m < M < inf, got m={self.m}, M={self.M}")
        if self.panels < 1 or self.nodes_per_panel < 1:
            raise InvalidParameter("panels and nodes_per_panel must be positive")

    @cached_property
    def _log_rule(self) -> tuple[np.ndarray, np.ndarray]:
        # nodes s_i and weights w_i with  int_m^M g(s) ds ~= sum_i w_i s_i g(s_i)
        return self._rule(self.nodes_per_panel)

    @cached_property
    def _coarse_rule(self) -> tuple[np.ndarray, np.ndarray]:
        return self._rule(max(1, self.nodes_per_panel // 2))

    def _rule(self, order: int) -> tuple[np.ndarray, np.ndarray]:
        x, w = _gauss_legendre(order)
        edges = np.linspace(math.log(self.m), math.log(self.M), self.panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        logs = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        weights = (half[:, None] * w[None, :]).ravel()
        s = np.exp(logs)
        return s, weights * s

    @property
    def nodes(self) -> np.ndarray:
        return self._log_rule[0]

    @property
    def weights(self) -> np.ndarray:
        """Weights for ``ds`` (the Jacobian ``s`` of the log substitution included)."""
        return self._log_rule[1]

    def tail_bounds(self, alpha: float, t: float = 1.0) -> tuple[float, float]:
        """Upper bounds on the omitted ``[0, m)`` and ``(M, inf)`` pieces at ``t``.

        ``alpha`` in (0, 1) refers to the ``t/(s+t)`` representation of
        ``t^alpha``; ``alpha`` in (1, 2) to the ``t^2/(s+t)`` one of ``t^alpha``.
        """
        a, g = _exponent_and_numerator(alpha, t)
        c = math.sin(a * math.pi) / math.pi
        if alpha < 1:
            return c * self.m ** a / a, c * t * self.M ** (a - 1) / (1 - a)
        return c * t * self.m ** a / a, c * g * self.M ** (a - 1) / (1 - a)

    def to_json(self) -> dict:
        return {"m": self.m, "M": self.M, "panels": self.panels,
                "nodes_per_panel": self.nodes_per_panel}


DEFAULT_SCHEDULE = ((1e-2, 1e2), (1e-4, 1e4), (1e-6, 1e6), (1e-8, 1e8))


def default_schedule(panels: int = 200, nodes_per_panel: int = 16) -> list[QuadratureScheme]:
    return [QuadratureScheme(m, M, panels, nodes_per_panel) for m, M in DEFAULT_SCHEDULE]


def _exponent_and_numerator(alpha: float, t: float) -> tuple[float, float]:
    if 0 < alpha < 1:
        return alpha, t
    if 1 < alpha < 2:
        return alpha - 1.0, t * t
    raise InvalidAlpha(f"alpha must lie in (0,1) or (1,2), got {alpha}")


@dataclass(frozen=True)
class IntegralEstimate:
    """Quadrature estimate of a fractional power at a scalar ``t``.

    ``value`` is the whole integral: ``core`` (over ``[m, M]``) plus the
    two tails. ``error_bound`` bounds ``|value - t^alpha|``;
    ``tail_bounds`` are the analytic bounds on the tails, so
    ``core_error_bound`` bounds ``t^alpha - core``.
    """

    t: float
    alpha: float
    value: float
    core: float
    tail_lower: float
    tail_upper: float
    quadrature_error: float
    tail_bounds: tuple[float, float]

    @property
    def error_bound(self) -> float:
        return self.quadrature_error

    @property
    def core_error_bound(self) -> float:
        return self.quadrature_error + sum(self.tail_bounds)

    def __float__(self) -> float:
        return self.value


def _core(ts: np.ndarray, a: float, numerator_power: int, s: np.ndarray,
          w: np.ndarray) -> np.ndarray:
    ts = np.asarray(ts, dtype=float)
    num = ts ** numerator_power
    kern = (w * s ** (a - 1.0))[None, :] / (s[None, :] + ts[:, None])
    return math.sin(a * math.pi) / math.pi * num * np.sum(kern, axis=1)


def _graded_rule(upper: float) -> tuple[np.ndarray, np.ndarray]:
    """Rule on ``[0, upper]`` with panels refined geometrically towards 0."""
    x, w = _gauss_legendre(TAIL_NODES)
    edges = upper * np.concatenate([[0.0], np.logspace(-12, 0, TAIL_PANELS)])
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    return (mid[:, None] + half[:, None] * x).ravel(), (half[:, None] * w).ravel()


def _tails(t: float, a: float, g: float, m: float, M: float) -> tuple[float, float]:
    c = math.sin(a * math.pi) / math.pi
    # lower: u = s^a maps [0, m] to [0, m^a] and s^(a-1) ds = du / a
    u, wu = _graded_rule(m ** a)
    lower = c / a * float(np.sum(wu * g / (u ** (1.0 / a) + t)))
    # upper: v = s^(a-1) maps [M, inf) to (0, M^(a-1)] and s^(a-1) ds = -v^(1/(a-1)) dv / (1-a)
    v, wv = _graded_rule(M ** (a - 1.0))
    upper = c / (1.0 - a) * float(np.sum(wv * g / (1.0 + t * v ** (1.0 / (1.0 - a)))))
    return lower, upper


def _scalar(t: float, alpha: float, scheme: QuadratureScheme) -> IntegralEstimate:
    t = float(t)
    if not t >= 0 or not math.isfinite(t):
        raise InvalidParameter(f"t must be a finite nonnegative real, got {t}")
    a, g = _exponent_and_numerator(alpha, t)
    npow = 1 if alpha < 1 else 2
    bounds = scheme.tail_bounds(alpha, t)
    if t == 0.0:
        return IntegralEstimate(t, alpha, 0.0, 0.0, 0.0, 0.0, 0.0, bounds)
    core = float(_core(np.array([t]), a, npow, *scheme._log_rule)[0])
    coarse = float(_core(np.array([t]), a, npow, *scheme._coarse_rule)[0])
    lower, upper = _tails(t, a, g, scheme.m, scheme.M)
    slack = 1e-12 * max(1.0, abs(core))
    if lower > bounds[0] * (1 + 1e-12) + slack or upper > bounds[1] * (1 + 1e-12) + slack:
        raise NumericalFailure(f"tail quadrature ({lower:.3e}, {upper:.3e}) exceeds the "
                               f"analytic bounds ({bounds[0]:.3e}, {bounds[1]:.3e})")
    value = core + lower + upper
    err = abs(core - coarse) + 4 * np.finfo(float).eps * abs(value)
    return IntegralEstimate(t, alpha, value, core, lower, upper, err, bounds)


def scalar_power_integral(t: float, alpha: float, scheme: QuadratureScheme) -> IntegralEstimate:
    """``t^alpha`` for ``alpha`` in (0, 1) through the ``t/(s+t)`` representation."""
    if not 0 < alpha < 1:
        raise InvalidAlpha(f"alpha must lie in (0, 1), got {alpha}")
    return _scalar(t, alpha, scheme)


def scalar_power_integral_convex(t: float, alpha: float,
                                 scheme: QuadratureScheme) -> IntegralEstimate:
    """``t^alpha`` for ``alpha`` in (1, 2) through the ``t^2/(s+t)`` representation."""
    if not 1 < alpha < 2:
        raise InvalidAlpha(f"alpha must lie in (1, 2), got {alpha}")
    return _scalar(t, alpha, scheme)


# -- operator integrals ---------------------------------------------------

def _resolvent_sum(h: HermitianOperator, a: float, npow: int,
                   scheme: QuadratureScheme) -> HermitianOperator:
    # sum_i w_i s_i^(a-1) h^npow (s_i + h)^(-1), one linear solve per node and block
    s, w = scheme._log_rule
    coef = math.sin(a * math.pi) / math.pi * w * s ** (a - 1.0)
    blocks = []
    for b in h.blocks:
        n = b.shape[0]
        rhs = np.linalg.matrix_power(b, npow)
        shifted = s[:, None, None] * np.eye(n) + b[None]
        sol = np.linalg.solve(shifted, np.broadcast_to(rhs, shifted.shape))
        blocks.append(np.tensordot(coef, sol, axes=1))
    return HermitianOperator(h.algebra, blocks, atol=1e-8 * max(1.0, h.norm()) ** npow)


def _operator_integral(h: HermitianOperator, alpha: float, scheme: QuadratureScheme,
                       method: str, cluster_tol: float) -> HermitianOperator:
    h = as_hermitian(h)
    _require_psd(h)
    a, _ = _exponent_and_numerator(alpha, 1.0)
    npow = 1 if alpha < 1 else 2
    if method == "resolvent":
        return _resolvent_sum(h, a, npow, scheme)
    if method != "spectral":
        raise InvalidParameter(f"method must be 'spectral' or 'resolvent', got {method!r}")
    dec = spectral_decompose(h, cluster_tol)
    lam = np.clip(dec.eigenvalues, 0.0, None)
    kernel = np.abs(dec.eigenvalues) <= cluster_tol * max(1.0, h.norm())
    vals = np.where(kernel, 0.0, _core(np.where(kernel, 1.0, lam), a, npow, *scheme._log_rule))
    return dec.reconstruct(vals)


def z_tilde(h: HermitianOperator, alpha: float, scheme: QuadratureScheme,
            method: str = "spectral",
            cluster_tol: float = DEFAULT_CLUSTER_TOL) -> HermitianOperator:
    """Truncated integral ``(sin a pi/pi) int_m^M s^(a-1) h (s+h)^(-1) ds``.

    ``method="spectral"`` evaluates the scalar quadrature on each eigenvalue
    cluster; ``method="resolvent"`` sums the resolvent matrices node by node
    (a slower cross-check of the same quantity).
    """
    if not 0 < alpha < 1:
        raise InvalidAlpha(f"alpha must lie in (0, 1), got {alpha}")
    return _operator_integral(h, alpha, scheme, method, cluster_tol)


def z_convex(h: HermitianOperator, beta: float, scheme: QuadratureScheme,
             method: str = "spectral",
             cluster_tol: float = DEFAULT_CLUSTER_TOL) -> HermitianOperator:
    """Truncated integral ``(sin b pi/pi) int_m^M s^(b-1) h^2 (s+h)^(-1) ds``.

    Approximates ``h^(1+beta)`` from below.
    """
    if not 0 < beta < 1:
        raise InvalidAlpha(f"beta must lie in (0, 1), got {beta}")
    return _operator_integral(h, 1.0 + beta, scheme, method, cluster_tol)


def operator_tail_bound(h: HermitianOperator, alpha: float, scheme: QuadratureScheme,
                        cluster_tol: float = DEFAULT_CLUSTER_TOL) -> float:
    """Bound on ``tau(h^alpha) - tau(z)`` from the scalar tail bounds per eigenvalue."""
    dec = spectral_decompose(as_hermitian(h), cluster_tol)
    total = 0.0
    for lam, tr in zip(dec.eigenvalues, dec.traces()):
        if lam > cluster_tol * max(1.0, h.norm()):
            total += tr * sum(scheme.tail_bounds(alpha, float(lam)))
    return total


def truncate(h: HermitianOperator, n: float,
             cluster_tol: float = DEFAULT_CLUSTER_TOL) -> HermitianOperator:
    """Spectral truncation ``h_n``: eigenvalues above ``n`` are set to zero."""
    if not n > 0:
        raise InvalidParameter(f"truncation level must be positive, got {n}")
    h = as_hermitian(h)
    _require_psd(h)
    dec = spectral_decompose(h, cluster_tol)
    out = dec.reconstruct(np.where(dec.eigenvalues > n, 0.0, dec.eigenvalues))
    if trace(out) > 0:
        return Density._trusted(out.algebra, out.blocks, eig=out._cache["eig"])
    return out


# -- convergence diagnostics -------------------------------------------------

@dataclass(frozen=True)
class ConvergenceTrace:
    """Values of a refining schedule and whether they move monotonically.

    For quadrature schedules ``values`` are ``tau(z)`` (expected
    nondecreasing) and ``gaps`` are ``||z - h^alpha||_1`` (expected
    nonincreasing). For truncation schedules ``values`` are ``tau(z(h_n))``
    and ``gaps`` are ``||z(h) - z(h_n)||_1``.
    """

    kind: str
    alpha: float
    schedule: tuple
    values: tuple[float, ...]
    gaps: tuple[float, ...]
    tail_bounds: tuple[float, ...]
    loewner_ok: tuple[bool, ...]
    monotone_flag: bool = field(default=False)
    converged: bool | None = None

    def to_json(self) -> dict:
        return {"kind": self.kind, "alpha": self.alpha, "schedule": list(self.schedule),
                "values": list(self.values), "gaps": list(self.gaps),
                "tail_bounds": list(self.tail_bounds), "loewner_ok": list(self.loewner_ok),
                "monotone_flag": self.monotone_flag, "converged": self.converged}

    def to_table(self) -> str:
        if self.kind == "quadrature":
            head = f"{'m':>10} {'M':>10} {'tau(z)':>20} {'||z - h^a||_1':>14} {'tail bound':>12}"
            rows = [f"{m:>10.1e} {M:>10.1e} {v:>20.15f} {g:>14.3e} {b:>12.3e}"
                    for (m, M), v, g, b in zip(self.schedule, self.values, self.gaps,
                                               self.tail_bounds)]
        else:
            head = f"{'n':>10} {'tau(z(h_n))':>20} {'||z(h) - z(h_n)||_1':>20}"
            rows = [f"{n:>10.4g} {v:>20.15f} {g:>20.3e}"
                    for n, v, g in zip(self.schedule, self.values, self.gaps)]
        return "\n".join([head, *rows])


def _nondecreasing(xs: Sequence[float]) -> bool:
    return all(b >= a - MONOTONE_SLACK * max(1.0, abs(a)) for a, b in zip(xs, xs[1:]))


def _nonincreasing(xs: Sequence[float]) -> bool:
    return _nondecreasing([-x for x in xs])


def _check_refining(schedule: Sequence) -> str:
    if not schedule:
        raise InvalidSchedule("empty schedule")
    if all(isinstance(s, QuadratureScheme) for s in schedule):
        for a, b in zip(schedule, schedule[1:]):
            if b.m > a.m or b.M < a.M or (b.m, b.M) == (a.m, a.M):
                raise InvalidSchedule(f"({b.m:g}, {b.M:g}) does not refine ({a.m:g}, {a.M:g})")
        return "quadrature"
    if all(isinstance(s, (int, float)) and not isinstance(s, bool) for s in schedule):
        for a, b in zip(schedule, schedule[1:]):
            if not b > a:
                raise InvalidSchedule(f"truncation levels must increase: {a} then {b}")
        if schedule[0] <= 0:
            raise InvalidSchedule("truncation levels must be positive")
        return "truncation"
    raise InvalidSchedule("schedule must be all QuadratureSchemes or all truncation levels")


def _integral_for(h, alpha, scheme, cluster_tol):
    if alpha < 1:
        return z_tilde(h, alpha, scheme, cluster_tol=cluster_tol)
    return z_convex(h, alpha - 1.0, scheme, cluster_tol=cluster_tol)


def convergence_diagnostic(h: HermitianOperator, alpha: float, schedule: Sequence,
                           scheme: QuadratureScheme | None = None,
                           loewner_tol: float = 1e-10,
                           cluster_tol: float = DEFAULT_CLUSTER_TOL) -> ConvergenceTrace:
    """Follow ``z`` along a refining schedule.

    ``schedule`` is either a list of :class:`QuadratureScheme` with shrinking
    ``m`` and growing ``M``, or an increasing list of truncation levels (in
    which case ``scheme`` fixes the quadrature, default ``m=1e-6, M=1e6``).
    ``alpha`` in (0, 1) uses :func:`z_tilde`, ``alpha`` in (1, 2) uses
    :func:`z_convex` with ``beta = alpha - 1``.
    """
    _exponent_and_numerator(alpha, 1.0)
    kind = _check_refining(schedule)
    h = as_hermitian(h)
    target = power(h, alpha, cluster_tol)
    values, gaps, bounds, order_ok = [], [], [], []
    if kind == "quadrature":
        for sc in schedule:
            z = _integral_for(h, alpha, sc, cluster_tol)
            values.append(trace(z))
            gaps.append(l1_norm(z - target))
            bounds.append(operator_tail_bound(h, alpha, sc, cluster_tol))
            order_ok.append(loewner_leq(z, target, loewner_tol).holds)
        monotone = _nondecreasing(values) and _nonincreasing(gaps)
        sched = tuple((sc.m, sc.M) for sc in schedule)
    else:
        scheme = scheme or QuadratureScheme(1e-6, 1e6)
        z_full = _integral_for(h, alpha, scheme, cluster_tol)
        for n in schedule:
            hn = truncate(h, n, cluster_tol)
            zn = _integral_for(hn, alpha, scheme, cluster_tol)
            values.append(trace(zn))
            gaps.append(l1_norm(z_full - zn))
            bounds.append(0.0)
            order_ok.append(loewner_leq(zn, z_full, loewner_tol).holds)
        monotone = _nondecreasing(values) and _nonincreasing(gaps)
        sched = tuple(float(n) for n in schedule)
    return ConvergenceTrace(kind, float(alpha), sched, tuple(values), tuple(gaps),
                            tuple(bounds), tuple(order_ok), monotone)
