import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from renyi_lab import sampling
from renyi_lab.errors import InvalidAlpha, InvalidParameter, InvalidSchedule
from renyi_lab.integrals import (DEFAULT_SCHEDULE, QuadratureScheme, convergence_diagnostic,
                                 default_schedule, operator_tail_bound, scalar_power_integral,
                                 scalar_power_integral_convex, truncate, z_convex, z_tilde)
from renyi_lab.operators import (BlockAlgebra, Density, l1_norm, loewner_leq, power, trace)

from conftest import algebras, rng, seeds
import oracles

SCHEME = QuadratureScheme(1e-6, 1e6)


# -- scalar representations ------------------------------------------------------------

@pytest.mark.parametrize("alpha", [0.25, 0.5, 0.75])
@pytest.mark.parametrize("t", [0.1, 1.0, 7.0])
def test_concave_scalar_identity(alpha, t):
    est = scalar_power_integral(t, alpha, SCHEME)
    assert est.value == pytest.approx(t ** alpha, rel=1e-10)
    assert abs(est.value - t ** alpha) <= est.error_bound + 1e-14


@pytest.mark.parametrize("alpha", [1.25, 1.5, 1.75])
@pytest.mark.parametrize("t", [0.1, 1.0, 7.0])
def test_convex_scalar_identity(alpha, t):
    est = scalar_power_integral_convex(t, alpha, SCHEME)
    assert est.value == pytest.approx(t ** alpha, rel=1e-10)


def test_half_power_core_closed_form():
    est = scalar_power_integral(7.0, 0.5, SCHEME)
    assert est.core == pytest.approx(oracles.half_power_core(7.0, 1e-6, 1e6), rel=1e-13)
    assert est.core == pytest.approx(2.6406583633140452, rel=1e-13)


@pytest.mark.parametrize("t,alpha,m,M,convex,frozen", [
    (0.1, 0.25, 1e-6, 1e6, False, 0.533869931377665),
    (2.0, 1.5, 1e-2, 1e2, True, 2.44834440102704683),
])
def test_core_against_mpmath(t, alpha, m, M, convex, frozen):
    sc = QuadratureScheme(m, M)
    f = scalar_power_integral_convex if convex else scalar_power_integral
    est = f(t, alpha, sc)
    assert est.core == pytest.approx(frozen, rel=1e-12)
    assert est.core == pytest.approx(oracles.mp_core(t, alpha, m, M, convex), rel=1e-12)


def test_core_is_below_power_by_at_most_tail_bounds():
    for t in (0.1, 1.0, 7.0):
        est = scalar_power_integral(t, 0.5, QuadratureScheme(1e-2, 1e2))
        gap = t ** 0.5 - est.core
        assert 0 <= gap <= sum(est.tail_bounds) * (1 + 1e-9)
        assert est.core_error_bound >= gap


def test_zero_is_exact():
    assert scalar_power_integral(0.0, 0.5, SCHEME).value == 0.0


@pytest.mark.parametrize("alpha", [0.0, 1.0, 1.5, -0.2])
def test_concave_alpha_range(alpha):
    with pytest.raises(InvalidAlpha):
        scalar_power_integral(1.0, alpha, SCHEME)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
def test_convex_alpha_range(alpha):
    with pytest.raises(InvalidAlpha):
        scalar_power_integral_convex(1.0, alpha, SCHEME)


def test_negative_t_rejected():
    with pytest.raises(InvalidParameter):
        scalar_power_integral(-1.0, 0.5, SCHEME)


@pytest.mark.parametrize("m,M,panels", [(0, 1, 10), (1, 1, 10), (2, 1, 10), (1e-3, 1e3, 0)])
def test_scheme_validation(m, M, panels):
    with pytest.raises(InvalidParameter):
        QuadratureScheme(m, M, panels)


def test_weights_integrate_inverse_measure():
    # the log-uniform rule integrates 1/s exactly enough over [m, M]
    sc = QuadratureScheme(1e-4, 1e4)
    assert np.sum(sc.weights / sc.nodes) == pytest.approx(math.log(1e8), rel=1e-14)


@given(st.floats(1e-3, 1e3), st.floats(0.05, 0.95))
def test_scalar_integral_property(t, alpha):
    est = scalar_power_integral(t, alpha, SCHEME)
    assert abs(est.value - t ** alpha) <= 1e-8 * t ** alpha


# -- operator integrals ----------------------------------------------------------------

@given(algebras, seeds, st.sampled_from([0.25, 0.5, 0.75]))
def test_z_tilde_below_power_and_close(alg, seed, alpha):
    h = sampling.random_density(alg, rng(seed), low=0.05, high=2.0)
    z = z_tilde(h, alpha, SCHEME)
    target = power(h, alpha)
    assert loewner_leq(z, target).holds
    assert l1_norm(z - target) <= operator_tail_bound(h, alpha, SCHEME) * (1 + 1e-6) + 1e-12


@settings(max_examples=15)
@given(algebras, seeds)
def test_spectral_and_resolvent_routes_agree(alg, seed):
    h = sampling.random_density(alg, rng(seed))
    sc = QuadratureScheme(1e-3, 1e3, panels=40)
    a = z_tilde(h, 0.5, sc, method="spectral")
    b = z_tilde(h, 0.5, sc, method="resolvent")
    assert (a - b).norm() <= 1e-12
    c = z_convex(h, 0.5, sc, method="spectral")
    d = z_convex(h, 0.5, sc, method="resolvent")
    assert (c - d).norm() <= 1e-12


def test_unknown_method(hfix):
    with pytest.raises(InvalidParameter):
        z_tilde(hfix, 0.5, SCHEME, method="magic")


def test_z_on_kernel_is_zero(m2):
    h = Density(m2, [np.diag([0.5, 0.0])])
    z = z_tilde(h, 0.5, SCHEME)
    assert z.blocks[0][1, 1] == 0.0


def test_z_convex_approximates_power(hfix):
    z = z_convex(hfix, 0.5, SCHEME)
    target = power(hfix, 1.5)
    assert loewner_leq(z, target).holds
    gap = l1_norm(z - target)
    assert 0 < gap <= operator_tail_bound(hfix, 1.5, SCHEME) * (1 + 1e-6)


@given(algebras, seeds)
def test_z_tilde_is_monotone_in_h(alg, seed):
    u1, u2 = sampling.random_ordered_pair(alg, rng(seed))
    sc = QuadratureScheme(1e-2, 1e2, panels=60)
    assert loewner_leq(z_tilde(u1, 0.5, sc), z_tilde(u2, 0.5, sc), 1e-9).holds


# -- truncation and diagnostics -----------------------------------------------------------

def test_truncate(m2):
    h = Density(m2, [np.diag([3.0, 0.5])])
    np.testing.assert_allclose(truncate(h, 1.0).dense(), np.diag([0.0, 0.5]))
    assert truncate(h, 5.0).allclose(h, 1e-15)
    with pytest.raises(InvalidParameter):
        truncate(h, 0.0)


def test_default_schedule_shape():
    sched = default_schedule()
    assert [(s.m, s.M) for s in sched] == list(DEFAULT_SCHEDULE)


def test_quadrature_diagnostic_is_monotone(hfix):
    tr = convergence_diagnostic(hfix, 0.5, default_schedule())
    assert tr.kind == "quadrature" and tr.monotone_flag and all(tr.loewner_ok)
    assert all(g <= b * (1 + 1e-6) + 1e-12 for g, b in zip(tr.gaps, tr.tail_bounds))
    assert "tau(z)" in tr.to_table() and tr.to_json()["schedule"][0] == (1e-2, 1e2)


def test_truncation_diagnostic():
    alg = BlockAlgebra((3,))
    h = Density(alg, [np.diag([0.2, 2.0, 20.0])])
    tr = convergence_diagnostic(h, 0.5, [0.5, 5.0, 50.0])
    assert tr.kind == "truncation" and tr.monotone_flag and all(tr.loewner_ok)
    assert tr.gaps[-1] == 0.0


@pytest.mark.parametrize("schedule", [
    [], [QuadratureScheme(1e-4, 1e4), QuadratureScheme(1e-2, 1e2)],
    [QuadratureScheme(1e-2, 1e2), QuadratureScheme(1e-2, 1e2)],
    [2.0, 1.0], [0.0, 1.0], [1.0, QuadratureScheme(1e-2, 1e2)]],
    ids=["empty", "coarsening", "repeated", "decreasing", "nonpositive", "mixed"])
def test_invalid_schedules(hfix, schedule):
    with pytest.raises(InvalidSchedule):
        convergence_diagnostic(hfix, 0.5, schedule)


def test_diagnostic_alpha_range(hfix):
    with pytest.raises(InvalidAlpha):
        convergence_diagnostic(hfix, 2.5, default_schedule())


@settings(max_examples=15)
@given(algebras, seeds, st.sampled_from([0.3, 0.7, 1.4]))
def test_quadrature_traces_nondecreasing(alg, seed, alpha):
    h = sampling.random_density(alg, rng(seed))
    tr = convergence_diagnostic(h, alpha, default_schedule(panels=60))
    assert all(b >= a - 1e-12 for a, b in zip(tr.values, tr.values[1:]))
    assert all(tr.loewner_ok)
    assert tr.values[-1] <= trace(power(h, alpha)) + 1e-12
