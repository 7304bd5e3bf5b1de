import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from renyi_lab import sampling
from renyi_lab.channels import RANDOM_FAMILIES, Channel, build_channel, random_channel
from renyi_lab.errors import InvalidAlpha, PreconditionViolated
from renyi_lab.operators import (BlockAlgebra, Density, HermitianOperator, Operator,
                                 spectral_decompose)
from renyi_lab.suites import T2_COUNTEREXAMPLE, isomorphism_channel
from renyi_lab.theorems import (NOT_PRESERVED, PRESERVED_ISOMORPHIC,
                                alpha_ge_2_reduction_check, jensen_concave_check,
                                jensen_convex_check, jordan_isomorphism_test,
                                l1_power_continuity_check, monotonicity_check,
                                multiplicativity_defect, preservation_test,
                                relative_entropy_invariance_test, resolvent_jensen_check,
                                trace_jensen_check)

from conftest import algebras, rng, seeds
import oracles


@pytest.fixture
def pinch(m2):
    ps = [Operator(m2, [np.diag([1.0, 0.0])]), Operator(m2, [np.diag([0.0, 1.0])])]
    return build_channel(m2, "pinching", projections=ps)


def herm(alg, *blocks):
    return HermitianOperator(alg, [np.asarray(b, dtype=complex) for b in blocks])


# -- Jensen checks on the reference pinching ---------------------------------------------

def test_concave_gap_eigenvalues(pinch, hfix):
    v = jensen_concave_check(pinch, hfix, 0.5)
    assert v.holds
    # oracle: eigh of diag(h)^(1/2) - diag(h^(1/2))
    gap = np.diag(np.diag(hfix.dense())) ** 0.5 - np.diag(np.diag(oracles.psd_power(
        hfix.dense(), 0.5)))
    np.testing.assert_allclose(np.linalg.eigvalsh(gap).real, [0.01320533, 0.02039188], atol=1e-8)
    assert v.lambda_min == pytest.approx(0.01320533, abs=1e-8)


def test_convex_gap(pinch, hfix):
    v = jensen_convex_check(pinch, hfix, 2.0)
    assert v.holds and v.lambda_min == pytest.approx(0.04, abs=1e-14)


def test_trace_jensen_cubes(pinch, hfix):
    v = trace_jensen_check(pinch, hfix, 3.0)
    assert v.holds
    assert v.lhs == pytest.approx(0.49, abs=1e-14)
    assert v.rhs == pytest.approx(0.37, abs=1e-14)
    assert v.gap == pytest.approx(0.12, abs=1e-14)


@pytest.mark.parametrize("s", [0.1, 1.0, 10.0])
def test_resolvent_check_on_pinching(pinch, hfix, s):
    v = resolvent_jensen_check(pinch, hfix, s)
    assert v.holds and v.identity_ok and v.identity_defect <= 1e-12


@pytest.mark.parametrize("alpha", [0.0, 1.0, 1.5])
def test_concave_alpha_range(pinch, hfix, alpha):
    with pytest.raises(InvalidAlpha):
        jensen_concave_check(pinch, hfix, alpha)


@pytest.mark.parametrize("alpha", [1.0, 2.5])
def test_convex_alpha_range(pinch, hfix, alpha):
    with pytest.raises(InvalidAlpha):
        jensen_convex_check(pinch, hfix, alpha)


def test_trace_jensen_alpha_range(pinch, hfix):
    with pytest.raises(InvalidAlpha):
        trace_jensen_check(pinch, hfix, 0.5)


def test_preconditions_refuse_nonpositive_map(m2, hfix):
    # x -> (3/2) tr(x) 1 - 2x is unital and trace preserving but sends diag(1, 0) to diag(-1/2, 3/2)
    vec_one = np.eye(2).ravel()
    s = 1.5 * np.outer(vec_one, vec_one) - 2 * np.eye(4)
    bad = Channel.from_superop(m2, s)
    props = bad.properties()
    assert props.unital and props.trace_preserving and not props.positive
    with pytest.raises(PreconditionViolated):
        jensen_concave_check(bad, hfix, 0.5)


def test_preconditions_refuse_nonunital(m2, hfix):
    k = [np.array([[1, 0], [0, 0]]), np.array([[0, 1], [0, 0]])]  # amplitude damping, gamma=1
    with pytest.raises(PreconditionViolated):
        jensen_convex_check(Channel.from_kraus(m2, k), hfix, 2.0)


# -- Jensen properties on random unital channels ------------------------------------------

@settings(max_examples=25)
@given(algebras, seeds, st.sampled_from(RANDOM_FAMILIES))
def test_jensen_family(alg, seed, family):
    phi = random_channel(alg, family, seed % 997)
    h = sampling.random_density(alg, rng(seed))
    for a in (0.3, 0.5, 0.9):
        assert jensen_concave_check(phi, h, a).holds
    for a in (1.3, 2.0):
        assert jensen_convex_check(phi, h, a).holds
    for a in (2.5, 3.0):
        assert trace_jensen_check(phi, h, a).holds
    for s in (0.1, 1.0, 10.0):
        v = resolvent_jensen_check(phi, h, s)
        assert v.holds and v.identity_defect <= 1e-9


# -- monotonicity ---------------------------------------------------------------------

def test_t_squared_counterexample(m2):
    u1, u2 = (herm(m2, b) for b in T2_COUNTEREXAMPLE)
    assert monotonicity_check(u1, u2, 0.5).holds
    v = monotonicity_check(u1, u2, 2.0, enforce_range=False)
    assert not v.holds and v.lambda_min == pytest.approx(-0.30277563773199456, abs=1e-12)


def test_monotonicity_range_and_precondition(m2):
    u1, u2 = (herm(m2, b) for b in T2_COUNTEREXAMPLE)
    with pytest.raises(InvalidAlpha):
        monotonicity_check(u1, u2, 2.0)
    with pytest.raises(PreconditionViolated):
        monotonicity_check(u2, u1, 0.5)


@given(algebras, seeds, st.sampled_from([0.1, 0.5, 0.9]))
def test_power_is_operator_monotone(alg, seed, alpha):
    u1, u2 = sampling.random_ordered_pair(alg, rng(seed))
    assert monotonicity_check(u1, u2, alpha).holds


def test_l1_power_continuity(m2):
    x = Density(m2, [np.array([[1.0, 0.3], [0.3, 0.5]])])
    xs = [x * (1 - 2.0 ** -k) for k in range(1, 40)]
    tr = l1_power_continuity_check(xs, x, 0.5)
    assert tr.kind == "power-continuity" and tr.monotone_flag and tr.converged
    assert all(tr.loewner_ok)
    with pytest.raises(PreconditionViolated):
        l1_power_continuity_check(list(reversed(xs)), x, 0.5)


# -- preservation -----------------------------------------------------------------------

def test_pinching_changes_collision_entropy(pinch, hfix):
    rep = preservation_test(pinch, hfix, 2.0)
    assert rep.verdict == NOT_PRESERVED
    # oracle: S_2 from direct eigenvalues before, diagonal entries after
    w = np.linalg.eigvalsh(hfix.dense())
    expect = -math.log(0.7 ** 2 + 0.3 ** 2) + math.log(np.sum(w ** 2))
    assert rep.delta_s == pytest.approx(expect, abs=1e-13)
    assert rep.delta_s == pytest.approx(0.129211731480006, abs=1e-12)
    assert rep.s_after.value == pytest.approx(0.544727175441672, abs=1e-12)
    assert rep.n_clusters == 2
    assert rep.multiplicativity_defect > 0.1


@pytest.mark.parametrize("alpha", [0.5, 2.0, 3.0])
@pytest.mark.parametrize("kind", ["haar", "transpose", "block_swap"])
def test_isomorphisms_preserve(alpha, kind):
    alg = BlockAlgebra((2, 2))
    g = rng(5)
    phi = isomorphism_channel(alg, kind, g)
    for _ in range(5):
        rep = preservation_test(phi, sampling.random_density(alg, g), alpha)
        assert rep.verdict == PRESERVED_ISOMORPHIC
        assert abs(rep.delta_s) <= 1e-10 and rep.multiplicativity_defect <= 1e-7


def test_pinching_commuting_with_density_is_inconclusive_or_isomorphic(pinch, m2):
    h = Density(m2, [np.diag([0.6, 0.4])])
    rep = preservation_test(pinch, h, 2.0)
    assert abs(rep.delta_s) <= 1e-14
    assert rep.verdict == PRESERVED_ISOMORPHIC  # pinching is multiplicative on W*(h) here


def test_identity_density_has_one_cluster(pinch, m2):
    rep = preservation_test(pinch, Density(m2, [np.eye(2) / 2]), 2.0)
    assert rep.n_clusters == 1 and math.isinf(rep.cluster_gap)
    assert rep.to_json()["cluster_gap"] is None


def test_multiplicativity_defect_examples(pinch, hfix):
    projs = spectral_decompose(hfix).projections
    mult, smallest = multiplicativity_defect(pinch, projs)
    assert mult > 0.1 and smallest > 0.5
    ident = build_channel(pinch.algebra, "identity")
    assert multiplicativity_defect(ident, projs)[0] <= 1e-14


@settings(max_examples=20)
@given(algebras, seeds, st.sampled_from([0.5, 2.0, 3.0]))
def test_contrapositive_property(alg, seed, alpha):
    phi = random_channel(alg, "random_mixture", seed % 991)
    h = sampling.random_density(alg, rng(seed))
    rep = preservation_test(phi, h, alpha)
    if rep.n_clusters >= 2 and abs(rep.delta_s) <= 1e-10:
        assert rep.multiplicativity_defect <= 1e-7
    if rep.verdict == NOT_PRESERVED:
        # any positive unital trace-preserving map can only raise the entropy
        assert rep.delta_s > 0


# -- Jordan and relative entropy ---------------------------------------------------------

@pytest.mark.parametrize("name,expected", [("identity", True), ("transpose", True),
                                           ("diagonal_conditional_expectation", False)])
def test_jordan_verdicts(m2, name, expected):
    v = jordan_isomorphism_test(build_channel(m2, name))
    assert v.is_jordan_isomorphism == expected
    assert v.consistency_samples == (9 if expected else 0)


def test_jordan_verdict_for_mixture(m2):
    mix = build_channel(m2, "mixture", channels=[build_channel(m2, "identity"),
                                                 build_channel(m2, "transpose")],
                        weights=[0.5, 0.5])
    v = jordan_isomorphism_test(mix)
    assert not v.is_jordan_isomorphism and not v.injective


@given(algebras, seeds, st.sampled_from(["haar", "transpose"]))
def test_relative_entropy_invariance(alg, seed, kind):
    g = rng(seed)
    phi = isomorphism_channel(alg, kind, g)
    h, k = sampling.random_density(alg, g), sampling.random_density(alg, g)
    v = relative_entropy_invariance_test(phi, h, k)
    assert v.holds and v.defect <= 1e-9 * max(1, v.d_before)


def test_relative_entropy_infinite_on_both_sides(m2, hfix):
    phi = build_channel(m2, "transpose")
    k = Density(m2, [np.diag([1.0, 0.0])])
    v = relative_entropy_invariance_test(phi, hfix, k)
    assert v.holds and math.isinf(v.d_before) and math.isinf(v.d_after)
    assert v.to_json()["d_after"] == "inf"


def test_relative_entropy_refuses_non_jordan(pinch, hfix):
    with pytest.raises(PreconditionViolated):
        relative_entropy_invariance_test(pinch, hfix, hfix)


# -- alpha >= 2 reduction ---------------------------------------------------------------

def test_reduction_chain_on_pinching(pinch, hfix):
    v = alpha_ge_2_reduction_check(pinch, hfix, 3.0, 1.5)
    assert v.holds and not v.entropy_preserved
    assert v.lhs == pytest.approx(0.49, abs=1e-14)
    assert v.middle == pytest.approx(0.4025463978177501, abs=1e-12)
    assert v.rhs == pytest.approx(0.37, abs=1e-14)


def test_reduction_equality_for_transpose(m2, hfix):
    v = alpha_ge_2_reduction_check(build_channel(m2, "transpose"), hfix, 3.0, 1.5)
    assert v.holds and v.entropy_preserved and v.conclusion_holds
    assert abs(v.upper_gap) <= 1e-14 and abs(v.lower_gap) <= 1e-14


@pytest.mark.parametrize("alpha,gamma", [(1.5, 1.5), (3.0, 1.0), (3.0, 2.5)])
def test_reduction_ranges(pinch, hfix, alpha, gamma):
    with pytest.raises(InvalidAlpha):
        alpha_ge_2_reduction_check(pinch, hfix, alpha, gamma)


@settings(max_examples=20)
@given(algebras, seeds, st.sampled_from(RANDOM_FAMILIES))
def test_reduction_chain_property(alg, seed, family):
    phi = random_channel(alg, family, seed % 983)
    assert alpha_ge_2_reduction_check(phi, sampling.random_density(alg, rng(seed)), 3.0,
                                      1.5).holds
