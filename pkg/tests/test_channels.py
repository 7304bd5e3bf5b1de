import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from renyi_lab import sampling
from renyi_lab.channels import (RANDOM_FAMILIES, Channel, adjoint_channel, apply_channel,
                                build_channel, classify_channel, jordan_defect, random_channel)
from renyi_lab.errors import AlgebraMismatch, InvalidParameter, TraceMismatch
from renyi_lab.operators import BlockAlgebra, Density, HermitianOperator, Operator, l1_norm, trace
from renyi_lab.suites import BUILTIN_PROFILES, builtin_table

from conftest import algebras, rng, seeds
import oracles


def diag_projection(alg, *entries):
    return Operator(alg, [np.diag(entries).astype(complex)])


def test_transpose_is_positive_not_cp_but_jordan(m2):
    props = classify_channel(build_channel(m2, "transpose"))
    assert props.positive and not props.completely_positive
    assert props.jordan_multiplicative and props.injective
    assert props.positivity_certificate == "sampled"
    assert props.choi_min_eigenvalue == pytest.approx(-1.0)


def test_transpose_choi_against_oracle(m2):
    ch = build_channel(m2, "transpose")
    choi = oracles.choi_matrix(ch.apply_dense, 2)
    np.testing.assert_allclose(np.linalg.eigvalsh(choi), [-1, 1, 1, 1], atol=1e-14)


def test_identity_is_everything(m2):
    props = classify_channel(build_channel(m2, "identity"))
    assert (props.unital and props.trace_preserving and props.completely_positive
            and props.jordan_multiplicative and props.injective)
    assert props.positivity_certificate == "proven-by-Choi"


def test_pinching_example(m2):
    ch = build_channel(m2, "pinching", projections=[diag_projection(m2, 1, 0),
                                                    diag_projection(m2, 0, 1)])
    out = apply_channel(ch, Density(m2, [np.array([[0.7, 0.2], [0.2, 0.3]])]))
    np.testing.assert_allclose(out.dense(), np.diag([0.7, 0.3]))
    props = classify_channel(ch)
    assert props.completely_positive and not props.jordan_multiplicative and not props.injective


def test_half_half_mixture(m2):
    ident, tr = build_channel(m2, "identity"), build_channel(m2, "transpose")
    mix = build_channel(m2, "mixture", channels=[ident, tr], weights=[0.5, 0.5])
    x = Operator(m2, [np.array([[1, 2], [3, 4]], dtype=complex)])
    np.testing.assert_allclose(apply_channel(mix, x).dense(), [[1, 2.5], [2.5, 4]])
    props = classify_channel(mix)
    assert props.positive and not props.completely_positive and not props.jordan_multiplicative


def test_block_permutation_swaps_blocks():
    alg = BlockAlgebra((2, 2))
    ch = build_channel(alg, "block_permutation", permutation=[1, 0])
    a, b = np.array([[1, 2], [2, 3]], dtype=complex), np.array([[5, 0], [0, 6]], dtype=complex)
    out = apply_channel(ch, HermitianOperator(alg, [a, b]))
    np.testing.assert_allclose(out.blocks[0], b)
    np.testing.assert_allclose(out.blocks[1], a)
    assert classify_channel(ch).jordan_multiplicative


def test_block_permutation_trace_mismatch():
    with pytest.raises(TraceMismatch):
        build_channel(BlockAlgebra((2, 2), (1.0, 2.0)), "block_permutation", permutation=[1, 0])
    with pytest.raises(TraceMismatch):
        build_channel(BlockAlgebra((2, 3)), "block_permutation", permutation=[1, 0])


@pytest.mark.parametrize("kwargs", [
    dict(name="unitary_conjugation", unitary=np.array([[1, 1], [0, 1]])),
    dict(name="pinching", projections=[np.diag([1, 0])]),
    dict(name="pinching", projections=[np.diag([1, 0]), np.diag([1, 1])]),
    dict(name="mixture", channels=[], weights=[]),
    dict(name="nope"),
], ids=["nonunitary", "incomplete-pinching", "overlapping-pinching", "empty-mixture", "unknown"])
def test_builtin_parameter_validation(m2, kwargs):
    with pytest.raises(InvalidParameter):
        build_channel(m2, **kwargs)


def test_mixture_rejects_bad_weights(m2):
    ident = build_channel(m2, "identity")
    with pytest.raises(InvalidParameter):
        build_channel(m2, "mixture", channels=[ident, ident], weights=[0.7, 0.7])


def test_apply_algebra_mismatch(m2):
    with pytest.raises(AlgebraMismatch):
        apply_channel(build_channel(m2, "identity"), BlockAlgebra((3,)).identity())


def test_kraus_outside_algebra_rejected():
    alg = BlockAlgebra((1, 1))
    with pytest.raises(InvalidParameter):
        Channel.from_kraus(alg, [np.array([[1, 1], [0, 1]]) / np.sqrt(2)])


def test_superop_round_trip(m2):
    ch = build_channel(m2, "transpose")
    again = Channel.from_superop(m2, ch.superoperator())
    x = sampling.random_operator(m2, rng(1))
    np.testing.assert_allclose(apply_channel(again, x).dense(), apply_channel(ch, x).dense(),
                               atol=1e-14)


@pytest.mark.parametrize("family", RANDOM_FAMILIES)
@pytest.mark.parametrize("dims", [(2,), (3,), (2, 2), (1, 2)])
def test_random_families_are_unital_tp_positive(family, dims):
    alg = BlockAlgebra(dims)
    for seed in range(3):
        ch = random_channel(alg, family, seed)
        props = classify_channel(ch)
        assert props.unital and props.trace_preserving and props.positive, (family, seed)
        assert props.unital_defect <= 1e-9 and props.trace_defect <= 1e-9
        assert ch.family == family


def test_random_channel_is_reproducible(m2):
    a = random_channel(m2, "random_kraus_unital_tp", 11).superoperator()
    b = random_channel(m2, "random_kraus_unital_tp", 11).superoperator()
    np.testing.assert_array_equal(a, b)


def test_unknown_family(m2):
    with pytest.raises(InvalidParameter):
        random_channel(m2, "bogus", 0)


@pytest.mark.parametrize("dims,weights", [((2,), None), ((2, 2), None), ((1, 2), (0.5, 3)),
                                          ((2, 3), (1, 2))])
def test_builtin_table_matches_profiles(dims, weights):
    alg = BlockAlgebra(dims, weights)
    for name, ch in builtin_table(alg, rng(3)).items():
        props = classify_channel(ch)
        for flag, expected in BUILTIN_PROFILES[name].items():
            assert getattr(props, flag) == expected, (name, flag)


def test_jordan_defect_of_squaring_failure(m2):
    ch = build_channel(m2, "diagonal_conditional_expectation")
    assert jordan_defect(ch) > 0.1
    assert jordan_defect(build_channel(m2, "transpose")) < 1e-14


def test_classification_is_cached(m2):
    ch = build_channel(m2, "transpose")
    assert classify_channel(ch) is classify_channel(ch)


@settings(max_examples=25)
@given(algebras, seeds, st.sampled_from(RANDOM_FAMILIES))
def test_channel_laws(alg, seed, family):
    g = rng(seed)
    phi = random_channel(alg, family, seed % 1000)
    x, y = sampling.random_operator(alg, g), sampling.random_operator(alg, g)
    # linearity
    lhs = apply_channel(phi, x * 2.0 + y)
    rhs = apply_channel(phi, x) * 2.0 + apply_channel(phi, y)
    assert (lhs - rhs).norm() <= 1e-12 * max(1, lhs.norm())
    # *-preservation, trace preservation, unitality
    assert (apply_channel(phi, x.H) - apply_channel(phi, x).H).norm() <= 1e-12 * max(1, x.norm())
    assert abs(trace(apply_channel(phi, x)) - trace(x)) <= 1e-9 * max(1, abs(trace(x)))
    assert apply_channel(phi, alg.identity()).allclose(alg.identity(), 1e-9)
    # trace-norm contraction on Hermitian input
    h = sampling.random_hermitian(alg, g)
    assert l1_norm(apply_channel(phi, h)) <= l1_norm(h) + 1e-9
    # adjoint through the trace pairing
    adj = adjoint_channel(phi)
    assert abs(trace(apply_channel(phi, x) @ y) - trace(x @ apply_channel(adj, y))) <= 1e-10 * max(
        1, x.norm() * y.norm())
    # positivity of the image of a density
    d = sampling.random_density(alg, g)
    assert isinstance(apply_channel(phi, d), Density)


@given(algebras, seeds)
def test_isomorphisms_are_jordan_and_injective(alg, seed):
    phi = build_channel(alg, "unitary_conjugation", unitary=sampling.random_unitary(alg, rng(seed)))
    props = classify_channel(phi)
    assert props.jordan_multiplicative and props.injective and props.completely_positive
