import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from renyi_lab.operators import BlockAlgebra, Density
from renyi_lab import sampling

settings.register_profile(
    "default", max_examples=40, deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.differing_executors])
settings.load_profile("default")

ALGEBRA_SHAPES = [((2,), None), ((3,), None), ((2, 2), None), ((4,), None),
                  ((2, 3), (1.0, 2.0)), ((1, 2), (0.5, 3.0))]


@pytest.fixture
def m2():
    return BlockAlgebra((2,))


@pytest.fixture
def hfix(m2):
    """The 2x2 reference density [[0.7, 0.2], [0.2, 0.3]]."""
    return Density(m2, [np.array([[0.7, 0.2], [0.2, 0.3]])])


@pytest.fixture(params=ALGEBRA_SHAPES, ids=lambda p: "x".join(map(str, p[0])))
def algebra(request):
    dims, weights = request.param
    return BlockAlgebra(dims, weights)


algebras = st.sampled_from(ALGEBRA_SHAPES).map(lambda p: BlockAlgebra(*p))
seeds = st.integers(0, 2 ** 32 - 1)


def rng(seed):
    return np.random.default_rng(seed)


def random_density(alg, seed, **kw):
    return sampling.random_density(alg, rng(seed), **kw)


# -- acceptance summary ------------------------------------------------------------
# test_acceptance.py appends one line per criterion; they are repeated at the end of
# the run so the pass/fail table is visible without ``-s``.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
