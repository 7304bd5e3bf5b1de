"""Unital, trace-preserving linear maps on a block algebra.

A :class:`Channel` is stored in one of three representations:

* ``kraus``   -- ``x -> sum_i K_i x K_i^*`` with ``K_i`` dense ``N x N`` matrices
  (they may move mass between blocks, e.g. block permutations);
* ``superop`` -- an ``N^2 x N^2`` matrix acting on column-stacked ``N x N``
  matrices; only its restriction to the algebra's coordinates is used;
* ``builtin`` -- a named construction from :func:`build_channel`.

Whatever the representation, the map is evaluated on batches of dense
block-diagonal matrices, and the compact superoperator (``D x D`` with
``D = sum n_k^2``) is derived from it on demand.

Documented classification profiles of the builtins:

==============================  ===  ===  ===  ===  ======  =========
builtin                         pos  CP   U    TP   Jordan  injective
==============================  ===  ===  ===  ===  ======  =========
identity                        yes  yes  yes  yes  yes     yes
unitary_conjugation             yes  yes  yes  yes  yes     yes
transpose                       yes  no   yes  yes  yes     yes
pinching (nontrivial)           yes  yes  yes  yes  no      no
diagonal_conditional_exp.       yes  yes  yes  yes  no      no
mixture(identity, transpose)    yes  no   yes  yes  no      no
block_permutation               yes  yes  yes  yes  yes     yes
==============================  ===  ===  ===  ===  ======  =========

Positivity of a map that is not completely positive is only ever *sampled*.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (AlgebraMismatch, GenerationFailure, InvalidParameter,
                     NumericalFailure, TraceMismatch)
from .operators import (BlockAlgebra, Density, HermitianOperator, Operator,
                        PSD_RTOL, apply_function, l1_norm)
from . import sampling

UNITAL_TOL = 1e-9
TRACE_TOL = 1e-9
JORDAN_TOL = 1e-8
INJECTIVE_TOL = 1e-9
CHOI_TOL = 1e-9
POSITIVITY_SAMPLES = 1000

BUILTINS = ("identity", "unitary_conjugation", "transpose", "pinching",
            "block_permutation", "mixture", "diagonal_conditional_expectation")
RANDOM_FAMILIES = ("haar_unitary_conjugation", "random_pinching", "random_mixture",
                   "random_kraus_unital_tp")


@dataclass(frozen=True)
class ChannelProperties:
    unital: bool
    trace_preserving: bool
    positive: bool
    positivity_certificate: str  # "proven-by-Choi" or "sampled"
    positivity_samples: int
    completely_positive: bool
    jordan_multiplicative: bool
    injective: bool
    unital_defect: float
    trace_defect: float
    choi_min_eigenvalue: float
    positivity_min_eigenvalue: float
    jordan_defect: float
    min_singular_value: float

    def to_json(self) -> dict:
        return asdict(self)


def _dense_operator(x, algebra: BlockAlgebra) -> np.ndarray:
    if isinstance(x, Operator):
        if x.algebra != algebra:
            raise AlgebraMismatch(f"{x.algebra} vs {algebra}")
        return x.dense()
    a = np.asarray(x, dtype=complex)
    if a.shape != (algebra.dim, algebra.dim):
        raise AlgebraMismatch(f"matrix of shape {a.shape}, algebra dimension {algebra.dim}")
    return a


def _batch_norm(a: np.ndarray) -> np.ndarray:
    """Spectral norm of each matrix in a stack."""
    if a.size == 0:
        return np.zeros(a.shape[:-2])
    return np.linalg.norm(a, ord=2, axis=(-2, -1))


class Channel:
    """Linear map on a :class:`BlockAlgebra`. Immutable; derived data is cached."""

    def __init__(self, algebra: BlockAlgebra, kind: str, dense_map: Callable,
                 *, name: str | None = None, params: dict | None = None,
                 kraus: np.ndarray | None = None, superop: np.ndarray | None = None,
                 components: Sequence["Channel"] = ()):
        self.algebra = algebra
        self.kind = kind
        self.name = name
        self.params = dict(params or {})
        self._dense_map = dense_map
        self._kraus = kraus
        self._superop_full = superop
        self.components = tuple(components)
        self.family: str | None = None
        self._cache: dict = {}

    # -- construction -------------------------------------------------
    @classmethod
    def from_kraus(cls, algebra: BlockAlgebra, ops: Sequence) -> "Channel":
        if len(ops) == 0:
            raise InvalidParameter("a Kraus family needs at least one operator")
        k = np.stack([_dense_operator(op, algebra) for op in ops])
        kh = np.conj(np.swapaxes(k, -1, -2))

        def dense_map(x):
            return np.sum(k @ x[..., None, :, :] @ kh, axis=-3)

        ch = cls(algebra, "kraus", dense_map, kraus=k)
        ch._check_closed()
        return ch

    @classmethod
    def from_superop(cls, algebra: BlockAlgebra, matrix) -> "Channel":
        n = algebra.dim
        m = np.asarray(matrix, dtype=complex)
        if m.shape != (n * n, n * n):
            raise AlgebraMismatch(f"superoperator of shape {m.shape}, expected {(n * n, n * n)}")
        idx = algebra.compact_index()
        outside = np.setdiff1d(np.arange(n * n), idx)
        if outside.size and np.max(np.abs(m[np.ix_(outside, idx)])) > 1e-12:
            raise InvalidParameter("superoperator maps algebra elements outside the algebra")
        compact = m[np.ix_(idx, idx)]
        ch = cls._from_compact(algebra, compact, kind="superop")
        ch._superop_full = m
        return ch

    @classmethod
    def _from_compact(cls, algebra: BlockAlgebra, compact: np.ndarray,
                      kind: str = "superop", name: str | None = None) -> "Channel":
        idx = algebra.compact_index()
        n = algebra.dim
        compact = np.array(compact, dtype=complex)

        def dense_map(x):
            flat = np.swapaxes(x, -1, -2).reshape(x.shape[:-2] + (n * n,))[..., idx]
            y = flat @ compact.T
            out = np.zeros(x.shape[:-2] + (n * n,), dtype=complex)
            out[..., idx] = y
            return np.swapaxes(out.reshape(x.shape[:-2] + (n, n)), -1, -2)

        ch = cls(algebra, kind, dense_map, name=name)
        ch._cache["compact"] = compact
        return ch

    def _check_closed(self) -> None:
        units = np.stack([u.dense() for u in self.algebra.matrix_units()])
        if self.algebra.off_block_mass(self._dense_map(units)) > 1e-10:
            raise InvalidParameter("map sends algebra elements outside the algebra")

    # -- evaluation ---------------------------------------------------
    def apply_dense(self, x: np.ndarray) -> np.ndarray:
        """Apply to a dense ``(..., N, N)`` stack of block-diagonal matrices."""
        return self._dense_map(np.asarray(x, dtype=complex))

    def compact_superoperator(self) -> np.ndarray:
        """``D x D`` matrix in the basis of matrix units (compact coordinates)."""
        if "compact" not in self._cache:
            units = np.stack([u.dense() for u in self.algebra.matrix_units()])
            images = self._dense_map(units)
            n = self.algebra.dim
            idx = self.algebra.compact_index()
            flat = np.swapaxes(images, -1, -2).reshape(len(units), n * n)[:, idx]
            self._cache["compact"] = flat.T.copy()
        return self._cache["compact"]

    def superoperator(self) -> np.ndarray:
        """``N^2 x N^2`` column-stacking matrix; zero on non-algebra coordinates."""
        if self._superop_full is not None:
            return self._superop_full
        n = self.algebra.dim
        idx = self.algebra.compact_index()
        full = np.zeros((n * n, n * n), dtype=complex)
        full[np.ix_(idx, idx)] = self.compact_superoperator()
        return full

    def kraus_operators(self) -> list[np.ndarray] | None:
        """Kraus family when one is known for this construction, else ``None``."""
        return None if self._kraus is None else list(self._kraus)

    def properties(self) -> ChannelProperties:
        return classify_channel(self)

    def __call__(self, x: Operator) -> Operator:
        return apply_channel(self, x)

    def __repr__(self):
        label = self.name or self.kind
        return f"Channel({label}, dims={self.algebra.block_dims})"


# -- builtins -----------------------------------------------------------

def _unitary_dense(u, algebra: BlockAlgebra, what: str = "U") -> np.ndarray:
    ud = _dense_operator(u, algebra)
    if algebra.off_block_mass(ud) > 1e-12:
        raise InvalidParameter(f"{what} must lie in the algebra")
    if np.max(np.abs(ud.conj().T @ ud - np.eye(algebra.dim))) > 1e-9:
        raise InvalidParameter(f"{what} is not unitary")
    return ud


def _check_projections(ps: list[np.ndarray], algebra: BlockAlgebra) -> None:
    tol = 1e-9
    total = np.zeros((algebra.dim, algebra.dim), dtype=complex)
    for i, p in enumerate(ps):
        if algebra.off_block_mass(p) > 1e-12:
            raise InvalidParameter("pinching projection outside the algebra")
        if np.max(np.abs(p - p.conj().T)) > tol or np.max(np.abs(p @ p - p)) > tol:
            raise InvalidParameter(f"pinching element {i} is not an orthogonal projection")
        for j in range(i):
            if np.max(np.abs(p @ ps[j])) > tol:
                raise InvalidParameter(f"pinching projections {j} and {i} are not orthogonal")
        total += p
    if np.max(np.abs(total - np.eye(algebra.dim))) > tol:
        raise InvalidParameter("pinching projections do not sum to the identity")


def _block_permutation_matrix(algebra: BlockAlgebra, perm: Sequence[int]) -> np.ndarray:
    perm = [int(p) for p in perm]
    if sorted(perm) != list(range(algebra.n_blocks)):
        raise InvalidParameter(f"{perm} is not a permutation of the blocks")
    dims, weights = algebra.block_dims, algebra.trace_weights
    for k, target in enumerate(perm):
        if dims[k] != dims[target] or weights[k] != weights[target]:
            raise TraceMismatch(
                f"block {k} (n={dims[k]}, c={weights[k]}) cannot move to block "
                f"{target} (n={dims[target]}, c={weights[target]})")
    p = np.zeros((algebra.dim, algebra.dim), dtype=complex)
    offs = algebra.offsets
    for k, target in enumerate(perm):
        for i in range(dims[k]):
            p[offs[target] + i, offs[k] + i] = 1.0
    return p


def build_channel(algebra: BlockAlgebra, name: str, **params) -> Channel:
    """Construct one of the builtin maps.

    ``name`` is one of ``identity``, ``unitary_conjugation(unitary)``,
    ``transpose(basis=None)``, ``pinching(projections)``,
    ``block_permutation(permutation)``, ``mixture(channels, weights)`` and
    ``diagonal_conditional_expectation``. Block permutation sends block ``k``
    to block ``permutation[k]``.
    """
    eye = np.eye(algebra.dim, dtype=complex)
    kraus = None
    components: tuple = ()

    if name == "identity":
        def dense_map(x):
            return np.array(x, dtype=complex)
        kraus = eye[None]
    elif name == "unitary_conjugation":
        u = _unitary_dense(params["unitary"], algebra)
        uh = u.conj().T

        def dense_map(x):
            return u @ x @ uh
        kraus = u[None]
    elif name == "transpose":
        basis = params.get("basis")
        u = eye if basis is None else _unitary_dense(basis, algebra, "basis")
        uh = u.conj().T

        def dense_map(x):
            return u @ np.swapaxes(uh @ x @ u, -1, -2) @ uh
    elif name in ("pinching", "diagonal_conditional_expectation"):
        if name == "pinching":
            ps = [_dense_operator(p, algebra) for p in params["projections"]]
        else:
            ps = [np.outer(e, e).astype(complex) for e in eye]
        _check_projections(ps, algebra)
        stack = np.stack(ps)

        def dense_map(x):
            return np.sum(stack @ x[..., None, :, :] @ stack, axis=-3)
        kraus = stack
    elif name == "block_permutation":
        p = _block_permutation_matrix(algebra, params["permutation"])
        pt = p.T

        def dense_map(x):
            return p @ x @ pt
        kraus = p[None]
    elif name == "mixture":
        channels = list(params["channels"])
        weights = np.asarray(params["weights"], dtype=float)
        if len(channels) != len(weights) or not channels:
            raise InvalidParameter("mixture needs one weight per channel")
        if np.any(weights < 0) or abs(weights.sum() - 1) > 1e-12:
            raise InvalidParameter("mixture weights must be a probability vector")
        for ch in channels:
            if ch.algebra != algebra:
                raise AlgebraMismatch("mixture components live on different algebras")

        def dense_map(x):
            return sum(w * ch.apply_dense(x) for w, ch in zip(weights, channels))
        families = [ch.kraus_operators() for ch in channels]
        if all(f is not None for f in families):
            kraus = np.concatenate([np.sqrt(w) * np.stack(f)
                                    for w, f in zip(weights, families) if w > 0])
        components = tuple(channels)
    else:
        raise InvalidParameter(f"unknown builtin channel {name!r}; expected one of {BUILTINS}")

    return Channel(algebra, "builtin", dense_map, name=name, params=params,
                   kraus=kraus, components=components)


# -- application ----------------------------------------------------------

def apply_channel(phi: Channel, x: Operator) -> Operator:
    """Evaluate ``phi(x)``.

    Hermitian inputs come back as :class:`HermitianOperator` when the image
    is numerically self-adjoint, and densities as :class:`Density` when the
    image is also positive. For a classified positive trace-preserving map
    the contraction ``||phi(x)||_1 <= ||x||_1`` is checked on Hermitian input.
    """
    if x.algebra != phi.algebra:
        raise AlgebraMismatch(f"{x.algebra} vs {phi.algebra}")
    y = phi.apply_dense(x.dense())
    blocks = phi.algebra.blocks_of(y)
    if not isinstance(x, HermitianOperator):
        return Operator(phi.algebra, blocks)
    scale = max(1.0, float(np.max(np.abs(y), initial=0.0)))
    if max(float(np.max(np.abs(b - b.conj().T), initial=0.0)) for b in blocks) > 1e-10 * scale:
        return Operator(phi.algebra, blocks)
    out = HermitianOperator._trusted(phi.algebra, blocks)
    props = phi._cache.get("properties")
    if props is not None and props.positive and props.trace_preserving:
        lhs, rhs = l1_norm(out), l1_norm(x)
        if lhs > rhs + 1e-9 * max(1.0, rhs):
            raise NumericalFailure(f"trace-norm contraction violated: {lhs} > {rhs}")
    if isinstance(x, Density) and out.lambda_min() >= -PSD_RTOL * max(1.0, out.norm()):
        return Density._trusted(phi.algebra, out.blocks, eig=out._cache.get("eig"))
    return out


# -- classification ---------------------------------------------------------

def _weighted_traces(algebra: BlockAlgebra, dense: np.ndarray) -> np.ndarray:
    return sum(c * np.trace(b, axis1=-2, axis2=-1)
               for c, b in zip(algebra.trace_weights, algebra.blocks_of(dense)))


def _choi_min_eigenvalue(phi: Channel) -> float:
    """Smallest eigenvalue over the Choi matrices of every block pair ``k -> l``."""
    alg = phi.algebra
    worst = np.inf
    for k, (nk, ok) in enumerate(zip(alg.block_dims, alg.offsets)):
        units = np.zeros((nk, nk, alg.dim, alg.dim), dtype=complex)
        for i in range(nk):
            for j in range(nk):
                units[i, j, ok + i, ok + j] = 1.0
        images = phi.apply_dense(units)
        for s in alg.slices():
            blk = images[..., s, s]  # (i, j, p, q)
            nl = blk.shape[-1]
            choi = blk.transpose(0, 2, 1, 3).reshape(nk * nl, nk * nl)
            choi = 0.5 * (choi + choi.conj().T)
            w = np.linalg.eigvalsh(choi)
            scale = max(1.0, float(np.max(np.abs(w))))
            worst = min(worst, float(w[0]) / scale)
    return worst


def _sample_positivity(phi: Channel, samples: int, seed: int) -> float:
    """Worst scaled smallest eigenvalue of ``phi`` on random rank-one projections."""
    rng = np.random.default_rng(seed)
    alg = phi.algebra
    inputs = np.zeros((samples, alg.dim, alg.dim), dtype=complex)
    for t in range(samples):
        k = t % alg.n_blocks
        s = alg.slices()[k]
        n = alg.block_dims[k]
        if t < 2 * alg.n_blocks:
            psi = np.zeros(n, dtype=complex)
            psi[t // alg.n_blocks % n] = 1.0
        else:
            psi = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            psi /= np.linalg.norm(psi)
        inputs[t, s, s] = np.outer(psi, psi.conj())
    out = phi.apply_dense(inputs)
    herm = 0.5 * (out + np.conj(np.swapaxes(out, -1, -2)))
    asym = np.max(np.abs(out - herm))
    w = np.linalg.eigvalsh(herm)
    scale = np.maximum(1.0, np.max(np.abs(w), axis=-1))
    worst = float(np.min(w[:, 0] / scale))
    if asym > 1e-9:
        worst = min(worst, -float(asym))
    return worst


def jordan_defect(phi: Channel) -> float:
    """``max ||phi(x o y) - phi(x) o phi(y)||_inf`` over Hermitian basis pairs."""
    basis = np.stack([b.dense() for b in phi.algebra.hermitian_basis()])
    images = phi.apply_dense(basis)
    worst = 0.0
    for a in range(len(basis)):
        x, fx = basis[a], images[a]
        rest, frest = basis[a:], images[a:]
        prod = 0.5 * (x @ rest + rest @ x)
        fprod = 0.5 * (fx @ frest + frest @ fx)
        worst = max(worst, float(np.max(_batch_norm(phi.apply_dense(prod) - fprod))))
    return worst


def classify_channel(phi: Channel, samples: int = POSITIVITY_SAMPLES,
                     seed: int = 0) -> ChannelProperties:
    """Numerically decide the structural flags of ``phi``; cached on the channel."""
    default = (samples, seed) == (POSITIVITY_SAMPLES, 0)
    key = "properties" if default else ("properties", samples, seed)
    if key in phi._cache:
        return phi._cache[key]
    alg = phi.algebra
    one = np.eye(alg.dim, dtype=complex)
    unital_defect = float(np.linalg.norm(phi.apply_dense(one) - one, 2))

    units = np.stack([u.dense() for u in alg.matrix_units()])
    image_traces = _weighted_traces(alg, phi.apply_dense(units))
    unit_traces = _weighted_traces(alg, units)
    unit_l1 = np.concatenate([np.full(n * n, c) for n, c in
                              zip(alg.block_dims, alg.trace_weights)])
    trace_defect = float(np.max(np.abs(image_traces - unit_traces) / unit_l1))

    choi_min = _choi_min_eigenvalue(phi)
    cp = choi_min >= -CHOI_TOL
    if cp:
        positive, certificate, n_samples, pos_min = True, "proven-by-Choi", 0, choi_min
    else:
        pos_min = _sample_positivity(phi, samples, seed)
        positive, certificate, n_samples = pos_min >= -CHOI_TOL, "sampled", samples

    jdef = jordan_defect(phi)
    sv = np.linalg.svd(phi.compact_superoperator(), compute_uv=False)
    smin = float(sv.min())

    props = ChannelProperties(
        unital=unital_defect <= UNITAL_TOL,
        trace_preserving=trace_defect <= TRACE_TOL,
        positive=bool(positive),
        positivity_certificate=certificate,
        positivity_samples=n_samples,
        completely_positive=bool(cp),
        jordan_multiplicative=jdef <= JORDAN_TOL,
        injective=smin > INJECTIVE_TOL,
        unital_defect=unital_defect,
        trace_defect=trace_defect,
        choi_min_eigenvalue=choi_min,
        positivity_min_eigenvalue=pos_min,
        jordan_defect=jdef,
        min_singular_value=smin,
    )
    if props.completely_positive and not props.positive:
        raise NumericalFailure("classification inconsistent: CP but not positive")
    if (props.jordan_multiplicative and props.trace_preserving and props.positive
            and not props.injective):
        raise NumericalFailure(
            "classification inconsistent: Jordan-multiplicative trace-preserving map "
            f"is not injective (smallest singular value {smin:.3e})")
    phi._cache[key] = props
    return props


# -- adjoint ---------------------------------------------------------------

def _trace_pairing(algebra: BlockAlgebra) -> np.ndarray:
    """Matrix of ``tau(E_a E_b)`` over matrix units in compact order."""
    d = algebra.compact_dim
    b = np.zeros((d, d))
    pos = 0
    for n, c in zip(algebra.block_dims, algebra.trace_weights):
        for j in range(n):
            for i in range(n):
                # E_ij pairs with E_ji; compact position of E_ij is pos + j*n + i.
                b[pos + j * n + i, pos + i * n + j] = c
        pos += n * n
    return b


def adjoint_channel(phi: Channel) -> Channel:
    """Dual map with ``tau(phi(x) y) = tau(x phi*(y))``."""
    s = phi.compact_superoperator()
    b = _trace_pairing(phi.algebra)
    t = np.linalg.solve(b, s.T @ b)
    name = f"adjoint({phi.name or phi.kind})"
    return Channel._from_compact(phi.algebra, t, kind="superop", name=name)


# -- random families -----------------------------------------------------------

def _random_pinching(algebra: BlockAlgebra, rng: np.random.Generator) -> Channel:
    ps = []
    for k, n in enumerate(algebra.block_dims):
        for piece in sampling.random_projection_partition(n, rng):
            blocks = [np.zeros((m, m), dtype=complex) for m in algebra.block_dims]
            blocks[k] = piece
            ps.append(Operator(algebra, blocks))
    return build_channel(algebra, "pinching", projections=ps)


def _random_kraus_unital_tp(algebra: BlockAlgebra, rng: np.random.Generator,
                            n_ops: int = 4, max_iter: int = 500,
                            tol: float = 1e-12) -> Channel:
    ops = [sampling.random_operator(algebra, rng) for _ in range(n_ops)]
    one = algebra.identity()
    inv_sqrt = lambda t: t ** -0.5  # noqa: E731

    def defect(ops):
        a = sum((k.H @ k for k in ops), algebra.zero())
        b = sum((k @ k.H for k in ops), algebra.zero())
        return max((a - one).norm(), (b - one).norm())

    for _ in range(max_iter):
        a = HermitianOperator.from_operator(sum((k.H @ k for k in ops), algebra.zero()))
        # no eigenvalue merging: near convergence the spread is below the cluster tolerance
        r = apply_function(a, inv_sqrt, cluster_tol=0.0)
        ops = [k @ r for k in ops]
        b = HermitianOperator.from_operator(sum((k @ k.H for k in ops), algebra.zero()))
        l = apply_function(b, inv_sqrt, cluster_tol=0.0)
        ops = [l @ k for k in ops]
        if defect(ops) <= tol:
            break
    else:
        raise GenerationFailure("alternating normalisation of Kraus operators did not converge")
    ch = Channel.from_kraus(algebra, ops)
    ch.name = "random_kraus_unital_tp"
    return ch


def random_channel(algebra: BlockAlgebra, family: str, seed: int) -> Channel:
    """Reproducible random unital trace-preserving channel from ``family``."""
    rng = np.random.default_rng(seed)
    if family == "haar_unitary_conjugation":
        ch = build_channel(algebra, "unitary_conjugation",
                           unitary=sampling.random_unitary(algebra, rng))
    elif family == "random_pinching":
        ch = _random_pinching(algebra, rng)
    elif family == "random_mixture":
        n = int(rng.integers(2, 4))
        parts = []
        for _ in range(n):
            kind = rng.choice(["unitary", "transpose", "pinching", "identity"])
            if kind == "unitary":
                parts.append(build_channel(algebra, "unitary_conjugation",
                                           unitary=sampling.random_unitary(algebra, rng)))
            elif kind == "transpose":
                parts.append(build_channel(algebra, "transpose",
                                           basis=sampling.random_unitary(algebra, rng)))
            elif kind == "pinching":
                parts.append(_random_pinching(algebra, rng))
            else:
                parts.append(build_channel(algebra, "identity"))
        weights = rng.dirichlet(np.ones(n))
        ch = build_channel(algebra, "mixture", channels=parts, weights=weights)
    elif family == "random_kraus_unital_tp":
        ch = _random_kraus_unital_tp(algebra, rng)
    else:
        raise InvalidParameter(f"unknown random family {family!r}; "
                               f"expected one of {RANDOM_FAMILIES}")
    ch.family = family
    return ch
