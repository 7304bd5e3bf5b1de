"""Block-diagonal operator engine for trace-weighted matrix algebras.

A :class:`BlockAlgebra` is a direct sum ``M_{n_1} + ... + M_{n_K}`` with the
faithful trace ``tau(x) = sum_k c_k Tr(x_k)``. Operators carry one dense
complex block per summand. Spectral data of Hermitian operators comes from
:func:`renyi_lab.linalg.jacobi_eigh` and is cached on the (immutable)
operator the first time it is needed.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (AlgebraMismatch, DomainError, InvalidAlpha, InvalidParameter,
                     NumericalFailure)
from .linalg import jacobi_eigh

DEFAULT_MAX_DIM = 16
DEFAULT_CLUSTER_TOL = 1e-8
PSD_RTOL = 1e-10
HERMITIAN_ATOL = 1e-12
MAX_DIM_ENV = "RENYI_LAB_MAX_DIM"


def max_total_dim() -> int:
    """Dimension cap, overridable through ``RENYI_LAB_MAX_DIM``."""
    raw = os.environ.get(MAX_DIM_ENV)
    return int(raw) if raw else DEFAULT_MAX_DIM


@dataclass(frozen=True)
class BlockAlgebra:
    block_dims: tuple[int, ...]
    trace_weights: tuple[float, ...] = None
    max_dim: int | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        dims = tuple(int(n) for n in self.block_dims)
        weights = (tuple(1.0 for _ in dims) if self.trace_weights is None
                   else tuple(float(c) for c in self.trace_weights))
        if not dims:
            raise InvalidParameter("an algebra needs at least one block")
        if len(weights) != len(dims):
            raise InvalidParameter(
                f"{len(dims)} blocks but {len(weights)} trace weights")
        if any(n < 1 for n in dims):
            raise InvalidParameter(f"block dimensions must be >= 1: {dims}")
        if any(not (c > 0 and math.isfinite(c)) for c in weights):
            raise InvalidParameter(f"trace weights must be positive: {weights}")
        cap = self.max_dim if self.max_dim is not None else max_total_dim()
        if sum(dims) > cap:
            raise InvalidParameter(
                f"total dimension {sum(dims)} exceeds the cap of {cap}")
        object.__setattr__(self, "block_dims", dims)
        object.__setattr__(self, "trace_weights", weights)

    @property
    def dim(self) -> int:
        return sum(self.block_dims)

    @property
    def n_blocks(self) -> int:
        return len(self.block_dims)

    @property
    def compact_dim(self) -> int:
        """Linear dimension of the algebra, ``sum n_k^2``."""
        return sum(n * n for n in self.block_dims)

    @property
    def offsets(self) -> tuple[int, ...]:
        return tuple(int(o) for o in np.cumsum((0,) + self.block_dims[:-1]))

    def slices(self) -> list[slice]:
        return [slice(o, o + n) for o, n in zip(self.offsets, self.block_dims)]

    def identity(self) -> "HermitianOperator":
        return Density._trusted(self, [np.eye(n, dtype=complex) for n in self.block_dims])

    def zero(self) -> "HermitianOperator":
        return HermitianOperator(self, [np.zeros((n, n), dtype=complex)
                                        for n in self.block_dims])

    def operator(self, blocks) -> "Operator":
        return Operator(self, blocks)

    def blocks_of(self, dense: np.ndarray) -> list[np.ndarray]:
        return [dense[..., s, s] for s in self.slices()]

    def off_block_mass(self, dense: np.ndarray) -> float:
        """Largest absolute entry of ``dense`` outside the diagonal blocks."""
        mask = np.ones((self.dim, self.dim), dtype=bool)
        for s in self.slices():
            mask[s, s] = False
        if not mask.any():
            return 0.0
        return float(np.max(np.abs(dense[..., mask]), initial=0.0))

    def from_dense(self, dense, hermitian: bool = False, atol: float = 1e-12):
        dense = np.asarray(dense, dtype=complex)
        if dense.shape != (self.dim, self.dim):
            raise AlgebraMismatch(
                f"dense matrix of shape {dense.shape} for an algebra of dimension {self.dim}")
        if self.off_block_mass(dense) > atol:
            raise AlgebraMismatch("matrix has entries outside the diagonal blocks")
        cls = HermitianOperator if hermitian else Operator
        return cls(self, self.blocks_of(dense))

    def compact_index(self) -> np.ndarray:
        """Positions of the compact coordinates inside the column-stacked N x N matrix.

        The compact vector of an operator lists each block column-major, block
        after block.
        """
        out = []
        n_total = self.dim
        for off, n in zip(self.offsets, self.block_dims):
            for j in range(n):
                for i in range(n):
                    out.append((off + j) * n_total + (off + i))
        return np.array(out, dtype=int)

    def matrix_units(self) -> list["Operator"]:
        """Matrix units ``E_ij`` of every block, in compact-vector order."""
        units = []
        for k, n in enumerate(self.block_dims):
            for j in range(n):
                for i in range(n):
                    blocks = [np.zeros((m, m), dtype=complex) for m in self.block_dims]
                    blocks[k][i, j] = 1.0
                    units.append(Operator(self, blocks))
        return units

    def hermitian_basis(self) -> list["HermitianOperator"]:
        """Real basis of the Hermitian part: ``E_ii``, ``E_ij + E_ji``, ``i(E_ij - E_ji)``."""
        basis = []
        for k, n in enumerate(self.block_dims):
            for i in range(n):
                for j in range(i, n):
                    entries = [(1.0, 1.0)] if i == j else [(1.0, 1.0), (1j, -1j)]
                    for upper, lower in entries:
                        blocks = [np.zeros((m, m), dtype=complex) for m in self.block_dims]
                        blocks[k][i, j] = upper
                        blocks[k][j, i] = lower
                        basis.append(HermitianOperator(self, blocks))
        return basis

    def to_json(self) -> dict:
        return {"dims": list(self.block_dims), "weights": list(self.trace_weights)}

    @classmethod
    def from_json(cls, data: dict) -> "BlockAlgebra":
        return cls(tuple(data["dims"]), tuple(data.get("weights") or [1.0] * len(data["dims"])))


def _same_algebra(x: "Operator", y: "Operator") -> None:
    if x.algebra != y.algebra:
        raise AlgebraMismatch(f"{x.algebra} vs {y.algebra}")


class Operator:
    """Element of a :class:`BlockAlgebra`; immutable once built."""

    __slots__ = ("algebra", "blocks", "_cache")

    def __init__(self, algebra: BlockAlgebra, blocks: Sequence):
        blocks = [np.array(b, dtype=complex) for b in blocks]
        if len(blocks) != algebra.n_blocks:
            raise AlgebraMismatch(
                f"{len(blocks)} blocks supplied for an algebra with {algebra.n_blocks}")
        for b, n in zip(blocks, algebra.block_dims):
            if b.shape != (n, n):
                raise AlgebraMismatch(f"block of shape {b.shape}, expected {(n, n)}")
        self._init(algebra, blocks)

    def _init(self, algebra, blocks):
        for b in blocks:
            b.flags.writeable = False
        self.algebra = algebra
        self.blocks = tuple(blocks)
        self._cache = {}

    @classmethod
    def _trusted(cls, algebra, blocks, eig=None):
        """Build without validation; ``eig`` seeds the eigen cache when known."""
        obj = cls.__new__(cls)
        blocks = [np.array(b, dtype=complex) for b in blocks]
        if issubclass(cls, HermitianOperator):
            blocks = [_mirror(b) for b in blocks]
        obj._init(algebra, blocks)
        if eig is not None:
            obj._cache["eig"] = eig
        return obj

    def dense(self) -> np.ndarray:
        out = np.zeros((self.algebra.dim, self.algebra.dim), dtype=complex)
        for s, b in zip(self.algebra.slices(), self.blocks):
            out[s, s] = b
        return out

    def vec(self) -> np.ndarray:
        return np.concatenate([b.ravel(order="F") for b in self.blocks])

    @classmethod
    def from_vec(cls, algebra: BlockAlgebra, v: np.ndarray):
        blocks, pos = [], 0
        for n in algebra.block_dims:
            blocks.append(np.asarray(v[pos:pos + n * n]).reshape((n, n), order="F"))
            pos += n * n
        return cls(algebra, blocks)

    def adjoint(self) -> "Operator":
        if isinstance(self, HermitianOperator):
            return self
        return Operator._trusted(self.algebra, [b.conj().T for b in self.blocks])

    @property
    def H(self):
        return self.adjoint()

    def hermitian_defect(self) -> float:
        return max(float(np.max(np.abs(b - b.conj().T), initial=0.0)) for b in self.blocks)

    def norm(self) -> float:
        """Operator norm ``||x||_inf`` (largest singular value over blocks)."""
        if "norm" not in self._cache:
            self._cache["norm"] = max(float(np.linalg.norm(b, 2)) for b in self.blocks)
        return self._cache["norm"]

    def _combine(self, other, op, hermitian):
        cls = HermitianOperator if hermitian else Operator
        return cls._trusted(self.algebra, [op(a, b) for a, b in zip(self.blocks, other.blocks)])

    def __add__(self, other):
        if not isinstance(other, Operator):
            return NotImplemented
        _same_algebra(self, other)
        both = isinstance(self, HermitianOperator) and isinstance(other, HermitianOperator)
        return self._combine(other, np.add, both)

    def __sub__(self, other):
        if not isinstance(other, Operator):
            return NotImplemented
        _same_algebra(self, other)
        both = isinstance(self, HermitianOperator) and isinstance(other, HermitianOperator)
        return self._combine(other, np.subtract, both)

    def __neg__(self):
        return self * -1.0

    def __mul__(self, scalar):
        if isinstance(scalar, Operator):
            return NotImplemented
        real = np.isreal(scalar)
        cls = HermitianOperator if (real and isinstance(self, HermitianOperator)) else Operator
        if real and isinstance(self, Density) and float(np.real(scalar)) > 0:
            cls = Density
        scalar = complex(scalar).real if real else complex(scalar)
        return cls._trusted(self.algebra, [scalar * b for b in self.blocks])

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def __matmul__(self, other):
        if not isinstance(other, Operator):
            return NotImplemented
        _same_algebra(self, other)
        return Operator._trusted(self.algebra, [a @ b for a, b in zip(self.blocks, other.blocks)])

    def allclose(self, other: "Operator", atol: float = 1e-10) -> bool:
        _same_algebra(self, other)
        return all(np.allclose(a, b, rtol=0, atol=atol) for a, b in zip(self.blocks, other.blocks))

    def __repr__(self):
        return f"{type(self).__name__}(dims={self.algebra.block_dims})"


def _mirror(b: np.ndarray) -> np.ndarray:
    upper = np.triu(b, 1)
    return upper + upper.conj().T + np.diag(np.diagonal(b).real).astype(complex)


class HermitianOperator(Operator):
    """Self-adjoint operator; the upper triangle is mirrored at construction."""

    __slots__ = ()

    def __init__(self, algebra, blocks, atol: float | None = None):
        super().__init__(algebra, blocks)
        if atol is not None and self.hermitian_defect() > atol:
            raise InvalidParameter(
                f"operator is not Hermitian (defect {self.hermitian_defect():.3e} > {atol})")
        self._init(algebra, [_mirror(b) for b in self.blocks])

    @classmethod
    def from_operator(cls, x: Operator, atol: float | None = None):
        return cls(x.algebra, x.blocks, atol=atol)

    def eig(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """Per-block ``(eigenvalues, eigenvectors)`` from the Jacobi solver."""
        if "eig" not in self._cache:
            self._cache["eig"] = [jacobi_eigh(b) for b in self.blocks]
        return self._cache["eig"]

    def eigenvalues(self) -> np.ndarray:
        """All eigenvalues with multiplicity, descending."""
        w = np.concatenate([e[0] for e in self.eig()])
        return np.sort(w)[::-1]

    def lambda_min(self) -> float:
        return float(min(e[0].min() for e in self.eig()))

    def lambda_max(self) -> float:
        return float(max(e[0].max() for e in self.eig()))

    def norm(self) -> float:
        if "norm" not in self._cache:
            self._cache["norm"] = float(max(np.abs(e[0]).max() for e in self.eig()))
        return self._cache["norm"]


class Density(HermitianOperator):
    """Positive semidefinite operator with strictly positive trace."""

    __slots__ = ()

    def __init__(self, algebra, blocks, atol: float | None = None):
        super().__init__(algebra, blocks, atol=atol)
        self.validate()

    def validate(self) -> "Density":
        tol = PSD_RTOL * max(1.0, self.norm())
        lam = self.lambda_min()
        if lam < -tol:
            raise InvalidParameter(f"not positive semidefinite: lambda_min = {lam:.3e}")
        if trace(self) <= 0:
            raise InvalidParameter("density must have strictly positive trace")
        return self

    @classmethod
    def from_operator(cls, x: Operator, atol: float | None = None) -> "Density":
        if isinstance(x, HermitianOperator) and atol is None:
            obj = cls._trusted(x.algebra, x.blocks, eig=x._cache.get("eig"))
            return obj.validate()
        return cls(x.algebra, x.blocks, atol=atol)


def as_hermitian(x: Operator, atol: float | None = None) -> HermitianOperator:
    if isinstance(x, HermitianOperator):
        return x
    return HermitianOperator.from_operator(x, atol=atol)


@dataclass(frozen=True)
class SpectralDecomposition:
    """Clustered spectral resolution ``h = sum_i lambda_i p_i``."""

    eigenvalues: np.ndarray
    projections: tuple[HermitianOperator, ...]
    cluster_tol: float
    labels: tuple[np.ndarray, ...] = field(repr=False)
    vectors: tuple[np.ndarray, ...] = field(repr=False)

    @property
    def rank(self) -> int:
        return len(self.eigenvalues)

    @property
    def cluster_gap(self) -> float:
        """Smallest distance between distinct cluster values (inf for one cluster)."""
        if self.rank < 2:
            return math.inf
        return float(np.min(-np.diff(self.eigenvalues)))

    def traces(self) -> np.ndarray:
        return np.array([trace(p) for p in self.projections])

    def reconstruct(self, values=None) -> HermitianOperator:
        """``sum_i values[i] p_i`` (defaults to the cluster eigenvalues)."""
        values = self.eigenvalues if values is None else np.asarray(values, dtype=float)
        algebra = self.projections[0].algebra
        blocks, eig = [], []
        for lab, v in zip(self.labels, self.vectors):
            d = values[lab]
            blocks.append((v * d) @ v.conj().T)
            eig.append((d.copy(), v))
        return HermitianOperator._trusted(algebra, blocks, eig=eig)


def _cluster_threshold(h: HermitianOperator, cluster_tol: float) -> float:
    return cluster_tol * max(1.0, h.norm())


def spectral_decompose(h: HermitianOperator,
                       cluster_tol: float = DEFAULT_CLUSTER_TOL) -> SpectralDecomposition:
    """Group the eigenvalues of ``h`` into clusters and build spectral projections.

    Eigenvalues closer than ``cluster_tol * max(1, ||h||)`` to a neighbour are
    merged (single linkage on the sorted spectrum); each cluster is
    represented by its mean.
    """
    h = as_hermitian(h)
    key = ("spectral", cluster_tol)
    if key in h._cache:
        return h._cache[key]
    eig = h.eig()
    values = np.concatenate([w for w, _ in eig])
    owner = np.concatenate([np.full(len(w), k) for k, (w, _) in enumerate(eig)])
    local = np.concatenate([np.arange(len(w)) for w, _ in eig])
    order = np.argsort(-values, kind="stable")
    thr = _cluster_threshold(h, cluster_tol)

    cluster_of = np.empty(len(values), dtype=int)
    members = []
    for pos, idx in enumerate(order):
        if pos == 0 or values[order[pos - 1]] - values[idx] > thr:
            members.append([])
        members[-1].append(idx)
        cluster_of[idx] = len(members) - 1
    reps = np.array([values[m].mean() for m in members])

    labels = []
    for k in range(h.algebra.n_blocks):
        sel = owner == k
        lab = np.empty(sel.sum(), dtype=int)
        lab[local[sel]] = cluster_of[sel]
        labels.append(lab)
    vectors = tuple(v for _, v in eig)

    projections = []
    for i in range(len(reps)):
        blocks, peig = [], []
        for lab, v in zip(labels, vectors):
            d = (lab == i).astype(float)
            vc = v[:, lab == i]
            blocks.append(vc @ vc.conj().T)
            peig.append((d, v))
        projections.append(Density._trusted(h.algebra, blocks, eig=peig))
    dec = SpectralDecomposition(reps, tuple(projections), cluster_tol,
                                tuple(labels), vectors)
    h._cache[key] = dec
    return dec


def _evaluate(f: Callable[[float], float], values: np.ndarray) -> np.ndarray:
    out = np.empty(len(values))
    for i, t in enumerate(values):
        try:
            with np.errstate(all="raise"):
                y = f(float(t))
        except (ValueError, ZeroDivisionError, OverflowError, FloatingPointError) as exc:
            raise DomainError(f"function undefined at eigenvalue {t!r}: {exc}") from exc
        y = complex(y)
        if not (math.isfinite(y.real) and abs(y.imag) <= 1e-12 * max(1.0, abs(y.real))):
            raise DomainError(f"function value {y!r} at eigenvalue {t!r} is not a finite real")
        out[i] = y.real
    return out


def apply_function(h: HermitianOperator, f: Callable[[float], float],
                   cluster_tol: float = DEFAULT_CLUSTER_TOL) -> HermitianOperator:
    """Functional calculus ``f(h) = sum_i f(lambda_i) p_i``."""
    dec = spectral_decompose(h, cluster_tol)
    return dec.reconstruct(_evaluate(f, dec.eigenvalues))


def _kernel_mask(h: HermitianOperator, dec: SpectralDecomposition) -> np.ndarray:
    # A cluster sitting within the clustering threshold of zero is the kernel.
    return np.abs(dec.eigenvalues) <= _cluster_threshold(h, dec.cluster_tol)


def _require_psd(h: HermitianOperator) -> None:
    tol = PSD_RTOL * max(1.0, h.norm())
    if h.lambda_min() < -tol:
        raise InvalidParameter(f"operator is not positive semidefinite "
                               f"(lambda_min = {h.lambda_min():.3e})")


def power(h: HermitianOperator, alpha: float,
          cluster_tol: float = DEFAULT_CLUSTER_TOL) -> HermitianOperator:
    """``h**alpha`` for PSD ``h`` with the convention ``0**alpha = 0``."""
    if not alpha > 0:
        raise InvalidAlpha(f"alpha must be positive, got {alpha}")
    h = as_hermitian(h)
    _require_psd(h)
    dec = spectral_decompose(h, cluster_tol)
    lam = np.clip(dec.eigenvalues, 0.0, None)
    values = np.where(_kernel_mask(h, dec), 0.0, lam ** alpha)
    out = dec.reconstruct(values)
    if np.any(values > 0):
        return Density._trusted(out.algebra, out.blocks, eig=out._cache["eig"])
    return out


def log_on_support(h: HermitianOperator, cluster_tol: float = DEFAULT_CLUSTER_TOL,
                   support_tol: float | None = None) -> HermitianOperator:
    """``log h`` on the support of ``h``, zero on its kernel."""
    h = as_hermitian(h)
    _require_psd(h)
    dec = spectral_decompose(h, cluster_tol)
    if support_tol is None:
        on = ~_kernel_mask(h, dec)
    else:
        on = dec.eigenvalues > support_tol * h.norm()
    values = np.zeros(dec.rank)
    values[on] = np.log(dec.eigenvalues[on])
    return dec.reconstruct(values)


def resolvent_product(h: HermitianOperator, s: float,
                      cluster_tol: float = DEFAULT_CLUSTER_TOL) -> HermitianOperator:
    """``h (s 1 + h)^{-1}`` through the scalar map ``t -> t/(s+t)``."""
    if not s > 0:
        raise InvalidParameter(f"s must be positive, got {s}")
    h = as_hermitian(h)
    _require_psd(h)
    dec = spectral_decompose(h, cluster_tol)
    lam = np.clip(dec.eigenvalues, 0.0, None)
    return dec.reconstruct(lam / (s + lam))


def resolvent(h: HermitianOperator, s: float,
              cluster_tol: float = DEFAULT_CLUSTER_TOL) -> HermitianOperator:
    """``(s 1 + h)^{-1}`` for PSD ``h``."""
    if not s > 0:
        raise InvalidParameter(f"s must be positive, got {s}")
    h = as_hermitian(h)
    _require_psd(h)
    dec = spectral_decompose(h, cluster_tol)
    lam = np.clip(dec.eigenvalues, 0.0, None)
    return dec.reconstruct(1.0 / (s + lam))


def trace(x: Operator, algebra: BlockAlgebra | None = None):
    """Weighted trace ``sum_k c_k Tr(x_k)``; a float for Hermitian ``x``."""
    if algebra is not None and algebra != x.algebra:
        raise AlgebraMismatch(f"{x.algebra} vs {algebra}")
    total = sum(c * np.trace(b) for c, b in zip(x.algebra.trace_weights, x.blocks))
    if isinstance(x, HermitianOperator):
        return float(np.real(total))
    return complex(total)


def singular_values(x: Operator) -> list[np.ndarray]:
    """Per-block singular values (eigenvalues of ``|x|``)."""
    if isinstance(x, HermitianOperator):
        return [np.abs(w) for w, _ in x.eig()]
    xx = HermitianOperator._trusted(x.algebra, [b.conj().T @ b for b in x.blocks])
    return [np.sqrt(np.clip(w, 0.0, None)) for w, _ in xx.eig()]


def l1_norm(x: Operator) -> float:
    """``||x||_1 = tau(|x|)``."""
    return float(sum(c * sv.sum() for c, sv in
                     zip(x.algebra.trace_weights, singular_values(x))))


def operator_norm(x: Operator) -> float:
    return x.norm()


@dataclass(frozen=True)
class OrderVerdict:
    """Outcome of a Loewner comparison ``a <= b``."""

    holds: bool
    lambda_min: float
    tol: float
    threshold: float

    def to_json(self) -> dict:
        return {"holds": self.holds, "lambda_min": self.lambda_min,
                "tol": self.tol, "threshold": self.threshold}


def loewner_leq(a: HermitianOperator, b: HermitianOperator,
                tol: float = 1e-10) -> OrderVerdict:
    """Decide ``a <= b`` via the smallest eigenvalue of ``b - a``."""
    _same_algebra(a, b)
    a, b = as_hermitian(a), as_hermitian(b)
    diff = b - a
    lam = diff.lambda_min()
    threshold = tol * max(1.0, a.norm() + b.norm())
    return OrderVerdict(lam >= -threshold, lam, tol, threshold)


def jordan_product(x: Operator, y: Operator) -> Operator:
    """``x o y = (xy + yx)/2``."""
    _same_algebra(x, y)
    blocks = [0.5 * (a @ b + b @ a) for a, b in zip(x.blocks, y.blocks)]
    if isinstance(x, HermitianOperator) and isinstance(y, HermitianOperator):
        return HermitianOperator._trusted(x.algebra, blocks)
    return Operator._trusted(x.algebra, blocks)


def support_projection(h: HermitianOperator, tol: float = 1e-10,
                       cluster_tol: float = DEFAULT_CLUSTER_TOL) -> HermitianOperator:
    """Sum of spectral projections whose eigenvalue exceeds ``tol * ||h||``."""
    h = as_hermitian(h)
    dec = spectral_decompose(h, cluster_tol)
    return dec.reconstruct((dec.eigenvalues > tol * h.norm()).astype(float))


def chebyshev_tail(x: Operator, eps: float) -> float:
    """``tau(e([eps, inf)))`` for the spectral measure ``e`` of ``|x|``."""
    if not eps > 0:
        raise InvalidParameter(f"eps must be positive, got {eps}")
    sv = singular_values(x)
    tail = float(sum(c * np.count_nonzero(s >= eps)
                     for c, s in zip(x.algebra.trace_weights, sv)))
    bound = float(sum(c * s.sum() for c, s in zip(x.algebra.trace_weights, sv))) / eps
    if tail > bound * (1 + 1e-12) + 1e-15:
        raise NumericalFailure(f"Chebyshev bound violated: {tail} > {bound}")
    return tail
