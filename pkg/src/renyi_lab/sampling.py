"""Seeded generators for unitaries, densities and ordered pairs."""
from __future__ import annotations

import numpy as np

from .operators import BlockAlgebra, Density, HermitianOperator, Operator


def rng_for(seed: int, *stream: int) -> np.random.Generator:
    """Independent generator for ``(seed, *stream)``; used for per-instance substreams."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, stream)]))


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_unitary(algebra: BlockAlgebra, rng: np.random.Generator) -> Operator:
    """Haar-random unitary in each block."""
    return Operator(algebra, [haar_unitary(n, rng) for n in algebra.block_dims])


def random_density(algebra: BlockAlgebra, rng: np.random.Generator, *,
                   degenerate: bool = False, low: float = 0.05,
                   high: float = 1.0) -> Density:
    """Density with eigenvalues uniform on ``[low, high]`` and Haar eigenbasis.

    With ``degenerate=True`` at least two eigenvalues are forced equal, so the
    clustered spectrum has a cluster of size two or more.
    """
    lam = rng.uniform(low, high, algebra.dim)
    if degenerate:
        if algebra.dim < 2:
            raise ValueError("a degenerate spectrum needs total dimension >= 2")
        size = int(rng.integers(2, algebra.dim + 1))
        idx = rng.choice(algebra.dim, size=size, replace=False)
        lam[idx] = lam[idx[0]]
    blocks, pos = [], 0
    for n in algebra.block_dims:
        u = haar_unitary(n, rng)
        blocks.append((u * lam[pos:pos + n]) @ u.conj().T)
        pos += n
    return Density(algebra, blocks)


def random_hermitian(algebra: BlockAlgebra, rng: np.random.Generator,
                     scale: float = 1.0) -> HermitianOperator:
    blocks = []
    for n in algebra.block_dims:
        g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        blocks.append(scale * (g + g.conj().T) / 2)
    return HermitianOperator(algebra, blocks)


def random_operator(algebra: BlockAlgebra, rng: np.random.Generator) -> Operator:
    return Operator(algebra, [rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
                              for n in algebra.block_dims])


def random_psd(algebra: BlockAlgebra, rng: np.random.Generator,
               scale: float = 1.0, rank: int | None = None) -> HermitianOperator:
    blocks = []
    for n in algebra.block_dims:
        r = n if rank is None else min(rank, n)
        g = rng.standard_normal((n, r)) + 1j * rng.standard_normal((n, r))
        blocks.append(scale * (g @ g.conj().T) / max(r, 1))
    return HermitianOperator(algebra, blocks)


def random_ordered_pair(algebra: BlockAlgebra, rng: np.random.Generator
                        ) -> tuple[Density, Density]:
    """``u1 <= u2`` with ``u2 = u1 + (random PSD)``."""
    u1 = random_density(algebra, rng)
    bump = random_psd(algebra, rng, scale=float(rng.uniform(0.05, 1.0)),
                      rank=int(rng.integers(1, max(algebra.block_dims) + 1)))
    return u1, Density.from_operator(u1 + bump)


def random_projection_partition(n: int, rng: np.random.Generator, parts: int | None = None
                                ) -> list[np.ndarray]:
    """Orthogonal projections in ``M_n`` summing to one, in a Haar-random basis."""
    u = haar_unitary(n, rng)
    if parts is None:
        parts = int(rng.integers(2, n + 1)) if n >= 2 else 1
    labels = np.concatenate([np.arange(parts), rng.integers(0, parts, n - parts)])
    rng.shuffle(labels)
    return [u[:, labels == i] @ u[:, labels == i].conj().T for i in range(parts)]
