"""Cyclic Jacobi eigensolver for small Hermitian matrices.

Every spectral computation on algebra elements goes through
:func:`jacobi_eigh`. Blocks are at most a few dozen rows, so a plain
cyclic sweep with complex Givens rotations is fast enough and keeps the
primary path free of LAPACK.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import NumericalFailure

OFF_DIAGONAL_RTOL = 1e-14
MAX_SWEEPS = 100
_TINY = 1e-300


def off_diagonal_norm(a: np.ndarray) -> float:
    """Frobenius norm of the strictly off-diagonal part of ``a``."""
    off = a[~np.eye(a.shape[0], dtype=bool)]
    return float(np.linalg.norm(off))


def _rotation(app: float, aqq: float, apq: complex) -> np.ndarray:
    # Phase-strip apq then apply the real 2x2 rotation that zeroes it.
    r = abs(apq)
    phase = apq / r
    theta = 0.5 * math.atan2(2.0 * r, app - aqq)
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s * phase.conjugate(), c * phase.conjugate()]],
                    dtype=complex)


def jacobi_eigh(a: np.ndarray, rtol: float = OFF_DIAGONAL_RTOL,
                max_sweeps: int = MAX_SWEEPS) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decompose a Hermitian matrix by cyclic Jacobi rotations.

    Parameters
    ----------
    a : (n, n) array
        Hermitian input. Only the Hermitian part ``(a + a^*)/2`` is used.
    rtol : float
        Sweeps stop once the off-diagonal Frobenius mass is at most
        ``rtol * ||a||_F``.
    max_sweeps : int
        Iteration cap; exceeding it raises :class:`NumericalFailure`.

    Returns
    -------
    eigenvalues : (n,) float array, ascending
    eigenvectors : (n, n) complex array with orthonormal columns,
        ``a @ v[:, i] = w[i] * v[:, i]``.
    """
    a = np.array(a, dtype=complex)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    a = 0.5 * (a + a.conj().T)
    v = np.eye(n, dtype=complex)
    target = rtol * np.linalg.norm(a)

    for _ in range(max_sweeps + 1):
        if off_diagonal_norm(a) <= target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= _TINY:
                    a[p, q] = a[q, p] = 0.0
                    continue
                g = _rotation(a[p, p].real, a[q, q].real, apq)
                cols = [p, q]
                a[:, cols] = a[:, cols] @ g
                a[cols, :] = g.conj().T @ a[cols, :]
                a[p, q] = a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                v[:, cols] = v[:, cols] @ g
    else:
        raise NumericalFailure(
            f"Jacobi eigensolver did not converge in {max_sweeps} sweeps "
            f"(off-diagonal mass {off_diagonal_norm(a):.3e})")

    w = np.diagonal(a).real.copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]
