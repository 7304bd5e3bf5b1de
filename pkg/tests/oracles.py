"""Independent reference computations (LAPACK eigh, closed forms, mpmath)."""
import math

import mpmath
import numpy as np


def funm(a, f):
    """f(a) for a Hermitian matrix through numpy's eigh."""
    w, v = np.linalg.eigh(a)
    return (v * f(w)) @ v.conj().T


def block_dense(x):
    return x.dense()


def psd_power(a, alpha):
    return funm(a, lambda w: np.where(w > 1e-12, np.clip(w, 0, None) ** alpha, 0.0))


def weighted_trace(alg, dense):
    total, pos = 0.0, 0
    for n, c in zip(alg.block_dims, alg.trace_weights):
        total += c * np.trace(dense[pos:pos + n, pos:pos + n])
        pos += n
    return total


def half_power_core(t, m, M):
    """(1/pi) int_m^M s^(-1/2) t/(s+t) ds in closed form."""
    if t == 0:
        return 0.0
    r = math.sqrt(t)
    return 2 / math.pi * r * (math.atan(math.sqrt(M) / r) - math.atan(math.sqrt(m) / r))


def mp_core(t, alpha, m, M, convex=False, dps=30):
    """High-precision truncated integral via mpmath."""
    with mpmath.workdps(dps):
        a = mpmath.mpf(alpha) - (1 if convex else 0)
        t = mpmath.mpf(t)
        g = t * t if convex else t
        # split at log-spaced points so each piece is smooth and well scaled
        pts = [mpmath.mpf(10) ** e for e in
               mpmath.linspace(mpmath.log10(m), mpmath.log10(M), 25)]
        integral = mpmath.quad(lambda s: s ** (a - 1) * g / (s + t), pts)
        val = mpmath.sin(a * mpmath.pi) / mpmath.pi * integral
        return float(val)


def choi_matrix(apply, n):
    """sum_ij E_ij (x) phi(E_ij) for a map on M_n given as dense callable."""
    c = np.zeros((n * n, n * n), dtype=complex)
    for i in range(n):
        for j in range(n):
            e = np.zeros((n, n), dtype=complex)
            e[i, j] = 1
            c += np.kron(e, apply(e))
    return c
