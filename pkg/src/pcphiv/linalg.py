"""Small dense matrix kernels (n <= 10) used for NGMs and Jacobians."""

from __future__ import annotations

import numpy as np

from .errors import ConvergenceError, SingularMatrixError

PIVOT_RTOL = 1e-12


def _square(m) -> np.ndarray:
    a = np.array(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def invert(m) -> np.ndarray:
    """Gauss-Jordan inverse with partial pivoting.

    Raises SingularMatrixError when a pivot falls below ``1e-12 * max|m_ij|``.
    """
    a = _square(m)
    n = a.shape[0]
    scale = np.max(np.abs(a)) if a.size else 0.0
    if scale == 0.0:
        raise SingularMatrixError("zero matrix is singular")
    aug = np.hstack([a, np.eye(n)])
    for col in range(n):
        piv = col + int(np.argmax(np.abs(aug[col:, col])))
        if abs(aug[piv, col]) < PIVOT_RTOL * scale:
            raise SingularMatrixError(f"pivot {aug[piv, col]:.3e} in column {col} below threshold")
        if piv != col:
            aug[[col, piv]] = aug[[piv, col]]
        aug[col] /= aug[col, col]
        for row in range(n):
            if row != col and aug[row, col] != 0.0:
                aug[row] -= aug[row, col] * aug[col]
    return aug[:, n:]


def eigenvalues(m) -> np.ndarray:
    """All eigenvalues (complex, with multiplicity), sorted by descending real part."""
    a = _square(m)
    try:
        w = np.linalg.eigvals(a)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigenvalue iteration did not converge: {exc}") from exc
    w = w.astype(complex)
    return w[np.lexsort((-w.imag, -w.real))]


def spectral_radius(m) -> float:
    a = _square(m)
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(eigenvalues(a))))


def companion(coeffs) -> np.ndarray:
    """Companion matrix of the monic polynomial x^n + c[0] x^(n-1) + ... + c[n-1]."""
    c = np.asarray(coeffs, dtype=float)
    n = len(c)
    out = np.zeros((n, n))
    out[0, :] = -c
    if n > 1:
        out[1:, :-1] = np.eye(n - 1)
    return out


def fd_jacobian(func, x, indices=None, rel_step: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian of ``func`` restricted to ``indices``.

    The step for coordinate i is ``rel_step * (1 + |x_i|)``. Rows and columns
    both follow ``indices`` (all coordinates by default).
    """
    x = np.asarray(x, dtype=float)
    idx = list(range(len(x))) if indices is None else list(indices)
    jac = np.empty((len(idx), len(idx)))
    for col, i in enumerate(idx):
        h = rel_step * (1.0 + abs(x[i]))
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        jac[:, col] = (np.asarray(func(xp))[idx] - np.asarray(func(xm))[idx]) / (2 * h)
    return jac
