"""Symmetric eigendecomposition via cyclic Jacobi rotations.

Deterministic across platforms: plain float64 arithmetic, fixed sweep
order, and a sign convention that makes each eigenvector's
largest-magnitude entry positive.
"""

import numpy as np

from .errors import DataError


def symmetric_eig(S, tol=1e-10, max_sweeps=100):
    """Eigenvalues (descending) and orthonormal eigenvectors of a symmetric matrix.

    Returns (values, vectors) with vectors[:, i] the eigenvector for
    values[i]. Convergence: off-diagonal Frobenius norm below tol times
    the Frobenius norm of the input.
    """
    A = np.array(S, dtype=np.float64, copy=True)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DataError(f"expected a square matrix, got shape {A.shape}")
    if not np.allclose(A, A.T, atol=1e-12 * max(1.0, np.abs(A).max(initial=1.0))):
        raise DataError("matrix is not symmetric")
    d = A.shape[0]
    V = np.eye(d)
    if d == 1:
        return A.diagonal().copy(), V

    norm = np.linalg.norm(A)
    if norm == 0.0:
        return np.zeros(d), V
    # Pivots below this cannot keep the off-diagonal norm above tol * norm.
    skip = tol * norm / (d * d)

    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(A**2) - np.sum(A.diagonal() ** 2))
        if off <= tol * norm:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = A[p, q]
                if abs(apq) <= skip:
                    continue
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                # A <- J^T A J applied to columns then rows p, q.
                col_p = A[:, p].copy()
                col_q = A[:, q].copy()
                A[:, p] = c * col_p - s * col_q
                A[:, q] = s * col_p + c * col_q
                row_p = A[p, :].copy()
                row_q = A[q, :].copy()
                A[p, :] = c * row_p - s * row_q
                A[q, :] = s * row_p + c * row_q
                A[p, q] = 0.0
                A[q, p] = 0.0
                vcol_p = V[:, p].copy()
                vcol_q = V[:, q].copy()
                V[:, p] = c * vcol_p - s * vcol_q
                V[:, q] = s * vcol_p + c * vcol_q

    values = A.diagonal().copy()
    order = np.argsort(-values, kind="stable")
    values = values[order]
    V = V[:, order]
    return values, fix_signs(V)


def fix_signs(V):
    """Flip eigenvector columns so the largest-magnitude entry is positive."""
    V = np.array(V, copy=True)
    for j in range(V.shape[1]):
        i = int(np.argmax(np.abs(V[:, j])))
        if V[i, j] < 0.0:
            V[:, j] = -V[:, j]
    return V
