"""PCA through a cyclic Jacobi eigensolver."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def jacobi_eigh(a, tol: float = 1e-12, max_sweeps: int = 100):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns ``(eigenvalues, eigenvectors)`` sorted by descending eigenvalue,
    eigenvectors as columns. Stops once the off-diagonal Frobenius norm falls
    below ``tol`` times the full norm.
    """
    A = np.array(a, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("jacobi_eigh needs a square matrix")
    if not np.allclose(A, A.T, rtol=0, atol=1e-12 * max(1.0, np.abs(A).max())):
        raise ValueError("matrix is not symmetric")
    A = 0.5 * (A + A.T)
    d = A.shape[0]
    V = np.eye(d)
    scale = np.linalg.norm(A)
    if scale == 0:
        return np.zeros(d), V
    for _ in range(max_sweeps):
        # summed directly; ||A||^2 - ||diag||^2 cancels below ~1e-8 relative
        off = np.sqrt(2.0 * np.sum(np.triu(A, 1) ** 2))
        if off <= tol * scale:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = A[p, q]
                if abs(apq) <= 1e-300:
                    continue
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + np.hypot(1.0, tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                cp, cq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * cp - s * cq
                A[:, q] = s * cp + c * cq
                rp, rq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * rp - s * rq
                A[q, :] = s * rp + c * rq
                A[p, q] = A[q, p] = 0.0
                vp, vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    w = np.diag(A).copy()
    order = np.argsort(-w, kind="stable")
    return w[order], V[:, order]


@dataclass
class PCAResult:
    mean: np.ndarray
    components: np.ndarray           # (k, d), orthonormal rows
    projected: np.ndarray            # (n, k)
    explained_variance: np.ndarray   # (k,)
    explained_variance_ratio: np.ndarray

    def inverse_transform(self, projected=None) -> np.ndarray:
        p = self.projected if projected is None else projected
        return p @ self.components + self.mean


def pca_fit_transform(X, k: int) -> PCAResult:
    """Project ``X`` (n, d) onto its top-k principal axes.

    Sign convention: each component's largest-magnitude entry is positive.
    Variances use the n - 1 denominator.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be 2-D")
    n, d = X.shape
    if n < 2:
        raise ValueError("PCA needs at least two rows")
    if not 1 <= k <= min(n - 1, d):
        raise ValueError(f"k={k} must lie in [1, min(n-1, d)] = [1, {min(n - 1, d)}]")
    mean = X.mean(axis=0)
    Xc = X - mean
    cov = Xc.T @ Xc / (n - 1)
    total = np.trace(cov)
    if total <= 0:
        raise ValueError("data has zero variance")
    w, V = jacobi_eigh(cov)
    comps = V[:, :k].T.copy()
    for row in comps:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    var = np.maximum(w[:k], 0.0)
    return PCAResult(mean, comps, Xc @ comps.T, var, var / total)
