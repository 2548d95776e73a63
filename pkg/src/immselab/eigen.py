"""Symmetric eigensolver (parallel-order cyclic Jacobi).

Each round applies n/2 disjoint plane rotations at once, chosen by a
round-robin tournament so that every off-diagonal pair is visited once per
sweep. Rotations within a round commute, so the round is a single orthogonal
similarity and the update is vectorized over rows and columns.
"""

import numpy as np

from .errors import ConvergenceError, DomainError

__all__ = ["sym_eigh", "sym_eigenvalues", "psd_sqrt", "psd_inv_sqrt"]


def _round_robin(n):
    """Yield the n-1 (or n) rounds of disjoint index pairs covering all pairs."""
    m = n + (n % 2)
    players = list(range(m))
    for _ in range(m - 1):
        pairs = []
        for k in range(m // 2):
            p, q = players[k], players[m - 1 - k]
            if p < n and q < n:
                pairs.append((min(p, q), max(p, q)))
        yield pairs
        # keep players[0] fixed, rotate the rest
        players = [players[0], players[-1]] + players[1:-1]


def sym_eigh(S, tol=1e-12, max_rotations=None):
    """Eigen-decomposition of a real symmetric matrix.

    Parameters
    ----------
    S : array_like, shape (n, n)
        Symmetric to about 1e-10; it is symmetrized as (S + S^T)/2 first.
    tol : float
        Stop once the off-diagonal Frobenius norm is below ``tol * ||S||_F``.
    max_rotations : int, optional
        Rotation budget, ``100 * n**2`` by default.

    Returns
    -------
    w : ndarray, shape (n,)
        Eigenvalues in descending order.
    V : ndarray, shape (n, n)
        Orthonormal eigenvectors, ``V[:, i]`` paired with ``w[i]``.

    Raises
    ------
    DomainError
        For non-square input or non-finite entries.
    ConvergenceError
        If the rotation budget is exhausted before convergence.
    """
    A = np.array(S, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise DomainError("matrix has non-finite entries")
    A = 0.5 * (A + A.T)
    n = A.shape[0]
    V = np.eye(n)
    if n <= 1:
        return np.diag(A).copy(), V
    if max_rotations is None:
        max_rotations = 100 * n * n

    norm = np.linalg.norm(A)
    if norm == 0.0:
        return np.zeros(n), V
    target = tol * norm
    # pairs whose element is already negligible are skipped, not rotated
    skip = np.finfo(float).eps * norm / n

    schedule = [np.array(r, dtype=int).reshape(-1, 2) for r in _round_robin(n)]
    offmask = ~np.eye(n, dtype=bool)
    rotations = 0
    while True:
        # computed from the entries; norm(A)^2 - norm(diag)^2 cancels badly
        off = np.linalg.norm(A[offmask])
        if off <= target:
            break
        swept = rotations
        for pairs in schedule:
            p, q = pairs[:, 0], pairs[:, 1]
            apq = A[p, q]
            active = np.abs(apq) > skip
            if not np.any(active):
                continue
            p, q, apq = p[active], q[active], apq[active]
            rotations += p.size
            if rotations > max_rotations:
                raise ConvergenceError(
                    f"Jacobi eigensolver exceeded {max_rotations} rotations (n={n}, off-norm {off:.3e})"
                )
            tau = (A[q, q] - A[p, p]) / (2.0 * apq)
            t = np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.sqrt(1.0 + tau * tau))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            # columns: A <- A J
            Ap, Aq = A[:, p].copy(), A[:, q].copy()
            A[:, p] = c * Ap - s * Aq
            A[:, q] = s * Ap + c * Aq
            # rows: A <- J^T A
            Ap, Aq = A[p, :].copy(), A[q, :].copy()
            A[p, :] = c[:, None] * Ap - s[:, None] * Aq
            A[q, :] = s[:, None] * Ap + c[:, None] * Aq
            A[p, q] = 0.0
            A[q, p] = 0.0
            Vp, Vq = V[:, p].copy(), V[:, q].copy()
            V[:, p] = c * Vp - s * Vq
            V[:, q] = s * Vp + c * Vq
        if rotations == swept:
            break

    w = np.diag(A).copy()
    order = np.argsort(-w, kind="stable")
    return w[order], V[:, order]


def sym_eigenvalues(S, tol=1e-12):
    """Eigenvalues of a symmetric matrix, descending."""
    return sym_eigh(S, tol)[0]


def psd_sqrt(S):
    """Symmetric square root of a PSD matrix (negative round-off clipped)."""
    w, V = sym_eigh(S)
    return (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T


def psd_inv_sqrt(S):
    """Inverse symmetric square root of a positive definite matrix."""
    w, V = sym_eigh(S)
    if w[-1] <= 0:
        raise DomainError("matrix is not positive definite")
    return (V / np.sqrt(w)) @ V.T
