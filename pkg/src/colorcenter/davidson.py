"""Block Davidson eigensolver for the lowest eigenpairs of a sparse symmetric matrix."""
from __future__ import annotations

import logging

import numpy as np

logger = logging.getLogger(__name__)


class ConvergenceError(RuntimeError):
    """Iterative solver did not reach the requested residual."""

    def __init__(self, msg, eigenvalues=None, residuals=None):
        super().__init__(msg)
        self.eigenvalues = eigenvalues
        self.residuals = residuals


def _orthonormalize(V, X, drop_tol=1e-10):
    """Orthogonalize columns of X against orthonormal V (twice) and among themselves."""
    norms = np.linalg.norm(X, axis=0)
    X = X[:, norms > 0] / norms[norms > 0]
    for _ in range(2):
        if V is not None and V.shape[1]:
            X = X - V @ (V.T @ X)
    Q, R = np.linalg.qr(X)
    keep = np.abs(np.diag(R)) > drop_tol
    Q = Q[:, keep]
    if V is not None and V.shape[1] and Q.shape[1]:
        Q = Q - V @ (V.T @ Q)
        Q, _ = np.linalg.qr(Q)
    return Q


def davidson(
    A,
    n: int,
    tol: float = 1e-9,
    block: int | None = None,
    max_subspace: int | None = None,
    max_iter: int = 500,
    seed: int = 12345,
    diag=None,
):
    """Lowest ``n`` eigenpairs of symmetric ``A`` (anything supporting ``A @ X``).

    Jacobi-preconditioned block Davidson with full reorthogonalization and
    thick restart. Convergence: every residual norm ``|A x - theta x| <= tol``.
    The start block is built from unit vectors on the smallest diagonal
    entries plus a seeded perturbation, so results are reproducible.
    """
    N = A.shape[0]
    if diag is None:
        diag = np.asarray(A.diagonal()).ravel()
    block = block or min(N, n + 4)
    max_subspace = max_subspace or min(N, max(8 * block, 60))
    if N <= 2 * block:
        dense = A.toarray() if hasattr(A, "toarray") else np.asarray(A)
        w, v = np.linalg.eigh(dense)
        return w[:n], v[:, :n]

    rng = np.random.default_rng(seed)
    start = np.argsort(diag, kind="stable")[:block]
    X = np.zeros((N, block))
    X[start, np.arange(block)] = 1.0
    X += 1e-3 * rng.standard_normal((N, block))
    V = _orthonormalize(None, X)
    AV = A @ V

    theta = None
    for it in range(max_iter):
        H = V.T @ AV
        H = 0.5 * (H + H.T)
        w, s = np.linalg.eigh(H)
        theta = w[:block]
        Xr = V @ s[:, :block]
        AXr = AV @ s[:, :block]
        R = AXr - Xr * theta
        res = np.linalg.norm(R, axis=0)
        if np.all(res[:n] <= tol):
            logger.debug("davidson converged in %d iterations (subspace %d)", it, V.shape[1])
            return theta[:n].copy(), Xr[:, :n].copy()
        active = np.nonzero(res > tol)[0]
        denom = theta[active][None, :] - diag[:, None]
        small = np.abs(denom) < 1e-8
        denom[small] = np.copysign(1e-8, denom[small] + 0.0)
        T = R[:, active] / denom
        if V.shape[1] + T.shape[1] > max_subspace:
            # thick restart on the current Ritz vectors
            V = _orthonormalize(None, Xr)
            AV = A @ V
        Tn = _orthonormalize(V, T)
        if Tn.shape[1] == 0:
            Tn = _orthonormalize(V, R[:, active])
            if Tn.shape[1] == 0:
                break
        V = np.hstack([V, Tn])
        AV = np.hstack([AV, A @ Tn])
    res = None if theta is None else np.linalg.norm(R, axis=0)[:n]
    raise ConvergenceError(
        f"Davidson did not converge to {tol:g} within {max_iter} iterations",
        eigenvalues=None if theta is None else theta[:n],
        residuals=res,
    )
