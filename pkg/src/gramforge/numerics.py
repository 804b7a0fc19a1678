"""Dense symmetric linear algebra.

Matrices are plain ``numpy`` arrays. A Gram configuration is an ``(n, k)``
array whose rows are the vectors ``p_1..p_n``; its Gram matrix is
``P @ P.T``.
"""
from __future__ import annotations

import numpy as np

from . import config
from .errors import AlignmentError, NotPSDError, NumericalError, RankStructureError


def as_symmetric(X, check: bool = True, atol: float = 1e-9) -> np.ndarray:
    """Return ``X`` as a float array with exact symmetry ``(X + X.T) / 2``."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {X.shape}")
    if check and X.size and np.max(np.abs(X - X.T)) > atol * (1 + np.max(np.abs(X))):
        raise ValueError("matrix is not symmetric")
    return (X + X.T) / 2


def eig_sym(X):
    """Eigenvalues in descending order and matching orthonormal eigenvectors (columns)."""
    X = as_symmetric(X)
    if X.size == 0:
        return np.zeros(0), np.zeros((0, 0))
    if not np.all(np.isfinite(X)):
        raise NumericalError("matrix has non-finite entries", {"n": X.shape[0]})
    try:
        w, V = np.linalg.eigh(X)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition did not converge: {exc}", {"n": X.shape[0]}) from exc
    return w[::-1], V[:, ::-1]


def _threshold(w, tol_rel):
    return tol_rel * max(1.0, float(w[0]) if len(w) else 0.0)


def numeric_rank(X, tol_rel: float | None = None) -> int:
    """Number of eigenvalues above ``tol_rel * max(1, lambda_max)``."""
    tol_rel = config.DEFAULT.tol_rank if tol_rel is None else tol_rel
    if tol_rel <= 0:
        raise ValueError("tol_rel must be positive")
    w, _ = eig_sym(X)
    return int(np.sum(w > _threshold(w, tol_rel)))


def is_psd(X, tol: float | None = None) -> bool:
    tol = config.DEFAULT.tol_rank if tol is None else tol
    w, _ = eig_sym(X)
    if len(w) == 0:
        return True
    return bool(w[-1] >= -tol * (1 + max(w[0], 0.0)))


def gram(P) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    return P @ P.T


def gram_factor(X, tol_rel: float | None = None, dim: int | None = None) -> np.ndarray:
    """Rows ``p_i`` with ``p_i . p_j = X_ij``; ``k`` equals the numeric rank.

    Pass ``dim`` to zero-pad the result to a fixed ambient dimension.
    """
    tol_rel = config.DEFAULT.tol_rank if tol_rel is None else tol_rel
    w, V = eig_sym(X)
    n = len(w)
    if n and w[-1] < -tol_rel * (1 + max(w[0], 0.0)):
        raise NotPSDError(f"matrix is not psd (lambda_min = {w[-1]:.3e})", {"lambda_min": float(w[-1])})
    r = int(np.sum(w > _threshold(w, tol_rel))) if n else 0
    P = V[:, :r] * np.sqrt(w[:r])
    if dim is not None:
        if dim < r:
            raise RankStructureError(f"rank {r} exceeds requested dimension {dim}")
        P = np.hstack([P, np.zeros((n, dim - r))])
    return P


def pad_columns(P, k: int) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    if P.shape[1] > k:
        raise ValueError("cannot pad to a smaller dimension")
    return np.hstack([P, np.zeros((P.shape[0], k - P.shape[1]))])


def procrustes_align(P, Q, shared, tol: float = 1e-8) -> np.ndarray:
    """Orthogonal ``U`` with ``U @ P[h] ~= Q[h]`` for every ``h`` in ``shared``.

    Reflections are allowed. ``P`` and ``Q`` are zero-padded to a common
    dimension first; the Gram matrices of the shared rows must agree.
    """
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    k = max(P.shape[1], Q.shape[1])
    P, Q = pad_columns(P, k), pad_columns(Q, k)
    idx = list(shared)
    A, B = P[idx], Q[idx]
    scale = 1 + (np.max(np.abs(A)) ** 2 if A.size else 0.0)
    mismatch = np.max(np.abs(A @ A.T - B @ B.T)) if idx else 0.0
    if mismatch > tol * scale:
        raise AlignmentError(
            f"shared Gram matrices differ by {mismatch:.3e}", {"mismatch": float(mismatch)}
        )
    if not idx:
        return np.eye(k)
    W, _, Vt = np.linalg.svd(B.T @ A)
    return W @ Vt


def schur_complement(X, pivot: int = 0, tol: float = 1e-12) -> np.ndarray:
    """Schur complement ``A - a a^T / alpha`` with respect to the diagonal entry ``pivot``.

    A (numerically) zero pivot is accepted only when its whole border is
    zero too, in which case the remaining block is returned unchanged.
    """
    X = as_symmetric(X)
    keep = [i for i in range(X.shape[0]) if i != pivot]
    alpha = X[pivot, pivot]
    a = X[keep, pivot]
    A = X[np.ix_(keep, keep)]
    if alpha <= tol:
        if np.max(np.abs(a), initial=0.0) <= np.sqrt(max(tol, 0.0)) and alpha >= -tol:
            return A
        raise RankStructureError(
            f"pivot {alpha:.3e} with border norm {np.linalg.norm(a):.3e}: matrix is not psd",
            {"alpha": float(alpha)},
        )
    return as_symmetric(A - np.outer(a, a) / alpha, check=False)
