"""Gram matrix C = XᵀX and its dominant eigenpairs by power iteration.

Both devices run exactly the same deterministic arithmetic (fixed
all-ones start vector, fixed deflation order), so identical inputs
give bit-identical bases.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConfigError, ConvergenceWarning, DegenerateInputError, DimensionError

TOL = 1e-10
MAX_ITER = 1000


@dataclass(frozen=True)
class CovarianceMatrix:
    """Symmetric positive semidefinite m×m matrix."""

    entries: np.ndarray

    def __post_init__(self):
        c = np.array(self.entries, dtype=np.float64)
        if c.ndim != 2 or c.shape[0] != c.shape[1] or c.shape[0] == 0:
            raise DimensionError(f"covariance must be square and nonempty, got shape {c.shape}")
        scale = max(np.abs(c).max(), np.finfo(float).tiny)
        if np.abs(c - c.T).max() > 1e-9 * scale:
            raise DimensionError("covariance matrix is not symmetric")
        c.setflags(write=False)
        object.__setattr__(self, "entries", c)

    @property
    def m(self):
        return self.entries.shape[0]


@dataclass(frozen=True)
class EigenBasis:
    """Eigenpairs sorted by descending eigenvalue.

    Attributes
    ----------
    values : ndarray, shape (k,)
    vectors : ndarray, shape (k, m)
        One unit eigenvector per row, sign-corrected.
    """

    values: np.ndarray
    vectors: np.ndarray

    @property
    def k(self):
        return self.values.size

    @property
    def pairs(self):
        return list(zip(self.values.tolist(), self.vectors))

    def flatten(self):
        """Eigenvector components concatenated in dominance order (the array p)."""
        return self.vectors.ravel()


class PowerResult(NamedTuple):
    eigenvalue: float
    eigenvector: np.ndarray
    converged: bool
    n_iter: int


def _entries(C):
    return C.entries if isinstance(C, CovarianceMatrix) else np.asarray(C, dtype=np.float64)


def covariance(X):
    """C = XᵀX, without mean-centering."""
    x = np.asarray(getattr(X, "rows", X), dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise DimensionError(f"X must be a nonempty 2-d array, got shape {x.shape}")
    c = x.T @ x
    return CovarianceMatrix((c + c.T) / 2)


def power_method(C, tol=TOL, max_iter=MAX_ITER):
    """Dominant eigenpair of a symmetric matrix.

    Iterates v <- Cv / |Cv| from the normalized all-ones vector until the
    iterate moves less than ``tol`` (up to sign) or ``max_iter`` is hit.
    The eigenvalue is the Rayleigh quotient vᵀCv.

    Returns
    -------
    PowerResult
        ``converged`` is False (and a ConvergenceWarning is issued) when
        ``max_iter`` was reached first.
    """
    c = _entries(C)
    m = c.shape[0]
    if not np.any(c):
        raise DegenerateInputError("power method on a zero matrix")
    v = np.full(m, 1.0 / np.sqrt(m))
    # a start in the null space of C would stall; nudge entry 0
    if np.linalg.norm(c @ v) < 1e-14 * max(np.trace(c), np.linalg.norm(c)):
        v[0] += 1e-6
        v /= np.linalg.norm(v)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        w = c @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            converged = True
            break
        w /= nw
        change = min(np.linalg.norm(w - v), np.linalg.norm(w + v))
        v = w
        if change < tol:
            converged = True
            break
    if not converged:
        warnings.warn(f"power method stopped after {max_iter} iterations", ConvergenceWarning, stacklevel=2)
    return PowerResult(float(v @ c @ v), v, converged, it)


def deflate(C, lam, v):
    """C - lam·vvᵀ, kept exactly symmetric."""
    c = _entries(C)
    v = np.asarray(v, dtype=np.float64)
    d = c - lam * np.outer(v, v)
    return (d + d.T) / 2


def correct_sign(v):
    """Flip ``v`` so its largest-magnitude entry is positive."""
    v = np.asarray(v, dtype=np.float64)
    return -v if v[np.argmax(np.abs(v))] < 0 else v.copy()


def _complete(found, m):
    # orthonormal vectors spanning the complement of ``found`` (deterministic)
    basis = list(found)
    extra = []
    for e in np.eye(m):
        u = e.copy()
        for _ in range(2):
            for b in basis:
                u -= (u @ b) * b
        n = np.linalg.norm(u)
        if n > 1e-6:
            u /= n
            basis.append(u)
            extra.append(u)
    return extra


def extract_basis(C, k=4, tol=TOL, max_iter=MAX_ITER):
    """Top-``k`` eigenpairs by repeated power iteration and deflation.

    Each eigenvector is sign-corrected (largest |entry| positive). Once
    the deflated matrix is numerically zero the remaining directions
    have eigenvalue 0 and are completed deterministically.
    """
    c = _entries(C).copy()
    m = c.shape[0]
    if not 1 <= k <= m:
        raise ConfigError(f"k must lie in [1, {m}], got {k}")
    if not np.any(c):
        raise DegenerateInputError("cannot extract eigenvectors of a zero matrix")
    floor = 1e-14 * max(np.trace(c), np.linalg.norm(c))
    values, vectors = [], []
    while len(values) < k:
        if np.linalg.norm(c) <= floor:
            for u in _complete(vectors, m)[:k - len(values)]:
                values.append(0.0)
                vectors.append(u)
            break
        lam, v, _, _ = power_method(c, tol, max_iter)
        values.append(lam)
        vectors.append(v)
        c = deflate(c, lam, v)
    order = np.argsort(-np.asarray(values), kind="stable")
    vals = np.asarray(values)[order]
    vecs = np.array([correct_sign(vectors[i]) for i in order])
    return EigenBasis(vals, vecs)
