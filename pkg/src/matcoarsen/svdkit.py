"""Partial SVD by subspace iteration and SVD updating after appended columns.

Operators may be :class:`~matcoarsen.sparse.SparseMatrix` instances or dense
``ndarray`` objects; the dense oracle :func:`dense_svd` wraps LAPACK.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .sparse import DimensionError, SparseMatrix, multiply_dense

__all__ = [
    "DENSE_CAP",
    "NumericalError",
    "RankDeflationWarning",
    "SizeError",
    "PartialSVD",
    "SvdUpdateWorkspace",
    "dense_svd",
    "low_rank_update",
    "orthonormalize",
    "partial_svd",
    "rayleigh_ritz",
    "subspace_iterate",
    "top_k_svd",
    "zha_simon_update",
]

log = logging.getLogger(__name__)

DENSE_CAP = 4000
DEFLATION_TOL = 1e-12


class SizeError(ValueError):
    """Problem exceeds the dense-oracle size cap."""


class NumericalError(ArithmeticError):
    """A computation produced a value outside its mathematical range."""


class RankDeflationWarning(RuntimeWarning):
    """Orthonormalization dropped numerically dependent columns."""


# -- operator helpers -------------------------------------------------------
def _shape(A):
    return A.shape


def _matmul(A, X) -> np.ndarray:
    if isinstance(A, SparseMatrix):
        return multiply_dense(A, X)
    return np.asarray(A) @ X


def _rmatmul(A, X) -> np.ndarray:
    """``A.T @ X``."""
    if isinstance(A, SparseMatrix):
        return multiply_dense(A, X, transpose_A=True)
    return np.asarray(A).T @ X


def _todense(A) -> np.ndarray:
    return A.toarray() if isinstance(A, SparseMatrix) else np.asarray(A, dtype=np.float64)


def _fix_signs(U, V):
    """Make the largest-magnitude entry of every left singular vector nonnegative."""
    if U.shape[1] == 0:
        return U, V
    idx = np.argmax(np.abs(U), axis=0)
    s = np.sign(U[idx, np.arange(U.shape[1])])
    s[s == 0] = 1.0
    return U * s, V * s


@dataclass
class PartialSVD:
    """Rank-``k`` factorization ``U diag(sigma) V^T``."""

    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        self.U = np.asarray(self.U, dtype=np.float64)
        self.sigma = np.asarray(self.sigma, dtype=np.float64)
        self.V = np.asarray(self.V, dtype=np.float64)
        if not (self.U.shape[1] == self.sigma.size == self.V.shape[1]):
            raise DimensionError(
                f"inconsistent factor shapes U{self.U.shape}, sigma({self.sigma.size}), V{self.V.shape}"
            )

    @property
    def k(self) -> int:
        return int(self.sigma.size)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.U.shape[0], self.V.shape[0])

    def truncate(self, k: int) -> "PartialSVD":
        return PartialSVD(self.U[:, :k], self.sigma[:k], self.V[:, :k])

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.sigma) @ self.V.T

    def save(self, prefix) -> None:
        """Write ``<prefix>U.mtx``, ``<prefix>V.mtx`` and ``<prefix>sigma.txt``."""
        from .mmio import write_dense_matrix_market

        prefix = str(prefix)
        write_dense_matrix_market(prefix + "U.mtx", self.U)
        write_dense_matrix_market(prefix + "V.mtx", self.V)
        with open(prefix + "sigma.txt", "w", encoding="ascii", newline="\n") as fh:
            fh.writelines(f"{s!r}\n" for s in self.sigma.tolist())

    @classmethod
    def load(cls, prefix) -> "PartialSVD":
        from .mmio import load_dense_matrix_market

        prefix = str(prefix)
        U = load_dense_matrix_market(prefix + "U.mtx")
        V = load_dense_matrix_market(prefix + "V.mtx")
        sigma = np.loadtxt(prefix + "sigma.txt", ndmin=1)
        return cls(U, sigma, V)


@dataclass
class SvdUpdateWorkspace:
    """Intermediate quantities of an SVD update, kept for inspection."""

    U_hat: np.ndarray
    R: np.ndarray
    H_D: np.ndarray
    Theta: np.ndarray
    F: np.ndarray
    G: np.ndarray
    X_l: np.ndarray | None = None
    S_l: np.ndarray | None = None
    Y_l: np.ndarray | None = None


# -- dense oracle -----------------------------------------------------------
def dense_svd(A, cap: int = DENSE_CAP) -> PartialSVD:
    """Thin SVD of a matrix small enough to densify (``min(m, n) <= cap``)."""
    m, n = _shape(A)
    if min(m, n) > cap:
        raise SizeError(f"dense SVD of a {m}x{n} matrix exceeds the cap {cap}")
    M = _todense(A)
    if M.size == 0:
        return PartialSVD(np.zeros((m, 0)), np.zeros(0), np.zeros((n, 0)))
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    U, V = _fix_signs(U, Vt.T)
    return PartialSVD(U, s, V)


# -- orthonormalization -----------------------------------------------------
def orthonormalize(X, against=None, tol: float = DEFLATION_TOL, warn: bool = True) -> np.ndarray:
    """Orthonormal basis of ``range(X)`` by Gram-Schmidt with reorthogonalization.

    Columns whose norm after projection falls below ``tol`` times their
    input norm are dropped. With ``against`` (orthonormal columns) the basis
    is also made orthogonal to ``range(against)``.
    """
    X = np.array(X, dtype=np.float64, copy=True)
    m, p = X.shape
    Q = np.empty((m, p))
    q = 0
    dropped = 0
    for j in range(p):
        v = X[:, j]
        ref = np.linalg.norm(v)
        if ref == 0.0:
            dropped += 1
            continue
        for _ in range(2):
            if against is not None and against.shape[1]:
                v = v - against @ (against.T @ v)
            if q:
                v = v - Q[:, :q] @ (Q[:, :q].T @ v)
        nv = np.linalg.norm(v)
        if nv < tol * ref:
            dropped += 1
            continue
        Q[:, q] = v / nv
        q += 1
    if dropped and warn:
        warnings.warn(f"orthonormalization deflated {dropped} of {p} columns", RankDeflationWarning, stacklevel=2)
    return Q[:, :q]


def _orth_qr(X, warn: bool = True) -> np.ndarray:
    """Thin orthonormal factor; Householder QR unless the block is rank deficient."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[1] == 0:
        return X.copy()
    Q, R = np.linalg.qr(X)
    d = np.abs(np.diag(R))
    ref = np.linalg.norm(X, axis=0)
    if np.all(d >= DEFLATION_TOL * np.maximum(ref, np.finfo(float).tiny)) and np.all(ref > 0):
        return Q
    return orthonormalize(X, warn=warn)


# -- Rayleigh-Ritz and subspace iteration -----------------------------------
def rayleigh_ritz(U, A, V=None) -> PartialSVD:
    """Best factorization of ``A`` within the given subspaces.

    With ``V`` given, diagonalizes ``S = U^T A V``. Without it, uses
    ``S = U^T A`` so the result is the SVD of ``U U^T A``.
    """
    if V is None:
        S = _rmatmul(A, U).T
        RU, s, RVt = np.linalg.svd(S, full_matrices=False)
        Uo, Vo = _fix_signs(U @ RU, RVt.T)
        return PartialSVD(Uo, s, Vo)
    S = U.T @ _matmul(A, V)
    RU, s, RVt = np.linalg.svd(S, full_matrices=False)
    Uo, Vo = _fix_signs(U @ RU, V @ RVt.T)
    return PartialSVD(Uo, s, Vo)


def subspace_iterate(U_s, A_t, iters: int, rotate_every: bool = False, warn: bool = True) -> PartialSVD:
    """Refine a left subspace ``U_s`` by block power steps with ``A_t``.

    Each pass computes ``V = A_t^T U``, ``U = A_t V`` and orthonormalizes
    both, in that order. The diagonalization of ``S = U^T A_t V`` runs only
    on the last pass unless ``rotate_every`` is set; with ``iters == 0`` it
    runs once on the orthonormalized start.
    """
    m, n = _shape(A_t)
    U = np.asarray(U_s, dtype=np.float64)
    if U.ndim != 2 or U.shape[0] != m:
        raise DimensionError(f"start block has {U.shape[0]} rows, operator has {m}")
    if iters < 0:
        raise ValueError("iters must be nonnegative")
    U = _orth_qr(U, warn=warn)
    if iters == 0:
        V = _orth_qr(_rmatmul(A_t, U), warn=warn)
        return rayleigh_ritz(U, A_t, V)
    result = None
    for it in range(iters):
        V = _rmatmul(A_t, U)
        U = _matmul(A_t, V)
        U = _orth_qr(U, warn=warn)
        V = _orth_qr(V, warn=warn)
        if rotate_every or it == iters - 1:
            result = rayleigh_ritz(U, A_t, V)
            U, V = result.U, result.V
    return result


def partial_svd(A, k: int, iters: int = 10, seed: int = 0, oversample: int = 0, warn: bool = True) -> PartialSVD:
    """Top-``k`` SVD by subspace iteration from a seeded Gaussian start.

    ``oversample`` extra columns are carried through the iteration and
    dropped at the end.
    """
    m, n = _shape(A)
    if not (1 <= k <= min(m, n)):
        raise DimensionError(f"k={k} must lie in [1, {min(m, n)}]")
    if iters < 1:
        raise ValueError("iters must be >= 1")
    b = min(k + max(0, oversample), min(m, n))
    rng = np.random.default_rng(seed)
    U0 = rng.standard_normal((m, b))
    res = subspace_iterate(U0, A, iters, warn=warn)
    return res.truncate(k)


def top_k_svd(A, k: int, cap: int = DENSE_CAP, iters: int = 30, seed: int = 0) -> PartialSVD:
    """Accurate top-``k`` factors: dense below the cap, subspace iteration above it."""
    m, n = _shape(A)
    if min(m, n) <= cap and m * n <= 4 * cap * cap:
        return dense_svd(A, cap).truncate(k)
    return partial_svd(A, k, iters=iters, seed=seed, oversample=max(10, k // 2))


# -- SVD updating ------------------------------------------------------------
def _residual_basis(resid: np.ndarray, Uk: np.ndarray, ref: float) -> np.ndarray:
    """Orthonormal basis of ``range(resid)`` that is also orthogonal to ``Uk``.

    Rank is revealed by column-pivoted QR; directions with ``|R_ii|`` below
    ``DEFLATION_TOL * ref`` are discarded.
    """
    if resid.shape[1] == 0 or ref == 0.0:
        return np.zeros((resid.shape[0], 0))
    Q, R, _ = scipy.linalg.qr(resid, mode="economic", pivoting=True)
    d = np.abs(np.diag(R))
    r = int(np.count_nonzero(d > DEFLATION_TOL * ref))
    Q = Q[:, :r]
    if r and Uk.shape[1]:
        Q = Q - Uk @ (Uk.T @ Q)
        Q, _ = np.linalg.qr(Q)
    return Q


def _block_diag_right(V_k: np.ndarray, p: int, G: np.ndarray) -> np.ndarray:
    """``[[V_k, 0], [0, I_p]] @ G`` without forming the block matrix."""
    k = V_k.shape[1]
    return np.vstack([V_k @ G[:k], G[k:]])


def _finish_update(U_bar, H, V_k, p, k, ws_extra=None, return_workspace=False):
    F, theta, Gt = np.linalg.svd(H, full_matrices=False)
    r = min(k, theta.size)
    F, theta, G = F[:, :r], theta[:r], Gt[:r].T
    U_new = U_bar @ F
    V_new = _block_diag_right(V_k, p, G)
    U_new, V_new = _fix_signs(U_new, V_new)
    out = PartialSVD(U_new, theta, V_new)
    if return_workspace:
        return out, (F, theta, G)
    return out


def zha_simon_update(svd: PartialSVD, D, k: int | None = None, return_workspace: bool = False):
    """Rank-``k`` SVD of ``[A, D]`` from a rank-``k`` SVD of ``A``.

    The residual ``(I - U_k U_k^T) D`` is factored as ``U_hat R`` by a thin
    QR (numerically dependent directions are deflated), then the small
    matrix ``[[Sigma_k, U_k^T D], [0, R]]`` is diagonalized.
    """
    k = svd.k if k is None else int(k)
    Dd = _todense(D)
    if Dd.ndim == 1:
        Dd = Dd[:, None]
    m, p = Dd.shape
    if m != svd.U.shape[0]:
        raise DimensionError(f"D has {m} rows, factors have {svd.U.shape[0]}")
    if p == 0:
        return (svd, None) if return_workspace else svd
    Uk, Sk, Vk = svd.U, svd.sigma, svd.V
    UtD = Uk.T @ Dd
    resid = Dd - Uk @ UtD
    U_hat = _residual_basis(resid, Uk, float(np.max(np.linalg.norm(Dd, axis=0))))
    R = U_hat.T @ resid
    kk = Sk.size
    q = U_hat.shape[1]
    H = np.zeros((kk + q, kk + p))
    H[:kk, :kk] = np.diag(Sk)
    H[:kk, kk:] = UtD
    H[kk:, kk:] = R
    U_bar = np.hstack([Uk, U_hat])
    out = _finish_update(U_bar, H, Vk, p, k, return_workspace=return_workspace)
    if return_workspace:
        res, (F, theta, G) = out
        return res, SvdUpdateWorkspace(U_hat, R, H, theta, F, G)
    return out


def low_rank_update(svd: PartialSVD, D, k: int | None = None, l: int = 1, iters: int = 4,
                    seed: int = 0, return_workspace: bool = False):
    """Zha-Simon update with the residual replaced by a rank-``l`` approximation.

    ``(I - U_k U_k^T) D ~= X_l S_l Y_l^T`` is computed with
    :func:`partial_svd` and the update uses ``[U_k, X_l]`` as the left basis.
    """
    k = svd.k if k is None else int(k)
    Dd = _todense(D)
    if Dd.ndim == 1:
        Dd = Dd[:, None]
    m, p = Dd.shape
    if m != svd.U.shape[0]:
        raise DimensionError(f"D has {m} rows, factors have {svd.U.shape[0]}")
    if p == 0:
        return (svd, None) if return_workspace else svd
    if not (1 <= l <= p):
        raise DimensionError(f"l={l} must lie in [1, {p}]")
    Uk, Sk, Vk = svd.U, svd.sigma, svd.V
    UtD = Uk.T @ Dd
    resid = Dd - Uk @ UtD
    l_eff = min(l, m)
    if np.linalg.norm(resid) == 0.0:
        X = np.zeros((m, 0))
        S = np.zeros(0)
        Y = np.zeros((p, 0))
    else:
        fac = partial_svd(resid, l_eff, iters=iters, seed=seed, warn=False)
        X, S, Y = fac.U, fac.sigma, fac.V
        # keep the tracked basis orthonormal when the residual has rank < l
        keep = S > DEFLATION_TOL * S[0]
        X, S, Y = X[:, keep], S[keep], Y[:, keep]
    kk = Sk.size
    q = S.size
    H = np.zeros((kk + q, kk + p))
    H[:kk, :kk] = np.diag(Sk)
    H[:kk, kk:] = UtD
    H[kk:, kk:] = S[:, None] * Y.T
    U_bar = np.hstack([Uk, X])
    out = _finish_update(U_bar, H, Vk, p, k, return_workspace=return_workspace)
    if return_workspace:
        res, (F, theta, G) = out
        return res, SvdUpdateWorkspace(X, S[:, None] * Y.T, H, theta, F, G, X, S, Y)
    return out
