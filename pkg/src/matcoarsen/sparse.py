"""Sparse matrix storage with column and row access, plus graph helpers.

The matching loop in :mod:`matcoarsen.coarsening` walks down a column and
then along every row it touches, so both a compressed-column and a
compressed-row view are built eagerly and kept for the life of the matrix.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np
import scipy.sparse as sp

__all__ = [
    "DimensionError",
    "SparseMatrix",
    "WeightedEdgeList",
    "column_norms",
    "frobenius_norm",
    "incidence_matrix",
    "laplacian",
    "multiply_dense",
    "transpose",
]


class DimensionError(ValueError):
    """Operands have incompatible shapes."""


def _frozen(arr: np.ndarray, dtype) -> np.ndarray:
    out = np.array(arr, dtype=dtype, copy=True)
    out.flags.writeable = False
    return out


def _compressed(indptr, indices, data, shape, fmt):
    cls = sp.csc_matrix if fmt == "csc" else sp.csr_matrix
    mat = cls((data, indices, indptr), shape=shape, copy=False)
    mat.has_sorted_indices = True
    mat.has_canonical_format = True
    return mat


class SparseMatrix:
    """Immutable real sparse matrix holding CSC and CSR views of one nonzero set.

    Build instances with :meth:`from_coo`, :meth:`from_scipy` or
    :meth:`from_dense`; each normalises the input (duplicates summed,
    explicit zeros dropped, indices sorted) before freezing the arrays.
    """

    __slots__ = ("_shape", "_csc", "_csr")

    def __init__(self, csc: sp.csc_matrix, csr: sp.csr_matrix):
        # Internal constructor: callers guarantee canonical, consistent views.
        self._shape = (int(csc.shape[0]), int(csc.shape[1]))
        self._csc = csc
        self._csr = csr

    # -- construction ---------------------------------------------------
    @classmethod
    def from_scipy(cls, mat) -> "SparseMatrix":
        mat = sp.csc_matrix(mat, dtype=np.float64, copy=True)
        mat.sum_duplicates()
        mat.eliminate_zeros()
        mat.sort_indices()
        if mat.nnz and not np.all(np.isfinite(mat.data)):
            raise ValueError("sparse matrix has non-finite entries")
        return cls._from_canonical_csc(mat)

    @classmethod
    def _from_canonical_csc(cls, csc: sp.csc_matrix) -> "SparseMatrix":
        shape = csc.shape
        indptr = _frozen(csc.indptr, np.int64)
        indices = _frozen(csc.indices, np.int64)
        data = _frozen(csc.data, np.float64)
        csc_f = _compressed(indptr, indices, data, shape, "csc")
        csr = sp.csr_matrix(csc_f)
        csr.sort_indices()
        csr_f = _compressed(
            _frozen(csr.indptr, np.int64),
            _frozen(csr.indices, np.int64),
            _frozen(csr.data, np.float64),
            shape,
            "csr",
        )
        return cls(csc_f, csr_f)

    @classmethod
    def from_coo(cls, rows, cols, vals, shape) -> "SparseMatrix":
        """Assemble from coordinate triples; duplicate positions are summed."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        m, n = int(shape[0]), int(shape[1])
        if rows.size and (rows.min() < 0 or rows.max() >= m):
            raise DimensionError("row index out of range")
        if cols.size and (cols.min() < 0 or cols.max() >= n):
            raise DimensionError("column index out of range")
        return cls.from_scipy(sp.coo_matrix((vals, (rows, cols)), shape=(m, n)))

    @classmethod
    def from_dense(cls, arr) -> "SparseMatrix":
        arr = np.atleast_2d(np.asarray(arr, dtype=np.float64))
        return cls.from_scipy(sp.csc_matrix(arr))

    @classmethod
    def zeros(cls, m: int, n: int) -> "SparseMatrix":
        return cls.from_scipy(sp.csc_matrix((m, n), dtype=np.float64))

    @classmethod
    def identity(cls, n: int) -> "SparseMatrix":
        return cls.from_scipy(sp.identity(n, format="csc", dtype=np.float64))

    # -- basic properties -------------------------------------------------
    @property
    def shape(self) -> tuple[int, int]:
        return self._shape

    @property
    def nrows(self) -> int:
        return self._shape[0]

    @property
    def ncols(self) -> int:
        return self._shape[1]

    @property
    def nnz(self) -> int:
        return int(self._csc.nnz)

    @property
    def csc(self) -> sp.csc_matrix:
        """Read-only compressed-column view (do not mutate)."""
        return self._csc

    @property
    def csr(self) -> sp.csr_matrix:
        """Read-only compressed-row view (do not mutate)."""
        return self._csr

    @property
    def T(self) -> "SparseMatrix":
        return transpose(self)

    def column(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Row indices and values of column ``i``."""
        lo, hi = self._csc.indptr[i], self._csc.indptr[i + 1]
        return self._csc.indices[lo:hi], self._csc.data[lo:hi]

    def row(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        """Column indices and values of row ``j``."""
        lo, hi = self._csr.indptr[j], self._csr.indptr[j + 1]
        return self._csr.indices[lo:hi], self._csr.data[lo:hi]

    def column_nnz(self) -> np.ndarray:
        return np.diff(self._csc.indptr)

    def row_nnz(self) -> np.ndarray:
        return np.diff(self._csr.indptr)

    def iter_columns(self) -> Iterator[tuple[int, int, float]]:
        """Yield ``(row, col, value)`` triples in column-major order."""
        p = self._csc.indptr
        for c in range(self.ncols):
            for k in range(p[c], p[c + 1]):
                yield int(self._csc.indices[k]), c, float(self._csc.data[k])

    def iter_rows(self) -> Iterator[tuple[int, int, float]]:
        """Yield ``(row, col, value)`` triples in row-major order."""
        p = self._csr.indptr
        for r in range(self.nrows):
            for k in range(p[r], p[r + 1]):
                yield r, int(self._csr.indices[k]), float(self._csr.data[k])

    def select_columns(self, idx: Iterable[int], scale=None) -> "SparseMatrix":
        """Columns ``idx`` (in that order), each optionally multiplied by ``scale``."""
        idx = np.asarray(list(idx) if not isinstance(idx, np.ndarray) else idx, dtype=np.int64)
        sub = self._csc[:, idx]
        if scale is not None:
            scale = np.asarray(scale, dtype=np.float64)
            sub = sub @ sp.diags(scale, format="csc")
        return SparseMatrix.from_scipy(sub)

    def select_rows(self, idx: Iterable[int], scale=None) -> "SparseMatrix":
        return transpose(transpose(self).select_columns(idx, scale))

    def toarray(self) -> np.ndarray:
        return self._csc.toarray()

    def to_scipy(self, fmt: str = "csc"):
        """Writable scipy copy in the requested format."""
        return (self._csc if fmt == "csc" else self._csr).copy().asformat(fmt)

    def equals(self, other: "SparseMatrix") -> bool:
        """Bit-exact equality of shape, pattern and values."""
        if not isinstance(other, SparseMatrix) or self.shape != other.shape:
            return False
        a, b = self._csc, other._csc
        return (
            np.array_equal(a.indptr, b.indptr)
            and np.array_equal(a.indices, b.indices)
            and np.array_equal(a.data.view(np.uint64), b.data.view(np.uint64))
        )

    def __repr__(self) -> str:
        return f"SparseMatrix(shape={self.shape}, nnz={self.nnz})"


def transpose(A: SparseMatrix) -> SparseMatrix:
    """Return ``A^T``; the two stored views simply swap roles."""
    m, n = A.shape
    csc = _compressed(A.csr.indptr, A.csr.indices, A.csr.data, (n, m), "csc")
    csr = _compressed(A.csc.indptr, A.csc.indices, A.csc.data, (n, m), "csr")
    return SparseMatrix(csc, csr)


def column_norms(A: SparseMatrix) -> np.ndarray:
    """Euclidean norm of every column (zero for empty columns)."""
    csc = A.csc
    cols = np.repeat(np.arange(A.ncols), np.diff(csc.indptr))
    sq = np.bincount(cols, weights=csc.data * csc.data, minlength=A.ncols)
    return np.sqrt(sq)


def frobenius_norm(A: SparseMatrix) -> float:
    d = A.csc.data
    return float(np.sqrt(np.dot(d, d)))


def multiply_dense(A: SparseMatrix, X, side: str = "left", transpose_A: bool = False) -> np.ndarray:
    """Sparse-dense product.

    ``side="left"`` computes ``op(A) @ X`` and ``side="right"`` computes
    ``X @ op(A)``, where ``op(A)`` is ``A`` or ``A.T``.
    """
    X = np.asarray(X, dtype=np.float64)
    vector = X.ndim == 1
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    if side == "left":
        X2 = X.reshape(-1, 1) if vector else X
        op = A.csc if transpose_A else A.csr
        inner = A.nrows if transpose_A else A.ncols
        if X2.shape[0] != inner:
            raise DimensionError(f"cannot multiply {_opshape(A, transpose_A)} by {X.shape}")
        # (A^T) @ X == (CSC of A)^T @ X, which scipy evaluates as a CSR product
        out = (op.T if transpose_A else op) @ X2
        return out.ravel() if vector else np.asarray(out)
    X2 = X.reshape(1, -1) if vector else X
    inner = A.ncols if transpose_A else A.nrows
    if X2.shape[1] != inner:
        raise DimensionError(f"cannot multiply {X.shape} by {_opshape(A, transpose_A)}")
    # X @ op(A) == (op(A)^T @ X^T)^T
    op_t = A.csr if transpose_A else A.csc
    out = (op_t if transpose_A else op_t.T) @ X2.T
    out = np.asarray(out).T
    return out.ravel() if vector else np.ascontiguousarray(out)


def _opshape(A: SparseMatrix, t: bool) -> tuple[int, int]:
    return (A.ncols, A.nrows) if t else A.shape


@dataclass(frozen=True)
class WeightedEdgeList:
    """Undirected weighted graph on vertices ``0..n-1``."""

    n: int
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=np.int64)
        v = np.asarray(self.v, dtype=np.int64)
        w = np.asarray(self.w, dtype=np.float64)
        if not (u.shape == v.shape == w.shape) or u.ndim != 1:
            raise ValueError("u, v, w must be 1-d arrays of equal length")
        if u.size:
            if min(u.min(), v.min()) < 0 or max(u.max(), v.max()) >= self.n:
                raise ValueError("edge endpoint out of range")
            if np.any(u == v):
                bad = int(np.flatnonzero(u == v)[0])
                raise ValueError(f"self-loop at edge {bad} (vertex {int(u[bad])})")
            if not np.all(np.isfinite(w)) or np.any(w <= 0):
                raise ValueError("edge weights must be finite and positive")
            key = np.minimum(u, v) * self.n + np.maximum(u, v)
            if np.unique(key).size != key.size:
                raise ValueError("duplicate undirected edge")
        for name, arr in (("u", u), ("v", v), ("w", w)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @classmethod
    def from_edges(cls, n: int, edges) -> "WeightedEdgeList":
        edges = list(edges)
        if not edges:
            return cls(n, np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0))
        u, v, w = zip(*[(e[0], e[1], e[2] if len(e) > 2 else 1.0) for e in edges])
        return cls(n, np.array(u), np.array(v), np.array(w, dtype=float))

    @property
    def m(self) -> int:
        return int(self.u.size)


def incidence_matrix(G: WeightedEdgeList) -> SparseMatrix:
    """Edge-by-vertex incidence matrix with ``+sqrt(w)`` at the smaller endpoint
    and ``-sqrt(w)`` at the larger one, so that ``B^T B`` is the Laplacian."""
    m = G.m
    lo = np.minimum(G.u, G.v)
    hi = np.maximum(G.u, G.v)
    s = np.sqrt(G.w)
    rows = np.repeat(np.arange(m), 2)
    cols = np.column_stack([lo, hi]).ravel()
    vals = np.column_stack([s, -s]).ravel()
    return SparseMatrix.from_coo(rows, cols, vals, (m, G.n))


def laplacian(B: SparseMatrix) -> SparseMatrix:
    """``K = B^T B`` stored fully and exactly symmetric."""
    K = (B.csc.T @ B.csc).tocsc()
    # mirror the upper triangle so K == K^T bit for bit
    upper = sp.triu(K, k=0, format="csc")
    strict = sp.triu(K, k=1, format="csc")
    return SparseMatrix.from_scipy(upper + strict.T)
