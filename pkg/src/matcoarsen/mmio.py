"""MatrixMarket and edge-list file I/O.

Coordinate files are 1-based on disk and 0-based in memory. Symmetric and
skew-symmetric files are expanded to full storage; repeated entries are
summed.
"""
from __future__ import annotations

import gzip
import os
from pathlib import Path

import numpy as np

from .sparse import SparseMatrix, WeightedEdgeList

__all__ = [
    "MatrixMarketError",
    "load_matrix_market",
    "write_matrix_market",
    "load_dense_matrix_market",
    "write_dense_matrix_market",
    "load_edge_list",
    "write_edge_list",
]

_INDEX_MAX = np.iinfo(np.int64).max


class MatrixMarketError(ValueError):
    """Malformed input file; ``lineno`` is 1-based (0 when not line specific)."""

    def __init__(self, message: str, lineno: int = 0, path=None):
        self.lineno = lineno
        self.path = path
        where = f"{path}:" if path is not None else ""
        where += f"{lineno}: " if lineno else (" " if where else "")
        super().__init__(f"{where}{message}")


def _open_text(path):
    path = os.fspath(path)
    if path.endswith(".gz"):
        return gzip.open(path, "rt", encoding="ascii", errors="replace")
    return open(path, "r", encoding="ascii", errors="replace")


def _parse_int(tok: str, lineno: int, path) -> int:
    try:
        val = int(tok)
    except ValueError:
        raise MatrixMarketError(f"expected an integer, got {tok!r}", lineno, path) from None
    if val > _INDEX_MAX or val < -_INDEX_MAX:
        raise MatrixMarketError(f"integer {tok} overflows a 64-bit index", lineno, path)
    return val


def _parse_float(tok: str, lineno: int, path) -> float:
    try:
        val = float(tok)
    except ValueError:
        raise MatrixMarketError(f"expected a real value, got {tok!r}", lineno, path) from None
    if not np.isfinite(val):
        raise MatrixMarketError(f"non-finite value {tok!r}", lineno, path)
    return val


def _read_header(fh, path):
    first = fh.readline()
    tokens = first.strip().split()
    if len(tokens) != 5 or tokens[0].lower() != "%%matrixmarket":
        raise MatrixMarketError("missing '%%MatrixMarket' banner", 1, path)
    obj, fmt, field, symm = (t.lower() for t in tokens[1:])
    if obj != "matrix":
        raise MatrixMarketError(f"unsupported object {obj!r}", 1, path)
    if field not in ("real", "integer", "pattern", "double"):
        raise MatrixMarketError(f"unsupported field {field!r} (real data only)", 1, path)
    if symm not in ("general", "symmetric", "skew-symmetric"):
        raise MatrixMarketError(f"unsupported symmetry {symm!r}", 1, path)
    lineno = 1
    for line in fh:
        lineno += 1
        s = line.strip()
        if s and not s.startswith("%"):
            return fmt, field, symm, s.split(), lineno
    raise MatrixMarketError("missing size line", lineno, path)


def load_matrix_market(path) -> SparseMatrix:
    """Read a real coordinate MatrixMarket file into a :class:`SparseMatrix`."""
    with _open_text(path) as fh:
        fmt, field, symm, size, lineno = _read_header(fh, path)
        if fmt != "coordinate":
            raise MatrixMarketError("expected coordinate format; use load_dense_matrix_market", 1, path)
        if len(size) != 3:
            raise MatrixMarketError("size line needs 'rows cols nnz'", lineno, path)
        m, n, nnz = (_parse_int(t, lineno, path) for t in size)
        if m < 0 or n < 0 or nnz < 0:
            raise MatrixMarketError("negative size", lineno, path)
        need = 2 if field == "pattern" else 3
        rows = np.empty(nnz, dtype=np.int64)
        cols = np.empty(nnz, dtype=np.int64)
        vals = np.ones(nnz, dtype=np.float64)
        k = 0
        for line in fh:
            lineno += 1
            s = line.strip()
            if not s or s.startswith("%"):
                continue
            tok = s.split()
            if len(tok) < need:
                raise MatrixMarketError(f"expected {need} fields, got {len(tok)}", lineno, path)
            if k >= nnz:
                raise MatrixMarketError(f"more than the declared {nnz} entries", lineno, path)
            r = _parse_int(tok[0], lineno, path)
            c = _parse_int(tok[1], lineno, path)
            if not (1 <= r <= m and 1 <= c <= n):
                raise MatrixMarketError(f"index ({r}, {c}) outside {m}x{n}", lineno, path)
            rows[k] = r - 1
            cols[k] = c - 1
            if need == 3:
                vals[k] = _parse_float(tok[2], lineno, path)
            k += 1
        if k != nnz:
            raise MatrixMarketError(f"expected {nnz} entries, found {k}", lineno, path)
    if symm != "general":
        off = rows != cols
        sign = -1.0 if symm == "skew-symmetric" else 1.0
        rows, cols, vals = (
            np.concatenate([rows, cols[off]]),
            np.concatenate([cols, rows[off]]),
            np.concatenate([vals, sign * vals[off]]),
        )
    return SparseMatrix.from_coo(rows, cols, vals, (m, n))


def write_matrix_market(path, A: SparseMatrix, comment: str | None = None) -> None:
    """Write ``A`` as a general real coordinate file, entries in (column, row) order."""
    csc = A.csc
    cols = np.repeat(np.arange(A.ncols, dtype=np.int64), np.diff(csc.indptr))
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("%%MatrixMarket matrix coordinate real general\n")
        if comment:
            for line in comment.splitlines():
                fh.write(f"% {line}\n")
        fh.write(f"{A.nrows} {A.ncols} {A.nnz}\n")
        fh.writelines(
            f"{r + 1} {c + 1} {v!r}\n" for r, c, v in zip(csc.indices.tolist(), cols.tolist(), csc.data.tolist())
        )


def write_dense_matrix_market(path, X) -> None:
    """Write a dense array in MatrixMarket ``array`` format (column-major)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("%%MatrixMarket matrix array real general\n")
        fh.write(f"{X.shape[0]} {X.shape[1]}\n")
        fh.writelines(f"{v!r}\n" for v in X.ravel(order="F").tolist())


def load_dense_matrix_market(path) -> np.ndarray:
    with _open_text(path) as fh:
        fmt, field, symm, size, lineno = _read_header(fh, path)
        if fmt != "array" or symm != "general" or field == "pattern":
            raise MatrixMarketError("expected a general real array file", 1, path)
        if len(size) != 2:
            raise MatrixMarketError("size line needs 'rows cols'", lineno, path)
        m, n = (_parse_int(t, lineno, path) for t in size)
        vals = []
        for line in fh:
            lineno += 1
            s = line.strip()
            if not s or s.startswith("%"):
                continue
            vals.append(_parse_float(s.split()[0], lineno, path))
    if len(vals) != m * n:
        raise MatrixMarketError(f"expected {m * n} values, found {len(vals)}", 0, path)
    return np.array(vals, dtype=np.float64).reshape((m, n), order="F")


def load_edge_list(path) -> WeightedEdgeList:
    """Read ``n m`` followed by ``m`` lines of ``u v w`` (0-based vertices).

    A missing weight column means unit weight. Lines starting with ``#`` or
    ``%`` are comments.
    """
    path = Path(path)
    header = None
    u, v, w = [], [], []
    with _open_text(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s or s[0] in "#%":
                continue
            tok = s.split()
            if header is None:
                if len(tok) != 2:
                    raise MatrixMarketError("edge-list header must be 'n m'", lineno, path)
                header = tuple(_parse_int(t, lineno, path) for t in tok)
                continue
            if len(tok) not in (2, 3):
                raise MatrixMarketError("edge line must be 'u v [w]'", lineno, path)
            u.append(_parse_int(tok[0], lineno, path))
            v.append(_parse_int(tok[1], lineno, path))
            w.append(_parse_float(tok[2], lineno, path) if len(tok) == 3 else 1.0)
    if header is None:
        raise MatrixMarketError("empty edge-list file", 0, path)
    n, m = header
    if len(u) != m:
        raise MatrixMarketError(f"header declares {m} edges, found {len(u)}", 0, path)
    try:
        return WeightedEdgeList(n, np.array(u, np.int64), np.array(v, np.int64), np.array(w))
    except ValueError as exc:
        raise MatrixMarketError(str(exc), 0, path) from None


def write_edge_list(path, G: WeightedEdgeList) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(f"{G.n} {G.m}\n")
        fh.writelines(f"{a} {b} {c!r}\n" for a, b, c in zip(G.u.tolist(), G.v.tolist(), G.w.tolist()))
