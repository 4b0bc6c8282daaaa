import gzip

import numpy as np
import pytest

from matcoarsen import SparseMatrix
from matcoarsen.mmio import (
    MatrixMarketError,
    load_dense_matrix_market,
    load_edge_list,
    load_matrix_market,
    write_dense_matrix_market,
    write_edge_list,
    write_matrix_market,
)
from oracles import random_graph, random_sparse


def _write(tmp_path, text, name="a.mtx"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_identity_file(tmp_path):
    p = _write(tmp_path, "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n2 2 1.0\n")
    A = load_matrix_market(p)
    assert A.nnz == 2
    rows, vals = A.column(0)
    assert rows.tolist() == [0] and vals.tolist() == [1.0]


def test_symmetric_expansion(tmp_path):
    p = _write(tmp_path, "%%MatrixMarket matrix coordinate real symmetric\n% c\n2 2 1\n2 1 3.0\n")
    A = load_matrix_market(p)
    assert A.nnz == 2
    np.testing.assert_array_equal(A.toarray(), [[0, 3.0], [3.0, 0]])


def test_pattern_and_duplicates(tmp_path):
    p = _write(tmp_path, "%%MatrixMarket matrix coordinate pattern general\n2 3 3\n1 1\n1 1\n2 3\n")
    A = load_matrix_market(p)
    np.testing.assert_array_equal(A.toarray(), [[2, 0, 0], [0, 0, 1]])


def test_skew_symmetric(tmp_path):
    p = _write(tmp_path, "%%MatrixMarket matrix coordinate real skew-symmetric\n2 2 1\n2 1 1.5\n")
    np.testing.assert_array_equal(load_matrix_market(p).toarray(), [[0, -1.5], [1.5, 0]])


@pytest.mark.parametrize(
    "body, line",
    [
        ("2 2 1\n1 x 1.0\n", 3),
        ("2 2 1\n3 1 1.0\n", 3),
        ("2 2 2\n1 1 1.0\n", None),
        ("2 2 1\n1 1\n", 3),
        ("2 2 1\n1 1 1.0\n2 2 1.0\n", 4),
        ("2 2 1\n99999999999999999999 1 1.0\n", 3),
    ],
)
def test_format_errors_carry_line_numbers(tmp_path, body, line):
    p = _write(tmp_path, "%%MatrixMarket matrix coordinate real general\n" + body)
    with pytest.raises(MatrixMarketError) as ei:
        load_matrix_market(p)
    if line is not None:
        assert ei.value.lineno == line
        assert f":{line}: " in str(ei.value)


def test_bad_header(tmp_path):
    with pytest.raises(MatrixMarketError):
        load_matrix_market(_write(tmp_path, "hello\n1 1 0\n"))
    with pytest.raises(MatrixMarketError):
        load_matrix_market(_write(tmp_path, "%%MatrixMarket matrix coordinate complex general\n1 1 0\n"))


def test_roundtrip_and_order(tmp_path):
    A = random_sparse(30, 20, 0.2, 4)
    p = tmp_path / "r.mtx"
    write_matrix_market(p, A)
    lines = p.read_text().splitlines()
    assert lines[0] == "%%MatrixMarket matrix coordinate real general"
    entries = [tuple(map(int, ln.split()[:2])) for ln in lines[2:]]
    assert entries == sorted(entries, key=lambda rc: (rc[1], rc[0]))
    assert load_matrix_market(p).equals(A)


def test_gzip(tmp_path):
    p = tmp_path / "a.mtx.gz"
    with gzip.open(p, "wt") as fh:
        fh.write("%%MatrixMarket matrix coordinate integer general\n1 2 1\n1 2 7\n")
    assert load_matrix_market(p).toarray().tolist() == [[0.0, 7.0]]


def test_dense_roundtrip(tmp_path):
    X = np.random.default_rng(0).standard_normal((5, 3))
    write_dense_matrix_market(tmp_path / "x.mtx", X)
    np.testing.assert_array_equal(load_dense_matrix_market(tmp_path / "x.mtx"), X)


def test_edge_list_roundtrip(tmp_path):
    G = random_graph(12, 20, 1)
    write_edge_list(tmp_path / "g.txt", G)
    H = load_edge_list(tmp_path / "g.txt")
    assert H.n == G.n and H.m == G.m
    np.testing.assert_array_equal(H.w, G.w)


def test_edge_list_errors(tmp_path):
    with pytest.raises(MatrixMarketError):
        load_edge_list(_write(tmp_path, "3 2\n0 1 1.0\n", "g.txt"))
    with pytest.raises(MatrixMarketError):
        load_edge_list(_write(tmp_path, "3 1\n1 1 1.0\n", "g2.txt"))
    G = load_edge_list(_write(tmp_path, "# c\n3 1\n0 2\n", "g3.txt"))
    assert G.w.tolist() == [1.0]


def test_missing_file(tmp_path):
    with pytest.raises(OSError):
        load_matrix_market(tmp_path / "nope.mtx")


def test_empty_matrix(tmp_path):
    p = tmp_path / "z.mtx"
    write_matrix_market(p, SparseMatrix.zeros(3, 2))
    Z = load_matrix_market(p)
    assert Z.shape == (3, 2) and Z.nnz == 0
