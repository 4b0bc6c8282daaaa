import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st

from matcoarsen.sparse import (
    DimensionError,
    SparseMatrix,
    WeightedEdgeList,
    column_norms,
    frobenius_norm,
    incidence_matrix,
    laplacian,
    multiply_dense,
    transpose,
)
from oracles import random_graph, random_sparse

shapes = st.tuples(st.integers(1, 30), st.integers(1, 30), st.floats(0.0, 0.5), st.integers(0, 2**32 - 1))


def test_from_scipy_canonicalizes():
    M = sp.coo_matrix(([1.0, 2.0, 0.0, -1.0], ([0, 0, 1, 1], [1, 1, 0, 1])), shape=(2, 2))
    A = SparseMatrix.from_scipy(M)
    assert A.nnz == 2  # duplicates summed, explicit zero dropped
    np.testing.assert_array_equal(A.toarray(), [[0, 3], [0, -1]])


def test_rejects_non_finite():
    with pytest.raises(ValueError):
        SparseMatrix.from_dense([[np.nan, 1.0]])


@given(shapes)
def test_dual_adjacency_consistency(args):
    m, n, d, seed = args
    A = random_sparse(m, n, d, seed)
    assert sorted(A.iter_columns()) == sorted(A.iter_rows())
    assert A.csc.nnz == A.csr.nnz == A.nnz
    for c in range(A.ncols):
        rows, vals = A.column(c)
        assert np.all(np.diff(rows) > 0) and np.all(vals != 0)
    for r in range(A.nrows):
        cols, _ = A.row(r)
        assert np.all(np.diff(cols) > 0)


def test_transpose_examples():
    np.testing.assert_array_equal(transpose(SparseMatrix.identity(3)).toarray(), np.eye(3))
    row = SparseMatrix.from_dense([[1.0, 2.0, 3.0]])
    np.testing.assert_array_equal(transpose(row).toarray(), [[1.0], [2.0], [3.0]])
    A = random_sparse(50, 30, 0.05, 3)
    assert transpose(transpose(A)).equals(A)


@given(shapes)
def test_transpose_involution(args):
    A = random_sparse(*args)
    assert transpose(transpose(A)).equals(A)
    np.testing.assert_array_equal(transpose(A).toarray(), A.toarray().T)


def test_column_norms_examples():
    np.testing.assert_array_equal(column_norms(SparseMatrix.identity(5)), np.ones(5))
    assert column_norms(SparseMatrix.from_dense([[3.0], [4.0]]))[0] == 5.0
    A = random_sparse(40, 25, 0.1, 5)
    np.testing.assert_allclose(column_norms(A), np.linalg.norm(A.toarray(), axis=0), rtol=1e-12)
    assert column_norms(SparseMatrix.zeros(3, 2)).tolist() == [0.0, 0.0]


def test_frobenius_examples():
    assert frobenius_norm(SparseMatrix.identity(4)) == 2.0
    assert frobenius_norm(SparseMatrix.zeros(3, 3)) == 0.0


@given(shapes)
def test_frobenius_matches_column_norms(args):
    A = random_sparse(*args)
    f2 = frobenius_norm(A) ** 2
    assert f2 == pytest.approx(np.sum(column_norms(A) ** 2), rel=1e-12, abs=1e-300)


def test_multiply_dense_examples():
    X = np.arange(12.0).reshape(4, 3)
    np.testing.assert_array_equal(multiply_dense(SparseMatrix.identity(4), X), X)
    assert multiply_dense(SparseMatrix.from_dense([[2.0]]), np.array([[3.0]]))[0, 0] == 6.0
    rng = np.random.default_rng(0)
    A = random_sparse(40, 25, 0.2, 1)
    D = A.toarray()
    X = rng.standard_normal((25, 4))
    np.testing.assert_allclose(multiply_dense(A, X), D @ X, rtol=1e-12, atol=1e-12)
    Y = rng.standard_normal((40, 3))
    np.testing.assert_allclose(multiply_dense(A, Y, transpose_A=True), D.T @ Y, rtol=1e-12, atol=1e-12)
    Z = rng.standard_normal((2, 40))
    np.testing.assert_allclose(multiply_dense(A, Z, side="right"), Z @ D, rtol=1e-12, atol=1e-12)


def test_multiply_dense_shape_mismatch():
    A = random_sparse(5, 4, 0.5, 0)
    with pytest.raises(DimensionError):
        multiply_dense(A, np.ones((5, 2)))
    with pytest.raises(DimensionError):
        multiply_dense(A, np.ones((2, 4)), side="right")


def test_incidence_single_edge():
    B = incidence_matrix(WeightedEdgeList.from_edges(2, [(0, 1, 4.0)]))
    np.testing.assert_array_equal(B.toarray(), [[2.0, -2.0]])
    np.testing.assert_array_equal(laplacian(B).toarray(), [[4.0, -4.0], [-4.0, 4.0]])


def test_triangle_laplacian():
    G = WeightedEdgeList.from_edges(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)])
    K = laplacian(incidence_matrix(G)).toarray()
    np.testing.assert_array_equal(np.diag(K), [2, 2, 2])
    np.testing.assert_array_equal(K[~np.eye(3, dtype=bool)], -1)


def test_edge_list_validation():
    with pytest.raises(ValueError):
        WeightedEdgeList.from_edges(3, [(1, 1, 1.0)])
    with pytest.raises(ValueError):
        WeightedEdgeList.from_edges(3, [(0, 1, -1.0)])
    with pytest.raises(ValueError):
        WeightedEdgeList.from_edges(3, [(0, 1, 1.0), (1, 0, 2.0)])
    with pytest.raises(ValueError):
        WeightedEdgeList.from_edges(2, [(0, 2, 1.0)])


def test_laplacian_of_zero():
    assert laplacian(SparseMatrix.zeros(3, 4)).nnz == 0


@given(st.integers(2, 25), st.integers(1, 60), st.integers(0, 10**6))
def test_laplacian_properties(n, m, seed):
    G = random_graph(n, m, seed)
    B = incidence_matrix(G)
    assert np.all(B.row_nnz() == 2)
    K = laplacian(B)
    Kd = K.toarray()
    np.testing.assert_array_equal(Kd, Kd.T)
    np.testing.assert_allclose(Kd @ np.ones(n), 0.0, atol=1e-10)
    assert np.linalg.eigvalsh(Kd).min() >= -1e-10 * max(1.0, np.abs(Kd).max())
    np.testing.assert_allclose(Kd, B.toarray().T @ B.toarray(), atol=1e-12)


def test_select_columns_scales():
    A = SparseMatrix.from_dense([[1.0, 2.0], [3.0, 0.0]])
    C = A.select_columns([1, 0], [2.0, 1.0])
    np.testing.assert_array_equal(C.toarray(), [[4.0, 1.0], [0.0, 3.0]])
    assert C.select_rows([1]).toarray().tolist() == [[0.0, 3.0]]
