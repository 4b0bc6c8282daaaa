import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from matcoarsen.coarsening import coarsen_level
from matcoarsen.metrics import mean_sv_error, projection_error_frobenius
from matcoarsen.sparse import DimensionError, SparseMatrix
from matcoarsen.svdkit import (
    PartialSVD,
    RankDeflationWarning,
    SizeError,
    dense_svd,
    low_rank_update,
    orthonormalize,
    partial_svd,
    rayleigh_ritz,
    subspace_iterate,
    top_k_svd,
    zha_simon_update,
)
from oracles import random_orthonormal, random_sparse


def assert_valid(svd: PartialSVD, tol=1e-8):
    k = svd.k
    assert np.abs(svd.U.T @ svd.U - np.eye(k)).max() <= tol
    assert np.abs(svd.V.T @ svd.V - np.eye(k)).max() <= tol
    assert np.all(np.diff(svd.sigma) <= 1e-12 * max(1.0, svd.sigma[0] if k else 1.0))
    assert np.all(svd.sigma >= 0)


def low_rank_instance(m, n, p, r, seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, r)) @ rng.standard_normal((r, n))
    D = rng.standard_normal((m, p))
    return A, D


def test_dense_svd_examples():
    s = dense_svd(SparseMatrix.from_dense(np.diag([3.0, 2.0, 1.0])))
    np.testing.assert_allclose(s.sigma, [3, 2, 1])
    z = dense_svd(SparseMatrix.zeros(3, 2))
    assert np.all(z.sigma == 0)
    A = random_sparse(30, 20, 0.3, 1)
    s = dense_svd(A)
    assert np.linalg.norm(s.reconstruct() - A.toarray()) <= 1e-10 * np.linalg.norm(A.toarray())
    assert_valid(s)


def test_dense_svd_sign_convention():
    s = dense_svd(np.random.default_rng(0).standard_normal((8, 5)))
    big = s.U[np.abs(s.U).argmax(axis=0), np.arange(5)]
    assert np.all(big >= 0)


def test_dense_svd_cap():
    with pytest.raises(SizeError):
        dense_svd(np.ones((5, 5)), cap=4)


def test_save_load(tmp_path):
    s = dense_svd(np.random.default_rng(1).standard_normal((6, 4)))
    s.save(str(tmp_path) + "/")
    t = PartialSVD.load(str(tmp_path) + "/")
    np.testing.assert_array_equal(t.U, s.U)
    np.testing.assert_array_equal(t.V, s.V)
    np.testing.assert_array_equal(t.sigma, s.sigma)


def test_partial_svd_known_spectrum():
    d = np.array([10.0, 1.0, 0.1, 0.01, 0.001])
    s = partial_svd(SparseMatrix.from_dense(np.diag(d)), 1, iters=10, seed=0)
    assert abs(s.sigma[0] - 10.0) <= 1e-8


@pytest.mark.parametrize("k", [1, 3, 6])
def test_partial_svd_identity(k):
    s = partial_svd(SparseMatrix.identity(6), k, iters=1)
    np.testing.assert_allclose(s.sigma, 1.0, atol=1e-10)
    assert_valid(s)


def test_partial_svd_matches_dense():
    A = SparseMatrix.from_dense(np.random.default_rng(3).standard_normal((60, 40)))
    ref = dense_svd(A).sigma[:5]
    s = partial_svd(A, 5, iters=300, seed=1)
    np.testing.assert_allclose(s.sigma, ref, rtol=1e-6)
    assert_valid(s)


def test_partial_svd_errors():
    A = SparseMatrix.identity(4)
    with pytest.raises(DimensionError):
        partial_svd(A, 5)
    with pytest.raises(ValueError):
        partial_svd(A, 2, iters=0)


def test_top_k_svd_paths():
    A = random_sparse(50, 30, 0.3, 2)
    a = top_k_svd(A, 4)
    b = top_k_svd(A, 4, cap=10, iters=400)
    np.testing.assert_allclose(b.sigma, a.sigma, rtol=1e-6)


def test_subspace_iterate_zero_iters():
    A = random_sparse(30, 20, 0.3, 4)
    U0 = np.random.default_rng(0).standard_normal((30, 3))
    s = subspace_iterate(U0, A, 0)
    Q, _ = np.linalg.qr(U0)
    # same span as the start block
    assert np.linalg.norm(s.U - Q @ (Q.T @ s.U)) <= 1e-12
    S = s.U.T @ A.toarray() @ s.V
    np.testing.assert_allclose(S, np.diag(s.sigma), atol=1e-12)


def test_subspace_iterate_fixed_point():
    A = random_sparse(40, 30, 0.3, 5)
    ref = dense_svd(A)
    s = subspace_iterate(ref.U[:, :4], A, 1)
    np.testing.assert_allclose(s.sigma, ref.sigma[:4], rtol=1e-10)


def test_subspace_iterate_rotate_every():
    A = random_sparse(40, 30, 0.3, 6)
    U0 = random_orthonormal(40, 3, 1)
    a = subspace_iterate(U0, A, 3)
    b = subspace_iterate(U0, A, 3, rotate_every=True)
    np.testing.assert_allclose(a.sigma, b.sigma, rtol=1e-10)


def test_subspace_iterate_shape_error():
    with pytest.raises(DimensionError):
        subspace_iterate(np.ones((3, 1)), SparseMatrix.identity(4), 1)


def test_orthonormalize_deflates():
    X = np.array([[1.0, 2.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]])
    with pytest.warns(RankDeflationWarning):
        Q = orthonormalize(X)
    assert Q.shape == (3, 2)
    np.testing.assert_allclose(Q.T @ Q, np.eye(2), atol=1e-14)


@given(st.integers(0, 10**6), st.sampled_from([0.3, 0.5, 0.9]))
def test_subspace_iteration_improves_coarse_start(seed, eps):
    A = random_sparse(80, 60, 0.1, seed, clustered=True)
    C = coarsen_level(A, eps, seed=seed).coarse
    k = min(5, min(C.shape))
    U0 = dense_svd(C).U[:, :k]
    before = projection_error_frobenius(A, U0, check=False)
    errs = [before]
    for it in (1, 2, 3):
        errs.append(projection_error_frobenius(A, subspace_iterate(U0, A, it).U, check=False))
    assert all(b <= a + 1e-10 for a, b in zip(errs, errs[1:]))
    ref = dense_svd(A).sigma
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RankDeflationWarning)
        s2 = subspace_iterate(U0, A, 2)
    if ref[k - 1] > 0:
        s0 = rayleigh_ritz(U0, A)
        assert mean_sv_error(s2.sigma, ref, k) <= mean_sv_error(s0.sigma, ref, k) + 1e-10


@given(st.integers(5, 40), st.integers(3, 30), st.integers(1, 8), st.integers(1, 6), st.integers(0, 10**6))
def test_zha_simon_exact_for_low_rank(m, n, p, r, seed):
    k = r + 2
    if k > min(m, n):
        return
    A, D = low_rank_instance(m, n, p, r, seed)
    svd = dense_svd(A).truncate(k)
    upd = zha_simon_update(svd, D, k)
    assert_valid(upd)
    ref = dense_svd(np.hstack([A, D])).truncate(min(k, upd.k))
    scale = np.linalg.norm(ref.reconstruct())
    assert np.linalg.norm(upd.reconstruct() - ref.reconstruct()) <= 1e-8 * scale
    np.testing.assert_allclose(upd.sigma, ref.sigma, rtol=1e-8, atol=1e-10 * scale)


def test_zha_simon_in_span():
    A, _ = low_rank_instance(20, 15, 1, 3, 0)
    svd = dense_svd(A).truncate(3)
    D = svd.U @ np.random.default_rng(1).standard_normal((3, 4))
    upd, ws = zha_simon_update(svd, D, 3, return_workspace=True)
    assert ws.U_hat.shape[1] == 0 and ws.R.size == 0
    small = np.linalg.svd(np.hstack([np.diag(svd.sigma), svd.U.T @ D]), compute_uv=False)
    np.testing.assert_allclose(upd.sigma, small[:3], rtol=1e-12)
    np.testing.assert_allclose(upd.sigma, dense_svd(np.hstack([A, D])).sigma[:3], rtol=1e-10)


def test_zha_simon_zero_column_and_empty():
    A = random_sparse(20, 10, 0.4, 1)
    svd = dense_svd(A).truncate(4)
    upd = zha_simon_update(svd, np.zeros((20, 1)), 4)
    np.testing.assert_allclose(upd.sigma, svd.sigma, rtol=1e-12)
    assert zha_simon_update(svd, np.zeros((20, 0)), 4) is svd
    with pytest.raises(DimensionError):
        zha_simon_update(svd, np.zeros((19, 1)))


def test_zha_simon_workspace_orthonormal():
    A, D = low_rank_instance(30, 20, 5, 4, 3)
    svd = dense_svd(A).truncate(4)
    _, ws = zha_simon_update(svd, SparseMatrix.from_dense(D), 4, return_workspace=True)
    Ub = np.hstack([svd.U, ws.U_hat])
    assert np.abs(Ub.T @ Ub - np.eye(Ub.shape[1])).max() <= 1e-8
    assert np.allclose(ws.R, np.triu(ws.R)) or ws.R.shape[0] <= ws.R.shape[1]


@given(st.integers(0, 10**6), st.integers(1, 5))
def test_low_rank_update_equals_zha_simon(seed, p):
    A, D = low_rank_instance(25, 18, p, 3, seed)
    svd = dense_svd(A).truncate(5)
    zs = zha_simon_update(svd, D, 5)
    lr = low_rank_update(svd, D, 5, l=p, iters=50, seed=seed)
    ref = np.linalg.norm(zs.reconstruct())
    assert np.linalg.norm(lr.reconstruct() - zs.reconstruct()) <= 1e-8 * ref


def test_low_rank_update_in_span():
    A, _ = low_rank_instance(20, 15, 1, 3, 2)
    svd = dense_svd(A).truncate(3)
    D = svd.U @ np.ones((3, 2))
    np.testing.assert_allclose(low_rank_update(svd, D, 3, l=1).reconstruct(),
                               zha_simon_update(svd, D, 3).reconstruct(), atol=1e-12)


def test_low_rank_update_dominant_direction():
    rng = np.random.default_rng(5)
    A, _ = low_rank_instance(40, 30, 1, 3, 5)
    svd = dense_svd(A).truncate(3)
    q = rng.standard_normal(40)
    D = 20.0 * np.outer(q, rng.standard_normal(6)) + 0.01 * rng.standard_normal((40, 6))
    zs = zha_simon_update(svd, D, 3)
    lr = low_rank_update(svd, D, 3, l=1, seed=0)
    assert abs(lr.sigma[0] - zs.sigma[0]) <= 0.01 * zs.sigma[0]


def test_low_rank_update_bad_l():
    A, D = low_rank_instance(10, 8, 3, 2, 0)
    svd = dense_svd(A).truncate(2)
    with pytest.raises(DimensionError):
        low_rank_update(svd, D, 2, l=4)
    with pytest.raises(DimensionError):
        low_rank_update(svd, D, 2, l=0)
