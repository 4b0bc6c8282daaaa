import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from matcoarsen.coarsening import CoarsenConfig, ConfigError
from matcoarsen.metrics import lemma_bound, rayleigh_deviations
from matcoarsen.sampling import (
    SamplingConfig,
    SamplingError,
    column_norm_probabilities,
    column_norm_sample,
    leverage_sample,
    leverage_scores,
    rand_plus_coarsen,
    uniform_sample,
)
from matcoarsen.sparse import DimensionError, SparseMatrix
from oracles import random_orthonormal, random_sparse, unit_vectors


def test_colnorm_probabilities_diag():
    p = column_norm_probabilities(SparseMatrix.from_dense(np.diag([3.0, 4.0])))
    np.testing.assert_allclose(p, [9 / 25, 16 / 25], rtol=1e-15)


def test_beta_renormalized():
    A = random_sparse(10, 8, 0.5, 0)
    np.testing.assert_allclose(column_norm_probabilities(A, 0.3), column_norm_probabilities(A), rtol=1e-14)


@given(st.integers(1, 30), st.integers(1, 30), st.integers(0, 10**6))
def test_colnorm_probabilities_sum_to_one(m, n, seed):
    A = random_sparse(m, n, 0.3, seed)
    if A.nnz == 0:
        with pytest.raises(SamplingError):
            column_norm_probabilities(A)
        return
    p = column_norm_probabilities(A)
    assert abs(p.sum() - 1.0) <= 1e-12 and np.all(p >= 0)


def test_single_nonzero_column_always_drawn():
    A = SparseMatrix.from_dense([[0.0, 2.0, 0.0], [0.0, 1.0, 0.0]])
    s = column_norm_sample(A, SamplingConfig(c=20, seed=1))
    assert set(s.indices.tolist()) == {1}
    # each copy is a_1 / sqrt(c), so C C^T = A A^T exactly
    C = s.matrix.toarray()
    np.testing.assert_allclose(C @ C.T, A.toarray() @ A.toarray().T, rtol=1e-14)


def test_colnorm_zero_matrix():
    with pytest.raises(SamplingError):
        column_norm_sample(SparseMatrix.zeros(3, 3), SamplingConfig(c=2))


def test_colnorm_unbiased_small():
    # positive entries: no cancellation, so relative error is meaningful everywhere
    A = SparseMatrix.from_dense(np.random.default_rng(3).uniform(0.5, 1.5, (10, 10)))
    target = A.toarray() @ A.toarray().T
    acc = np.zeros_like(target)
    for t in range(2000):
        C = column_norm_sample(A, SamplingConfig(c=10, seed=t)).matrix.toarray()
        acc += C @ C.T
    mean = acc / 2000
    assert np.all(np.abs(mean - target) <= 0.05 * target)


def test_colnorm_without_replacement():
    A = random_sparse(10, 10, 0.8, 2)
    s = column_norm_sample(A, SamplingConfig(c=5, seed=0, with_replacement=False, scale_columns=False))
    assert len(set(s.indices.tolist())) == 5 and s.matrix.equals(A.select_columns(s.indices))


def test_sampling_config_validation():
    with pytest.raises(ConfigError):
        SamplingConfig(c=0)
    with pytest.raises(ConfigError):
        SamplingConfig(c=1, beta=0.0)
    with pytest.raises(ConfigError):
        SamplingConfig(c=1, beta=1.5)


def test_uniform_examples():
    A = random_sparse(6, 5, 0.5, 0)
    s = uniform_sample(A, 5, seed=3)
    assert sorted(s.indices.tolist()) == [0, 1, 2, 3, 4]
    assert s.matrix.equals(A.select_columns(s.indices))
    one = SparseMatrix.from_dense([[1.0], [2.0]])
    assert uniform_sample(one, 1).matrix.equals(one)
    with pytest.raises(DimensionError):
        uniform_sample(A, 6)


def test_uniform_frequencies():
    A = SparseMatrix.identity(5)
    counts = np.bincount([uniform_sample(A, 1, seed=t).indices[0] for t in range(10000)], minlength=5)
    sigma = math.sqrt(10000 * 0.2 * 0.8)
    assert np.all(np.abs(counts - 2000) <= 3 * sigma)


def test_leverage_scores_examples():
    np.testing.assert_allclose(leverage_scores(np.eye(6)[:, :3]).scores, [1 / 3] * 3 + [0] * 3)
    v = np.zeros((5, 1))
    v[:2, 0] = 1 / math.sqrt(2)
    np.testing.assert_allclose(leverage_scores(v, 1).scores, [0.5, 0.5, 0, 0, 0], rtol=1e-15)


@given(st.integers(2, 40), st.integers(1, 10), st.integers(0, 10**6))
def test_leverage_scores_sum(n, k, seed):
    k = min(k, n)
    sc = leverage_scores(random_orthonormal(n, k, seed)).scores
    assert abs(sc.sum() - 1.0) <= 1e-12 and np.all(sc >= 0)


def test_leverage_scores_preconditions():
    with pytest.raises(ValueError):
        leverage_scores(np.ones((4, 2)))
    with pytest.raises(DimensionError):
        leverage_scores(np.eye(4)[:, :2], k=3)


def test_leverage_rank_one():
    u = np.array([1.0, 2.0, 0.0])
    v = np.array([3.0, 0.0, 1.0, 2.0])
    A = SparseMatrix.from_dense(np.outer(u, v))
    s = leverage_sample(A, 3, 1, seed=0)
    expected = v**2 / (v**2).sum()
    np.testing.assert_allclose(s.probabilities, expected[s.indices], rtol=1e-10)
    assert 1 not in s.indices.tolist()  # zero score is never drawn


def test_leverage_identity_uniform():
    s = leverage_sample(SparseMatrix.identity(6), 6, 6, seed=0)
    np.testing.assert_allclose(s.probabilities, 1 / 6, rtol=1e-12)
    assert sorted(s.indices.tolist()) == list(range(6))


def test_leverage_rows_and_scaling():
    A = random_sparse(30, 12, 0.3, 4)
    s = leverage_sample(A, 10, 5, axis="rows", seed=2, scale=True)
    assert s.matrix.shape == (10, 12)
    np.testing.assert_allclose(s.scale, 1 / np.sqrt(10 * s.probabilities))
    with pytest.raises(DimensionError):
        leverage_sample(A, 3, 13)
    with pytest.raises(ValueError):
        leverage_sample(A, 3, 2, axis="diag")


def test_leverage_deterministic():
    A = random_sparse(40, 30, 0.2, 5)
    a = leverage_sample(A, 8, 4, seed=11)
    b = leverage_sample(A, 8, 4, seed=11)
    assert a.to_json() == b.to_json() and a.matrix.equals(b.matrix)


def test_rand_plus_coarsen_no_levels():
    A = random_sparse(20, 9, 0.3, 0)
    h = rand_plus_coarsen(A, CoarsenConfig(epsilon_schedule=()), seed=4)
    half = uniform_sample(A, 5, seed=4)
    assert h.final.equals(half.matrix)
    np.testing.assert_array_equal(h.selected_indices(), half.indices)


def test_rand_plus_coarsen_duplicates():
    base = random_sparse(15, 10, 0.4, 1).toarray()
    base[0] += 1.0  # no empty columns
    A = SparseMatrix.from_dense(np.repeat(base, 2, axis=1))
    h = rand_plus_coarsen(A, CoarsenConfig.uniform(0.3, 1, seed=0), seed=0)
    assert h.final.ncols <= A.ncols // 2
    sel = h.selected_indices()
    assert h.final.ncols == sel.size and np.all(sel < A.ncols)


@given(st.integers(0, 10**6))
def test_rand_plus_coarsen_lemma_on_sample(seed):
    A = random_sparse(40, 60, 0.1, seed, clustered=True)
    h = rand_plus_coarsen(A, CoarsenConfig.uniform(0.5, 1, seed=seed), seed=seed)
    S = h.original
    dev = rayleigh_deviations(S, h.final, unit_vectors(40, 100, seed))
    assert dev.max() <= lemma_bound(S, 0.5)


def test_rand_plus_coarsen_needs_two_columns():
    with pytest.raises(DimensionError):
        rand_plus_coarsen(SparseMatrix.from_dense([[1.0]]), CoarsenConfig())
