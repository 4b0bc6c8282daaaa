"""Randomized column and row sampling baselines."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .coarsening import CoarsenConfig, CoarseningHierarchy, ConfigError, coarsen_multilevel
from .sparse import DimensionError, SparseMatrix, column_norms, transpose
from .svdkit import DENSE_CAP, top_k_svd

__all__ = [
    "SamplingError",
    "SamplingConfig",
    "LeverageScores",
    "Sample",
    "column_norm_probabilities",
    "column_norm_sample",
    "leverage_sample",
    "leverage_scores",
    "rand_plus_coarsen",
    "uniform_sample",
]


class SamplingError(ValueError):
    """The sampling distribution cannot be formed."""


@dataclass(frozen=True)
class SamplingConfig:
    c: int
    beta: float = 1.0
    seed: int = 0
    with_replacement: bool = True
    scale_columns: bool = True

    def __post_init__(self):
        if int(self.c) < 1:
            raise ConfigError(f"sample count c must be >= 1, got {self.c}")
        if not (0.0 < float(self.beta) <= 1.0):
            raise ConfigError(f"beta must lie in (0, 1], got {self.beta}")


@dataclass
class LeverageScores:
    scores: np.ndarray
    k: int


@dataclass
class Sample:
    """Sampled matrix plus the provenance of every kept column (or row)."""

    matrix: SparseMatrix
    indices: np.ndarray
    probabilities: np.ndarray | None = None
    scale: np.ndarray | None = None
    axis: str = "columns"
    method: str = ""
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"level": 0, "epsilon": None, "axis": self.axis, "method": self.method, "kept": self.indices.tolist()}

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=1) + "\n"
        if path is not None:
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        return text


def column_norm_probabilities(A: SparseMatrix, beta: float = 1.0) -> np.ndarray:
    """``beta * ||a_i||^2 / ||A||_F^2`` renormalized to sum to one."""
    sq = column_norms(A) ** 2
    total = sq.sum()
    if total == 0.0:
        raise SamplingError("column-norm distribution undefined for an all-zero matrix")
    p = beta * sq / total
    return p / p.sum()


def column_norm_sample(A: SparseMatrix, cfg: SamplingConfig) -> Sample:
    """Draw ``cfg.c`` columns with probability proportional to their squared norm.

    With ``scale_columns`` each drawn column is divided by ``sqrt(c p_i)``,
    which makes ``C C^T`` an unbiased estimator of ``A A^T`` when sampling
    with replacement.
    """
    p = column_norm_probabilities(A, cfg.beta)
    rng = np.random.default_rng(cfg.seed)
    support = int(np.count_nonzero(p))
    if not cfg.with_replacement and cfg.c > support:
        raise DimensionError(f"cannot draw {cfg.c} distinct columns from {support} nonzero ones")
    idx = rng.choice(A.ncols, size=cfg.c, replace=cfg.with_replacement, p=p).astype(np.int64)
    scale = 1.0 / np.sqrt(cfg.c * p[idx]) if cfg.scale_columns else None
    return Sample(A.select_columns(idx, scale), idx, p[idx], scale, method="colnorm")


def uniform_sample(A: SparseMatrix, c: int, seed: int = 0) -> Sample:
    """``c`` distinct columns chosen uniformly at random, unscaled, in draw order."""
    if not (1 <= c <= A.ncols):
        raise DimensionError(f"cannot draw {c} distinct columns from {A.ncols}")
    idx = np.random.default_rng(seed).choice(A.ncols, size=c, replace=False).astype(np.int64)
    return Sample(A.select_columns(idx), idx, np.full(c, 1.0 / A.ncols), method="uniform")


def leverage_scores(V, k: int | None = None, check: bool = True) -> LeverageScores:
    """Column leverage scores ``||V(i, :)||^2 / k`` from orthonormal ``V`` (n x k)."""
    V = np.asarray(V, dtype=np.float64)
    if V.ndim != 2:
        raise DimensionError("V must be a 2-d array")
    k = V.shape[1] if k is None else int(k)
    if k != V.shape[1] or k < 1:
        raise DimensionError(f"k={k} must equal the number of columns of V ({V.shape[1]})")
    if check:
        err = np.abs(V.T @ V - np.eye(k)).max()
        if err > 1e-8:
            raise ValueError(f"V is not orthonormal (max |V^T V - I| = {err:.2e})")
    return LeverageScores(np.einsum("ij,ij->i", V, V) / k, k)


def leverage_sample(
    A: SparseMatrix,
    c: int,
    k: int,
    axis: str = "columns",
    seed: int = 0,
    scale: bool = False,
    cap: int = DENSE_CAP,
) -> Sample:
    """Sample columns (or rows) by leverage scores of the top-``k`` singular vectors.

    Column scores use ``||V_k(i,:)||^2 / k``; row scores use
    ``||U_k(i,:)||^2``. Sampling weights are ``min(1, score)`` normalized to
    a distribution. In the default subset-selection mode the ``c`` indices
    are distinct and unscaled; with ``scale=True`` they are drawn with
    replacement and scaled by ``1 / sqrt(c p_i)``.
    """
    if axis not in ("columns", "rows"):
        raise ValueError(f"axis must be 'columns' or 'rows', got {axis!r}")
    if not (1 <= k <= min(A.shape)):
        raise DimensionError(f"k={k} must lie in [1, {min(A.shape)}]")
    fac = top_k_svd(A, k, cap=cap, seed=seed)
    if axis == "columns":
        scores = leverage_scores(fac.V, check=False).scores
        n = A.ncols
    else:
        scores = np.einsum("ij,ij->i", fac.U, fac.U)
        n = A.nrows
    w = np.minimum(1.0, scores)
    if w.sum() <= 0.0:
        raise SamplingError("leverage scores are all zero")
    p = w / w.sum()
    rng = np.random.default_rng(seed)
    if scale:
        idx = rng.choice(n, size=c, replace=True, p=p).astype(np.int64)
        factors = 1.0 / np.sqrt(c * p[idx])
    else:
        support = int(np.count_nonzero(p))
        if c > support:
            raise DimensionError(f"cannot select {c} distinct {axis} from {support} with nonzero score")
        idx = rng.choice(n, size=c, replace=False, p=p).astype(np.int64)
        factors = None
    if axis == "columns":
        M = A.select_columns(idx, factors)
    else:
        M = transpose(transpose(A).select_columns(idx, factors))
    return Sample(M, idx, p[idx], factors, axis=axis, method="leverage")


def rand_plus_coarsen(A: SparseMatrix, coarsen_cfg: CoarsenConfig, seed: int = 0, backend=None) -> CoarseningHierarchy:
    """Uniformly keep ``ceil(n/2)`` columns, then coarsen the sample.

    The returned hierarchy is rooted at the half-sample; its
    ``base_indices`` map sample columns back to ``A``.
    """
    if A.ncols < 2:
        raise DimensionError("need at least two columns")
    half = uniform_sample(A, math.ceil(A.ncols / 2), seed)
    hier = coarsen_multilevel(half.matrix, coarsen_cfg, backend=backend)
    hier.base_indices = half.indices
    return hier
