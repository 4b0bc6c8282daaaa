"""Sparse matrix approximation by multilevel column-matching coarsening.

The package covers single and multilevel coarsening, randomized sampling
baselines, partial SVD with refinement and updating, and the error
measures and bounds that go with them.
"""
from ._core import BACKEND
from .coarsening import (
    CoarsenConfig,
    CoarseningHierarchy,
    ConfigError,
    MatchingResult,
    coarsen_level,
    coarsen_multilevel,
    coarsen_rows,
    cssp_select,
)
from .metrics import MetricsReport
from .mmio import MatrixMarketError, load_matrix_market, write_matrix_market
from .sparse import (
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
from .svdkit import PartialSVD, dense_svd, partial_svd, subspace_iterate, zha_simon_update, low_rank_update

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CoarsenConfig",
    "CoarseningHierarchy",
    "ConfigError",
    "DimensionError",
    "MatchingResult",
    "MatrixMarketError",
    "MetricsReport",
    "PartialSVD",
    "SparseMatrix",
    "WeightedEdgeList",
    "coarsen_level",
    "coarsen_multilevel",
    "coarsen_rows",
    "column_norms",
    "cssp_select",
    "dense_svd",
    "frobenius_norm",
    "incidence_matrix",
    "laplacian",
    "load_matrix_market",
    "low_rank_update",
    "multiply_dense",
    "partial_svd",
    "subspace_iterate",
    "transpose",
    "write_matrix_market",
    "zha_simon_update",
]
