"""End-to-end experiment drivers shared by the command line and the tests.

Each driver takes a loaded matrix (or graph) and returns plain results plus a
:class:`~matcoarsen.metrics.MetricsReport`; file handling lives in
:mod:`matcoarsen.cli`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .coarsening import (
    CoarsenConfig,
    CoarseningHierarchy,
    ConfigError,
    coarsen_level,
    coarsen_multilevel,
    coarsen_rows,
    cssp_select,
)
from .metrics import (
    BoundCheck,
    MetricsReport,
    cssp_errors,
    lemma_bound,
    mean_sv_error,
    projection_error_frobenius,
    projection_error_spectral,
    rayleigh_deviations,
    sparsifier_error,
    theorem_bounds,
    unit_probes,
)
from .sampling import SamplingConfig, column_norm_sample, leverage_sample, rand_plus_coarsen, uniform_sample
from .sparse import SparseMatrix, WeightedEdgeList, incidence_matrix, laplacian, multiply_dense
from .svdkit import (
    DENSE_CAP,
    PartialSVD,
    dense_svd,
    low_rank_update,
    rayleigh_ritz,
    subspace_iterate,
    top_k_svd,
    zha_simon_update,
)

__all__ = [
    "SVD_METHODS",
    "LowRankResult",
    "approximate_svd",
    "parse_refine",
    "reduce_columns",
    "svd_report",
    "run_cssp",
    "run_sparsify",
    "verify_bounds",
]

SVD_METHODS = ("coarsen", "colnorm", "uniform", "leverage", "rand+coarsen")


def parse_refine(refine: str | None) -> tuple[str, int | None]:
    """``"none" | "subspace" | "zha-simon" | "lowrank:<l>"`` -> (kind, l)."""
    if refine in (None, "", "none"):
        return "none", None
    if refine in ("subspace", "zha-simon"):
        return refine, None
    if refine.startswith("lowrank:"):
        try:
            l = int(refine.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"bad low-rank refinement {refine!r}") from None
        if l < 1:
            raise ConfigError("low-rank refinement needs l >= 1")
        return "lowrank", l
    raise ConfigError(f"unknown refinement {refine!r}")


@dataclass
class LowRankResult:
    svd: PartialSVD
    C: SparseMatrix
    selected: np.ndarray
    hierarchy: CoarseningHierarchy | None = None
    notes: list = field(default_factory=list)


def reduce_columns(A: SparseMatrix, method: str, cfg: CoarsenConfig, c: int | None = None,
                   k: int | None = None, seed: int = 0):
    """Build the reduced matrix ``C`` for ``method``.

    Returns ``(C, selected, hierarchy)``; ``selected`` holds the original
    column behind each column of ``C``. Sampling methods default to the
    column count that coarsening with ``cfg`` produces.
    """
    if method == "coarsen":
        h = coarsen_multilevel(A, cfg)
        return h.final, h.selected_indices(), h
    if method == "rand+coarsen":
        sub = cfg.with_(epsilon_schedule=cfg.epsilon_schedule[:-1]) if cfg.levels else cfg
        h = rand_plus_coarsen(A, sub, seed=seed)
        return h.final, h.selected_indices(), h
    if c is None:
        c = coarsen_multilevel(A, cfg).final.ncols
    if method == "colnorm":
        s = column_norm_sample(A, SamplingConfig(c=c, seed=seed))
    elif method == "uniform":
        s = uniform_sample(A, min(c, A.ncols), seed=seed)
    elif method == "leverage":
        if k is None:
            raise ConfigError("leverage sampling needs k")
        s = leverage_sample(A, min(c, A.ncols), k, axis="columns", seed=seed)
    else:
        raise ConfigError(f"unknown method {method!r}; choose from {SVD_METHODS}")
    return s.matrix, s.indices, None


def _coarse_factors(C: SparseMatrix, k: int, seed: int) -> PartialSVD:
    return top_k_svd(C, min(k, min(C.shape)), seed=seed)


def approximate_svd(A: SparseMatrix, method: str, k: int, cfg: CoarsenConfig, c: int | None = None,
                    refine: str | None = None, iters: int = 2, seed: int = 0) -> LowRankResult:
    """Rank-``k`` SVD estimate of ``A`` from a reduced matrix, optionally refined.

    Refinements: ``subspace`` runs ``iters`` passes of subspace iteration on
    ``A`` from the coarse left vectors; ``zha-simon`` and ``lowrank:<l>``
    project the selected columns of ``A`` onto the coarse left vectors and
    append the remaining columns with an SVD update.
    """
    kind, l = parse_refine(refine)
    C, selected, hier = reduce_columns(A, method, cfg, c=c, k=k, seed=seed)
    coarse = _coarse_factors(C, k, seed)
    notes = []
    if kind == "none":
        # coarse V indexes coarse columns; pair each u_i with A^T u_i instead
        svd = PartialSVD(coarse.U, coarse.sigma, _align_right(A, coarse.U))
    elif kind == "subspace":
        svd = subspace_iterate(coarse.U, A, iters).truncate(k)
    else:
        uniq = np.unique(selected)
        rest = np.setdiff1d(np.arange(A.ncols), uniq)
        A_s = A.select_columns(uniq)
        start = rayleigh_ritz(coarse.U, A_s)
        D = A.select_columns(rest)
        if kind == "zha-simon":
            upd = zha_simon_update(start, D, k)
        else:
            upd = low_rank_update(start, D, k, l=min(l, max(1, D.ncols)), seed=seed)
        perm = np.concatenate([uniq, rest])
        V = np.zeros((A.ncols, upd.k))
        V[perm] = upd.V
        svd = PartialSVD(upd.U, upd.sigma, V)
        notes.append(f"updated with {rest.size} remaining columns")
    return LowRankResult(svd, C, selected, hier, notes)


def _align_right(A: SparseMatrix, U: np.ndarray) -> np.ndarray:
    """Unit right vectors ``A^T u_i / ||A^T u_i||`` paired with each left vector."""
    W = multiply_dense(A, U, transpose_A=True)
    nrm = np.linalg.norm(W, axis=0)
    nrm[nrm == 0] = 1.0
    return W / nrm


def svd_report(A: SparseMatrix, res: LowRankResult, k: int, reference_sigma=None,
               cap: int = DENSE_CAP) -> MetricsReport:
    """Error1 (projection error) always; Error2 and spectral error when a reference is available."""
    rep = MetricsReport()
    H = res.svd.U[:, :k]
    rep.set("error1_frobenius", projection_error_frobenius(A, H, check=False))
    if reference_sigma is None and min(A.shape) <= cap:
        reference_sigma = dense_svd(A, cap).sigma
    if reference_sigma is not None and np.all(np.asarray(reference_sigma)[:k] > 0):
        rep.set("error2_mean_sv", mean_sv_error(res.svd.sigma, reference_sigma, min(k, res.svd.k)))
        if min(A.shape) <= cap:
            rep.set("spectral_error", projection_error_spectral(A, H))
    else:
        rep.notes.append("reference spectrum unavailable")
    return rep


def run_cssp(A: SparseMatrix, method: str, cfg: CoarsenConfig, k: int | None = None, c: int | None = None,
             seed: int = 0, projector_rank: int | None = None, integer_data: bool = False):
    """Column subset selection by unscaled coarsening or leverage-score sampling."""
    if method == "coarsen":
        idx, C = cssp_select(A, cfg)
    elif method == "leverage":
        if k is None:
            raise ConfigError("leverage selection needs k")
        if c is None:
            c = cssp_select(A, cfg)[1].ncols
        s = leverage_sample(A, c, k, axis="columns", seed=seed)
        idx, C = s.indices, s.matrix
    else:
        raise ConfigError(f"cssp supports methods 'coarsen' and 'leverage', not {method!r}")
    frob, nnz_err = cssp_errors(A, C, integer_data=integer_data, projector_rank=projector_rank)
    rep = MetricsReport()
    rep.set("cssp_frob_error", frob)
    rep.set("cssp_nnz_error", nnz_err)
    return idx, C, rep


def numerical_rank(K: SparseMatrix, cap: int = DENSE_CAP, rtol: float = 1e-10) -> int:
    s = dense_svd(K, cap).sigma
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.count_nonzero(s > rtol * s[0]))


def run_sparsify(G: WeightedEdgeList, method: str, cfg: CoarsenConfig, c: int | None = None,
                 k: int | None = None, r: int | None = None, seed: int = 0):
    """Sparsify a graph by coarsening (or leverage sampling) the rows of its incidence matrix.

    Returns ``(B_tilde, K_tilde, report)``.
    """
    B = incidence_matrix(G)
    K = laplacian(B)
    if method == "coarsen":
        h = coarsen_rows(B, cfg)
        Bt = h.final
    elif method == "leverage":
        rank = numerical_rank(K)
        kk = rank if k is None else k
        if c is None:
            c = max(1, math.ceil(B.nrows / 2 ** max(1, cfg.levels)))
        Bt = leverage_sample(B, c, kk, axis="rows", seed=seed, scale=True).matrix
    else:
        raise ConfigError(f"sparsify supports methods 'coarsen' and 'leverage', not {method!r}")
    Kt = laplacian(Bt)
    rank = numerical_rank(K)
    r_eff = min(Bt.nrows, rank) if r is None else r
    rep = MetricsReport()
    if r_eff >= 1:
        err, ratio = sparsifier_error(K, Kt, r_eff, seed=seed)
        rep.set("sparsifier_sv_error", err)
        rep.set("nnz_ratio", ratio)
    else:
        rep.notes.append("graph has no edges; sparsifier error undefined")
    rep.metadata["c"] = Bt.nrows
    rep.metadata["k"] = r_eff
    return Bt, Kt, rep


def verify_bounds(A: SparseMatrix, epsilons, ks=(1, 5, 10), n_probes: int = 100, seed: int = 0,
                  visit_order: str = "random") -> tuple[list[BoundCheck], dict]:
    """Check the Rayleigh-quotient and projection-error bounds for one coarsening level per epsilon."""
    checks = []
    A_svd = dense_svd(A)
    X = unit_probes(A.nrows, n_probes, seed)
    for eps in epsilons:
        res = coarsen_level(A, eps, mode="scaled", visit_order=visit_order, seed=seed)
        C = res.coarse
        dev = rayleigh_deviations(A, C, X)
        checks.append(BoundCheck(f"lemma eps={eps:g} ({n_probes} probes)", float(dev.max()), lemma_bound(A, eps)))
        C_svd = dense_svd(C)
        for k in ks:
            if k > min(C.shape):
                continue
            checks.extend(theorem_bounds(A, C, k, eps, A_svd=A_svd, C_svd=C_svd))
            checks[-2].name = f"theorem {checks[-2].name} eps={eps:g}"
            checks[-1].name = f"theorem {checks[-1].name} eps={eps:g}"
    return checks, {"ncols": A.ncols}
