"""Hypergraph coarsening of sparse matrices by column matching.

A matrix is read as a hypergraph whose vertices are columns and whose
hyperedges are rows. One level of coarsening visits the columns, finds for
each the unmatched column with the largest inner product, and merges the
pair when ``tan(theta) <= epsilon``. The denser column of the pair survives,
multiplied by ``sqrt(1 + cos^2 theta)`` in scaled mode or copied verbatim in
unscaled (column subset selection) mode.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from . import _core
from .sparse import SparseMatrix, column_norms, transpose

__all__ = [
    "ConfigError",
    "CoarsenConfig",
    "MatchingResult",
    "CoarseningHierarchy",
    "coarsen_level",
    "coarsen_multilevel",
    "coarsen_rows",
    "cssp_select",
    "level_seed",
]

log = logging.getLogger(__name__)

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


class ConfigError(ValueError):
    """Invalid coarsening or sampling parameters."""


def _splitmix64(x: int) -> int:
    x = (x + _GOLDEN) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def level_seed(seed: int, level: int) -> int:
    """Per-level 64-bit seed derived from the master seed."""
    return _splitmix64((int(seed) & _MASK64) ^ ((level * _GOLDEN) & _MASK64))


def _check_epsilon(eps) -> float:
    eps = float(eps)
    if not (0.0 < eps < 1.0):
        raise ConfigError(f"epsilon must lie in (0, 1), got {eps}")
    return eps


@dataclass(frozen=True)
class CoarsenConfig:
    """Parameters of a multilevel coarsening run.

    ``epsilon_schedule`` holds one angle tolerance per level; an empty
    schedule means no coarsening at all.
    """

    epsilon_schedule: tuple[float, ...] = (0.5,)
    mode: str = "scaled"
    visit_order: str = "random"
    seed: int = 0
    early_exit: bool = False

    def __post_init__(self):
        sched = tuple(_check_epsilon(e) for e in self.epsilon_schedule)
        if any(b < a for a, b in zip(sched, sched[1:])):
            raise ConfigError(f"epsilon schedule must be nondecreasing, got {list(sched)}")
        if self.mode not in ("scaled", "unscaled"):
            raise ConfigError(f"mode must be 'scaled' or 'unscaled', got {self.mode!r}")
        if self.visit_order not in ("random", "natural"):
            raise ConfigError(f"visit_order must be 'random' or 'natural', got {self.visit_order!r}")
        if not (-(1 << 63) <= int(self.seed) < (1 << 64)):
            raise ConfigError("seed must fit in 64 bits")
        object.__setattr__(self, "epsilon_schedule", sched)

    @property
    def levels(self) -> int:
        return len(self.epsilon_schedule)

    @classmethod
    def uniform(cls, epsilon: float, levels: int, **kw) -> "CoarsenConfig":
        return cls(epsilon_schedule=(epsilon,) * levels, **kw)

    def with_(self, **kw) -> "CoarsenConfig":
        d = dict(
            epsilon_schedule=self.epsilon_schedule,
            mode=self.mode,
            visit_order=self.visit_order,
            seed=self.seed,
            early_exit=self.early_exit,
        )
        d.update(kw)
        return CoarsenConfig(**d)


@dataclass
class MatchingResult:
    """Outcome of one coarsening level.

    Attributes
    ----------
    coarse : SparseMatrix or None
        Coarse matrix ``C`` (``None`` when loaded from a map file alone).
        For row coarsening this is the matrix with fewer rows.
    kept : ndarray
        For each coarse column, the index of the input column it retains.
    partner : ndarray
        Index of the absorbed input column, or -1 when unmatched.
    cos2theta : ndarray
        Squared cosine of each matched pair, NaN when unmatched.
    """

    coarse: SparseMatrix | None
    kept: np.ndarray
    partner: np.ndarray
    cos2theta: np.ndarray
    level: int = 0
    epsilon: float = float("nan")
    mode: str = "scaled"
    axis: str = "columns"
    notes: list[str] = field(default_factory=list)

    @property
    def n_input(self) -> int:
        return int(self.kept.size + np.count_nonzero(self.partner >= 0))

    @property
    def n_coarse(self) -> int:
        return int(self.kept.size)

    @property
    def n_matched(self) -> int:
        return int(np.count_nonzero(self.partner >= 0))

    @property
    def pairs(self) -> list[tuple[int, int]]:
        m = self.partner >= 0
        return list(zip(self.kept[m].tolist(), self.partner[m].tolist()))

    def scale_factors(self) -> np.ndarray:
        """Multiplier applied to each retained column."""
        if self.mode == "unscaled":
            return np.ones(self.kept.size)
        return np.where(self.partner >= 0, np.sqrt(1.0 + np.nan_to_num(self.cos2theta)), 1.0)

    def to_dict(self) -> dict:
        return {
            "level": int(self.level),
            "epsilon": None if np.isnan(self.epsilon) else float(self.epsilon),
            "axis": self.axis,
            "mode": self.mode,
            "kept": self.kept.tolist(),
            "partner": [None if p < 0 else int(p) for p in self.partner.tolist()],
            "cos2theta": [None if np.isnan(c) else float(c) for c in self.cos2theta.tolist()],
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=1) + "\n"
        if path is not None:
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_dict(cls, d: dict, coarse: SparseMatrix | None = None) -> "MatchingResult":
        partner = np.array([-1 if p is None else p for p in d["partner"]], dtype=np.int64)
        cos2 = np.array([np.nan if c is None else c for c in d["cos2theta"]], dtype=np.float64)
        eps = d.get("epsilon")
        return cls(
            coarse=coarse,
            kept=np.array(d["kept"], dtype=np.int64),
            partner=partner,
            cos2theta=cos2,
            level=int(d.get("level", 0)),
            epsilon=float("nan") if eps is None else float(eps),
            mode=d.get("mode", "scaled"),
            axis=d.get("axis", "columns"),
        )

    @classmethod
    def from_json(cls, path, coarse: SparseMatrix | None = None) -> "MatchingResult":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh), coarse)


@dataclass
class CoarseningHierarchy:
    """Sequence ``A_0 = original, A_1, ..., A_s`` of coarsened matrices.

    ``base_indices`` maps the columns (or rows) of ``original`` back to an
    enclosing matrix when the hierarchy was built on a sample of it.
    """

    original: SparseMatrix
    levels: list[MatchingResult] = field(default_factory=list)
    config: CoarsenConfig | None = None
    stopped_early: bool = False
    axis: str = "columns"
    base_indices: np.ndarray | None = None

    @property
    def final(self) -> SparseMatrix:
        return self.levels[-1].coarse if self.levels else self.original

    def sizes(self) -> list[int]:
        n0 = self.original.ncols if self.axis == "columns" else self.original.nrows
        return [n0] + [lvl.n_coarse for lvl in self.levels]

    def selected_indices(self) -> np.ndarray:
        """Index, in the outermost matrix, of the column retained by each final coarse column."""
        n0 = self.sizes()[0]
        idx = np.arange(n0, dtype=np.int64)
        for lvl in self.levels:
            idx = idx[lvl.kept]
        if self.base_indices is not None:
            idx = np.asarray(self.base_indices, dtype=np.int64)[idx]
        return idx

    def groups(self) -> list[list[int]]:
        """Outermost indices aggregated into each final coarse column."""
        n0 = self.sizes()[0]
        members: list[list[int]] = [[i] for i in range(n0)]
        for lvl in self.levels:
            nxt = []
            for k, p in zip(lvl.kept.tolist(), lvl.partner.tolist()):
                nxt.append(members[k] + (members[p] if p >= 0 else []))
            members = nxt
        if self.base_indices is not None:
            base = np.asarray(self.base_indices).tolist()
            members = [[base[i] for i in g] for g in members]
        return [sorted(g) for g in members]


def _visit_order(n: int, visit_order: str, seed: int) -> np.ndarray:
    if visit_order == "natural":
        return np.arange(n, dtype=np.int64)
    return np.random.default_rng(seed).permutation(n).astype(np.int64)


def coarsen_level(
    A: SparseMatrix,
    epsilon: float,
    mode: str = "scaled",
    visit_order: str = "random",
    seed: int = 0,
    early_exit: bool = False,
    level: int = 0,
    backend: str | None = None,
) -> MatchingResult:
    """One level of column-matching coarsening.

    Parameters
    ----------
    A : SparseMatrix
        Input matrix, ``m x n``.
    epsilon : float
        Angle tolerance in (0, 1); a pair is merged when
        ``cos^2 theta >= 1 / (1 + epsilon^2)``.
    mode : {"scaled", "unscaled"}
        Whether the retained column is multiplied by ``sqrt(1 + cos^2 theta)``.
    visit_order : {"random", "natural"}
        Column visiting order; ``random`` draws a permutation from ``seed``.
    seed : int
        Seed for the random visiting order.
    early_exit : bool
        Accept the first candidate (by index) that clears the threshold
        instead of the one with the largest inner product.
    level : int
        Level number recorded on the result.
    backend : str, optional
        Kernel backend, ``"cython"`` or ``"python"``; defaults to the one
        selected at import.

    Returns
    -------
    MatchingResult
    """
    epsilon = _check_epsilon(epsilon)
    if mode not in ("scaled", "unscaled"):
        raise ConfigError(f"mode must be 'scaled' or 'unscaled', got {mode!r}")
    if visit_order not in ("random", "natural"):
        raise ConfigError(f"visit_order must be 'random' or 'natural', got {visit_order!r}")
    n = A.ncols
    if n == 0:
        raise ConfigError("cannot coarsen a matrix without columns")
    norms = column_norms(A)
    norms2 = norms * norms
    kernel = _core.get_match_kernel(backend)
    i64 = lambda a: np.ascontiguousarray(a, dtype=np.int64)  # noqa: E731
    f64 = lambda a: np.ascontiguousarray(a, dtype=np.float64)  # noqa: E731
    kept, partner, cos2 = kernel(
        i64(A.csc.indptr), i64(A.csc.indices), f64(A.csc.data),
        i64(A.csr.indptr), i64(A.csr.indices), f64(A.csr.data),
        _visit_order(n, visit_order, seed), f64(norms2),
        i64(A.column_nnz()), 1.0 / (1.0 + epsilon * epsilon), bool(early_exit),
    )
    res = MatchingResult(None, kept, partner, cos2, level=level, epsilon=epsilon, mode=mode)
    if A.nnz == 0:
        res.notes.append("matrix has only zero columns; nothing matched")
        log.warning("coarsen_level: all columns of the %dx%d input are zero", *A.shape)
    res.coarse = A.select_columns(kept, res.scale_factors() if mode == "scaled" else None)
    return res


def coarsen_multilevel(A: SparseMatrix, cfg: CoarsenConfig, backend: str | None = None) -> CoarseningHierarchy:
    """Apply :func:`coarsen_level` once per entry of ``cfg.epsilon_schedule``.

    Stops after the first level that matches nothing.
    """
    hier = CoarseningHierarchy(original=A, config=cfg)
    current = A
    for lvl, eps in enumerate(cfg.epsilon_schedule, start=1):
        res = coarsen_level(
            current, eps, mode=cfg.mode, visit_order=cfg.visit_order,
            seed=level_seed(cfg.seed, lvl), early_exit=cfg.early_exit,
            level=lvl, backend=backend,
        )
        hier.levels.append(res)
        current = res.coarse
        if res.n_matched == 0:
            if lvl < cfg.levels:
                hier.stopped_early = True
                res.notes.append(f"no matches at level {lvl}; stopped before level {lvl + 1}")
            break
    return hier


def coarsen_rows(B: SparseMatrix, cfg: CoarsenConfig, backend: str | None = None) -> CoarseningHierarchy:
    """Coarsen the rows of ``B`` by running the column matcher on ``B^T``.

    Every level's ``coarse`` matrix, and ``final``, are reported in row
    space: ``final`` is ``B~`` with fewer rows, and ``B~^T B~`` is the
    sparsified Laplacian when ``B`` is an incidence matrix.
    """
    hier = coarsen_multilevel(transpose(B), cfg, backend=backend)
    for res in hier.levels:
        res.coarse = transpose(res.coarse)
        res.axis = "rows"
    hier.original = B
    hier.axis = "rows"
    return hier


def cssp_select(A: SparseMatrix, cfg: CoarsenConfig, backend: str | None = None) -> tuple[np.ndarray, SparseMatrix]:
    """Column subset selection by unscaled multilevel coarsening.

    Returns the original indices of the selected columns and the matrix
    ``C`` made of those columns, verbatim.
    """
    if cfg.mode != "unscaled":
        cfg = cfg.with_(mode="unscaled")
    hier = coarsen_multilevel(A, cfg, backend=backend)
    return hier.selected_indices(), hier.final
