"""Error measures for low-rank approximations, subset selection and sparsifiers,
and the a priori bounds for one level of scaled coarsening."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .sparse import DimensionError, SparseMatrix, frobenius_norm, multiply_dense
from .svdkit import DENSE_CAP, NumericalError, SizeError, dense_svd, partial_svd

__all__ = [
    "METRIC_KEYS",
    "METADATA_KEYS",
    "MetricError",
    "MetricsReport",
    "BoundCheck",
    "cssp_errors",
    "lemma_bound",
    "mean_sv_error",
    "projection_error_frobenius",
    "projection_error_spectral",
    "rayleigh_deviation",
    "sparsifier_error",
    "theorem_bounds",
]

METRIC_KEYS = (
    "error1_frobenius",
    "error2_mean_sv",
    "spectral_error",
    "rayleigh_max_dev",
    "cssp_frob_error",
    "cssp_nnz_error",
    "sparsifier_sv_error",
    "nnz_ratio",
)
METADATA_KEYS = ("command", "matrix", "method", "m", "n", "c", "k", "levels", "epsilons", "refine", "iters", "seed")


class MetricError(ValueError):
    """A metric is undefined for the given inputs."""


def _as_dense(X) -> np.ndarray:
    return X.toarray() if isinstance(X, SparseMatrix) else np.asarray(X, dtype=np.float64)


def projection_error_frobenius(A: SparseMatrix, H, check: bool = True) -> float:
    """``||A - H H^T A||_F`` computed as ``sqrt(||A||_F^2 - ||A^T H||_F^2)``."""
    H = np.asarray(H, dtype=np.float64)
    if H.shape[0] != A.nrows:
        raise DimensionError(f"H has {H.shape[0]} rows, A has {A.nrows}")
    if check and H.shape[1]:
        err = np.abs(H.T @ H - np.eye(H.shape[1])).max()
        if err > 1e-8:
            raise ValueError(f"H is not orthonormal (max |H^T H - I| = {err:.2e})")
    fa = frobenius_norm(A)
    AtH = multiply_dense(A, H, transpose_A=True) if H.shape[1] else np.zeros((A.ncols, 0))
    rad = fa * fa - float(np.sum(AtH * AtH))
    if rad < 0.0:
        if rad < -1e-10 * max(1.0, fa * fa):
            raise NumericalError(f"negative squared projection error {rad:.3e}")
        rad = 0.0
    return float(np.sqrt(rad))


def projection_error_spectral(A, H) -> float:
    """``||A - H H^T A||_2`` by the dense oracle."""
    Ad = _as_dense(A)
    H = np.asarray(H, dtype=np.float64)
    R = Ad - H @ (H.T @ Ad)
    if R.size == 0:
        return 0.0
    return float(np.linalg.norm(R, 2))


def mean_sv_error(sigma_hat, sigma, k: int) -> float:
    """``(1/k) * sum_{i<=k} |sigma_hat_i - sigma_i| / sigma_i``."""
    sigma_hat = np.asarray(sigma_hat, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    if k < 1 or sigma_hat.size < k or sigma.size < k:
        raise MetricError(f"need at least k={k} values in both spectra")
    ref = sigma[:k]
    if np.any(ref <= 0.0):
        raise MetricError("reference singular value is zero")
    return float(np.mean(np.abs(sigma_hat[:k] - ref) / ref))


def rayleigh_deviation(A: SparseMatrix, C: SparseMatrix, n_probes: int = 100, seed: int = 0,
                       probes=None) -> tuple[float, float]:
    """Max and mean of ``|x^T A A^T x - x^T C C^T x|`` over random unit vectors.

    Uses ``||A^T x||^2`` and ``||C^T x||^2`` so ``A A^T`` is never formed.
    ``probes`` (m x p, unit columns) overrides the random draw.
    """
    if A.nrows != C.nrows:
        raise DimensionError(f"row counts differ: {A.nrows} vs {C.nrows}")
    X = unit_probes(A.nrows, n_probes, seed) if probes is None else np.asarray(probes, dtype=np.float64)
    dev = rayleigh_deviations(A, C, X)
    return float(dev.max()), float(dev.mean())


def unit_probes(m: int, n_probes: int, seed: int = 0) -> np.ndarray:
    X = np.random.default_rng(seed).standard_normal((m, n_probes))
    return X / np.linalg.norm(X, axis=0)


def rayleigh_deviations(A: SparseMatrix, C: SparseMatrix, X) -> np.ndarray:
    """Per-probe ``|x^T A A^T x - x^T C C^T x|`` for the columns of ``X``."""
    a = multiply_dense(A, X, transpose_A=True)
    c = multiply_dense(C, X, transpose_A=True)
    return np.abs(np.einsum("ij,ij->j", a, a) - np.einsum("ij,ij->j", c, c))


def _span_basis(C) -> np.ndarray:
    """Orthonormal basis of ``span(C)``, truncated at numerical rank."""
    Cd = _as_dense(C)
    if Cd.shape[1] == 0:
        return np.zeros((Cd.shape[0], 0))
    U, s, _ = np.linalg.svd(Cd, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((Cd.shape[0], 0))
    tol = max(Cd.shape) * np.finfo(float).eps * s[0]
    return U[:, s > tol]


def cssp_errors(A: SparseMatrix, C, cap: int = DENSE_CAP, integer_data: bool = False,
                nnz_tol: float = 1e-8, projector_rank: int | None = None) -> tuple[float, float]:
    """Subset-selection errors ``||A - P_C A||_F`` and ``nnz(P_C A - A) / nnz(A)``.

    ``P_C`` projects onto ``span(C)``; ``projector_rank`` restricts it to the
    top left singular vectors of ``C``. With ``integer_data`` the
    reconstruction is rounded to the nearest integer before counting
    mismatches.
    """
    ncols = C.shape[1]
    if min(C.shape[0], ncols) > cap:
        raise SizeError(f"selected block of {ncols} columns exceeds the dense cap {cap}")
    Q = _span_basis(C)
    if projector_rank is not None:
        Q = Q[:, :projector_rank]
    if A.nnz == 0:
        return 0.0, 0.0
    # residual formed block by block (O(m * block) memory); summing it directly
    # avoids the cancellation of the ||A||^2 - ||A^T Q||^2 identity near zero
    sq = 0.0
    mismatches = 0
    block = max(1, 2_000_000 // max(1, A.nrows))
    for j0 in range(0, A.ncols, block):
        j1 = min(A.ncols, j0 + block)
        Ab = A.csc[:, j0:j1].toarray()
        Ahat = Q @ (Q.T @ Ab)
        sq += float(np.sum((Ab - Ahat) ** 2))
        if integer_data:
            Ahat = np.rint(Ahat)
        mismatches += int(np.count_nonzero(np.abs(Ahat - Ab) > nnz_tol))
    return float(np.sqrt(sq)), mismatches / A.nnz


def _top_singular_values(K, r: int, cap: int, seed: int) -> np.ndarray:
    if min(K.shape) <= cap:
        return dense_svd(K, cap).sigma[:r]
    return partial_svd(K, r, iters=50, seed=seed, oversample=max(10, r // 2)).sigma


def sparsifier_error(K: SparseMatrix, K_tilde: SparseMatrix, r: int, cap: int = DENSE_CAP,
                     seed: int = 0) -> tuple[float, float]:
    """Mean relative error of the top ``r`` singular values, and ``nnz(K~)/nnz(K)``."""
    if K.shape != K_tilde.shape:
        raise DimensionError(f"shapes differ: {K.shape} vs {K_tilde.shape}")
    if r < 1 or r > min(K.shape):
        raise MetricError(f"r={r} out of range for a {K.shape[0]}x{K.shape[1]} matrix")
    s = _top_singular_values(K, r, cap, seed)
    st = _top_singular_values(K_tilde, r, cap, seed)
    zero_tol = max(K.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    if np.any(s[:r] <= zero_tol):
        raise MetricError("zero singular value of K among the top r")
    err = float(np.mean(np.abs(st[:r] - s[:r]) / s[:r]))
    ratio = K_tilde.nnz / K.nnz if K.nnz else float("nan")
    return err, ratio


# -- a priori bounds ---------------------------------------------------------
def lemma_bound(A: SparseMatrix, epsilon: float) -> float:
    """``3 * epsilon * ||A||_F^2``, the Rayleigh-quotient deviation bound."""
    f = frobenius_norm(A)
    return 3.0 * epsilon * f * f


@dataclass
class BoundCheck:
    name: str
    lhs: float
    rhs: float

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def ok(self) -> bool:
        return self.lhs <= self.rhs

    def line(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        return f"{status} {self.name}: lhs={self.lhs:.6g} rhs={self.rhs:.6g} margin={self.margin:.6g}"


def theorem_bounds(A: SparseMatrix, C: SparseMatrix, k: int, epsilon: float,
                   A_svd=None, C_svd=None) -> tuple[BoundCheck, BoundCheck]:
    """Frobenius and spectral error bounds for the top-``k`` left singular vectors of ``C``.

    Checks ``||A - H H^T A||_F^2 <= ||A - A_k||_F^2 + 6 k eps ||A||_F^2`` and
    ``||A - H H^T A||_2^2 <= sigma_{k+1}(A)^2 + 6 eps ||A||_F^2`` with dense
    factorizations of both matrices.
    """
    if not (1 <= k <= C.ncols):
        raise DimensionError(f"k={k} must lie in [1, {C.ncols}]")
    As = dense_svd(A) if A_svd is None else A_svd
    Cs = dense_svd(C) if C_svd is None else C_svd
    H = Cs.U[:, :k]
    fa2 = frobenius_norm(A) ** 2
    tail2 = float(np.sum(As.sigma[k:] ** 2))
    sk1 = float(As.sigma[k]) if As.sigma.size > k else 0.0
    frob = projection_error_frobenius(A, H, check=False) ** 2
    spec = projection_error_spectral(A, H) ** 2
    return (
        BoundCheck(f"frobenius k={k}", frob, tail2 + 6.0 * k * epsilon * fa2),
        BoundCheck(f"spectral k={k}", spec, sk1 * sk1 + 6.0 * epsilon * fa2),
    )


# -- reports -----------------------------------------------------------------
@dataclass
class MetricsReport:
    """Named scalar metrics with the metadata needed to rerun the experiment.

    Wall-clock timing is kept under its own ``timing`` key so that reports of
    identical runs differ only there.
    """

    metrics: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def set(self, key: str, value) -> None:
        if key not in METRIC_KEYS:
            raise KeyError(f"unknown metric {key!r}")
        if value is not None:
            value = float(value)
            if value < 0 or np.isnan(value):
                raise MetricError(f"metric {key} must be nonnegative, got {value}")
        self.metrics[key] = value

    def to_dict(self) -> dict:
        return {
            "metrics": {k: self.metrics.get(k) for k in METRIC_KEYS},
            "metadata": {k: self.metadata.get(k) for k in METADATA_KEYS},
            "notes": list(self.notes),
            "timing": dict(self.timing),
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=1, sort_keys=False) + "\n"
        if path is not None:
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsReport":
        missing = [k for k in ("metrics", "metadata") if k not in d]
        if missing:
            raise KeyError(f"report lacks {missing}")
        unknown = set(d["metrics"]) - set(METRIC_KEYS)
        if unknown:
            raise KeyError(f"unknown metric keys {sorted(unknown)}")
        unknown = set(d["metadata"]) - set(METADATA_KEYS)
        if unknown:
            raise KeyError(f"unknown metadata keys {sorted(unknown)}")
        return cls(dict(d["metrics"]), dict(d["metadata"]), dict(d.get("timing", {})), list(d.get("notes", [])))

    @classmethod
    def from_json(cls, path) -> "MetricsReport":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    @staticmethod
    def csv_header() -> list[str]:
        return list(METADATA_KEYS) + list(METRIC_KEYS) + ["wall_time_s"]

    def csv_values(self) -> list:
        def fmt(v):
            if v is None:
                return ""
            if isinstance(v, (list, tuple)):
                return " ".join(str(x) for x in v)
            if isinstance(v, float):
                return repr(v)
            return str(v)

        vals = [fmt(self.metadata.get(k)) for k in METADATA_KEYS]
        vals += [fmt(self.metrics.get(k)) for k in METRIC_KEYS]
        vals.append(fmt(self.timing.get("wall_time_s")))
        return vals

    def to_csv_row(self, header: bool = False) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if header:
            w.writerow(self.csv_header())
        w.writerow(self.csv_values())
        return buf.getvalue()
