"""Command-line front end.

Subcommands ``coarsen``, ``svd``, ``cssp``, ``sparsify`` and ``verify-bounds``
read a MatrixMarket file (an edge list for ``sparsify``) and write every
artifact into one run directory, starting with ``runspec.json``.
``report-merge`` joins ``report.json`` files into a CSV table.

Exit codes: 0 success, 1 bound violated, 2 I/O or format error,
3 invalid configuration, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .coarsening import CoarsenConfig, ConfigError, coarsen_multilevel
from .metrics import MetricError, MetricsReport
from .mmio import MatrixMarketError, load_edge_list, load_matrix_market, write_matrix_market
from .pipeline import (
    SVD_METHODS,
    approximate_svd,
    parse_refine,
    run_cssp,
    run_sparsify,
    svd_report,
    verify_bounds,
)
from .sparse import DimensionError
from .svdkit import NumericalError, SizeError

log = logging.getLogger("matcoarsen")

EXIT_OK, EXIT_VIOLATION, EXIT_IO, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3, 4
OUTPUT_ENV = "MATCOARSEN_OUTPUT_DIR"
COMMANDS = ("coarsen", "svd", "cssp", "sparsify", "verify-bounds")


class MergeError(ValueError):
    """Reports passed to ``report-merge`` do not share a schema."""


@dataclass
class RunSpec:
    command: str
    inputs: list[str]
    output_dir: str | None = None
    method: str = "coarsen"
    k: int | None = None
    c: int | None = None
    levels: int = 1
    epsilons: list[float] = field(default_factory=lambda: [0.5])
    iters: int = 2
    refine: str = "none"
    seed: int = 0
    visit_order: str = "random"
    mode: str = "scaled"
    early_exit: bool = False
    ks: list[int] = field(default_factory=lambda: [1, 5, 10])
    probes: int = 100
    r: int | None = None
    projector_rank: int | None = None
    integer_data: bool = False

    def schedule(self) -> tuple[float, ...]:
        if self.command == "verify-bounds":
            # each value is its own single-level test
            return tuple(self.epsilons)
        if len(self.epsilons) == 1:
            return tuple(self.epsilons) * self.levels
        if len(self.epsilons) != self.levels:
            raise ConfigError(f"{len(self.epsilons)} epsilon values given for {self.levels} levels")
        return tuple(self.epsilons)

    def coarsen_config(self) -> CoarsenConfig:
        return CoarsenConfig(
            epsilon_schedule=self.schedule(),
            mode=self.mode,
            visit_order=self.visit_order,
            seed=self.seed,
            early_exit=self.early_exit,
        )

    def validate(self) -> None:
        """Reject inconsistent flag combinations before any work is done."""
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if len(self.inputs) != 1:
            raise ConfigError(f"{self.command} takes exactly one input file")
        if self.levels < 0:
            raise ConfigError("levels must be >= 0")
        if self.command == "verify-bounds":
            for e in self.epsilons:
                CoarsenConfig(epsilon_schedule=(e,))
        else:
            self.coarsen_config()
        for name in ("k", "c", "r", "projector_rank"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ConfigError(f"--{name.replace('_', '-')} must be >= 1")
        if self.iters < 0 or self.probes < 1:
            raise ConfigError("iters must be >= 0 and probes >= 1")
        kind, _ = parse_refine(self.refine)
        if kind != "none" and self.command != "svd":
            raise ConfigError("--refine only applies to the svd command")
        if self.command == "svd":
            if self.k is None:
                raise ConfigError("svd needs --k")
            if self.method not in SVD_METHODS:
                raise ConfigError(f"svd method must be one of {SVD_METHODS}")
            if self.method in ("coarsen", "rand+coarsen") and self.levels < 1:
                raise ConfigError(f"method {self.method} needs --levels >= 1")
        elif self.command == "cssp":
            if self.method not in ("coarsen", "leverage"):
                raise ConfigError("cssp method must be 'coarsen' or 'leverage'")
            if self.method == "leverage" and self.k is None:
                raise ConfigError("cssp with leverage sampling needs --k")
        elif self.command == "sparsify":
            if self.method not in ("coarsen", "leverage"):
                raise ConfigError("sparsify method must be 'coarsen' or 'leverage'")
        elif self.command == "coarsen":
            if self.method != "coarsen":
                raise ConfigError("the coarsen command only supports --method coarsen")

    def to_json(self) -> str:
        d = asdict(self)
        d.pop("output_dir")
        return json.dumps(d, indent=1) + "\n"


def _metadata(spec: RunSpec, m: int, n: int, c=None, k=None) -> dict:
    return {
        "command": spec.command,
        "matrix": Path(spec.inputs[0]).name,
        "method": spec.method,
        "m": m,
        "n": n,
        "c": c,
        "k": k,
        "levels": spec.levels,
        "epsilons": list(spec.schedule()),
        "refine": spec.refine if spec.command == "svd" else None,
        "iters": spec.iters if spec.command == "svd" else None,
        "seed": spec.seed,
    }


def _write_text(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _cmd_coarsen(spec: RunSpec, out: Path) -> int:
    A = load_matrix_market(spec.inputs[0])
    t0 = time.perf_counter()
    h = coarsen_multilevel(A, spec.coarsen_config())
    elapsed = time.perf_counter() - t0
    for res in h.levels:
        res.to_json(out / f"level_{res.level}.json")
        write_matrix_market(out / f"level_{res.level}.mtx", res.coarse)
    summary = {
        "sizes": h.sizes(),
        "stopped_early": h.stopped_early,
        "selected": h.selected_indices().tolist(),
    }
    _write_text(out / "hierarchy.json", json.dumps(summary, indent=1) + "\n")
    rep = MetricsReport(metadata=_metadata(spec, *A.shape, c=h.final.ncols), timing={"wall_time_s": elapsed})
    for res in h.levels:
        rep.notes.extend(res.notes)
    rep.to_json(out / "report.json")
    print(f"coarsened {A.ncols} -> {h.final.ncols} columns over {len(h.levels)} level(s)")
    return EXIT_OK


def _cmd_svd(spec: RunSpec, out: Path) -> int:
    A = load_matrix_market(spec.inputs[0])
    t0 = time.perf_counter()
    res = approximate_svd(
        A, spec.method, spec.k, spec.coarsen_config(), c=spec.c,
        refine=spec.refine, iters=spec.iters, seed=spec.seed,
    )
    elapsed = time.perf_counter() - t0
    rep = svd_report(A, res, spec.k)
    rep.metadata = _metadata(spec, *A.shape, c=res.C.ncols, k=spec.k)
    rep.timing = {"wall_time_s": elapsed}
    rep.notes.extend(res.notes)
    res.svd.save(str(out) + os.sep)
    _write_text(out / "selected.json", json.dumps({"level": 0, "epsilon": None, "kept": res.selected.tolist()}) + "\n")
    rep.to_json(out / "report.json")
    m = rep.metrics
    e2 = m.get("error2_mean_sv")
    print(f"error1={m['error1_frobenius']:.6g} error2={'n/a' if e2 is None else f'{e2:.6g}'} c={res.C.ncols}")
    return EXIT_OK


def _cmd_cssp(spec: RunSpec, out: Path) -> int:
    A = load_matrix_market(spec.inputs[0])
    t0 = time.perf_counter()
    idx, C, rep = run_cssp(
        A, spec.method, spec.coarsen_config().with_(mode="unscaled"), k=spec.k, c=spec.c,
        seed=spec.seed, projector_rank=spec.projector_rank, integer_data=spec.integer_data,
    )
    elapsed = time.perf_counter() - t0
    rep.metadata = _metadata(spec, *A.shape, c=C.ncols, k=spec.k)
    rep.timing = {"wall_time_s": elapsed}
    _write_text(out / "selected.json", json.dumps({"level": 0, "epsilon": None, "kept": idx.tolist()}) + "\n")
    write_matrix_market(out / "selected.mtx", C)
    rep.to_json(out / "report.json")
    print(f"selected {C.ncols} columns: ||A - P_C A||_F = {rep.metrics['cssp_frob_error']:.6g}")
    return EXIT_OK


def _cmd_sparsify(spec: RunSpec, out: Path) -> int:
    G = load_edge_list(spec.inputs[0])
    t0 = time.perf_counter()
    Bt, Kt, rep = run_sparsify(G, spec.method, spec.coarsen_config(), c=spec.c, k=spec.k, r=spec.r, seed=spec.seed)
    elapsed = time.perf_counter() - t0
    meta = _metadata(spec, G.m, G.n, c=rep.metadata.get("c"), k=rep.metadata.get("k"))
    rep.metadata = meta
    rep.timing = {"wall_time_s": elapsed}
    write_matrix_market(out / "B_tilde.mtx", Bt)
    write_matrix_market(out / "K_tilde.mtx", Kt)
    rep.to_json(out / "report.json")
    err = rep.metrics.get("sparsifier_sv_error")
    print(f"kept {Bt.nrows} of {G.m} edges; sparsifier error = {'n/a' if err is None else f'{err:.6g}'}")
    return EXIT_OK


def _cmd_verify(spec: RunSpec, out: Path) -> int:
    A = load_matrix_market(spec.inputs[0])
    checks, _ = verify_bounds(A, spec.epsilons, ks=spec.ks, n_probes=spec.probes, seed=spec.seed,
                              visit_order=spec.visit_order)
    lines = [c.line() for c in checks]
    for line in lines:
        print(line)
    margin = min((c.margin for c in checks), default=float("inf"))
    print(f"min margin = {margin:.6g}")
    _write_text(out / "bounds.txt", "\n".join(lines) + "\n")
    rep = MetricsReport(metadata=_metadata(spec, *A.shape))
    lemma = [c for c in checks if c.name.startswith("lemma")]
    if lemma:
        rep.set("rayleigh_max_dev", max(c.lhs for c in lemma))
    rep.to_json(out / "report.json")
    return EXIT_OK if all(c.ok for c in checks) else EXIT_VIOLATION


_HANDLERS = {
    "coarsen": _cmd_coarsen,
    "svd": _cmd_svd,
    "cssp": _cmd_cssp,
    "sparsify": _cmd_sparsify,
    "verify-bounds": _cmd_verify,
}


def run(spec: RunSpec) -> int:
    """Validate ``spec``, execute it and return the process exit status."""
    try:
        spec.validate()
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(spec.output_dir or os.environ.get(OUTPUT_ENV) or Path("runs") / spec.command)
    try:
        if not Path(spec.inputs[0]).is_file():
            raise FileNotFoundError(spec.inputs[0])
        out.mkdir(parents=True, exist_ok=True)
        _write_text(out / "runspec.json", spec.to_json())
        return _HANDLERS[spec.command](spec, out)
    except (OSError, MatrixMarketError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, DimensionError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, MetricError, SizeError, np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def report_merge(paths, out=None) -> str:
    """Merge ``report.json`` files into CSV text, one row per report."""
    if not paths:
        raise MergeError("no reports given")
    reports = []
    for p in paths:
        try:
            reports.append(MetricsReport.from_json(p))
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise MergeError(f"{p}: {exc}") from None
    header = MetricsReport.csv_header()
    import io

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for rep in reports:
        w.writerow(rep.csv_values())
    text = buf.getvalue()
    if out is not None:
        _write_text(Path(out), text)
    return text


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of integers: {text!r}") from None


class _Parser(argparse.ArgumentParser):
    """Usage errors are configuration errors, so they exit with status 3, not argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="matcoarsen", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, default_method="coarsen"):
        sp.add_argument("input", help="MatrixMarket file (edge list for sparsify)")
        sp.add_argument("-o", "--out", dest="output_dir", help=f"run directory (default ${OUTPUT_ENV} or runs/<command>)")
        sp.add_argument("--method", default=default_method)
        sp.add_argument("--levels", type=int, default=1)
        sp.add_argument("--epsilon", dest="epsilons", type=_float_list, default=[0.5],
                        help="one value, or one per level (comma separated)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--visit-order", choices=("random", "natural"), default="random")
        sp.add_argument("--early-exit", action="store_true", help="accept the first qualifying partner")
        sp.add_argument("--k", type=int)
        sp.add_argument("--c", type=int)

    sp = sub.add_parser("coarsen", help="multilevel column coarsening")
    common(sp)
    sp.add_argument("--mode", choices=("scaled", "unscaled"), default="scaled")

    sp = sub.add_parser("svd", help="approximate partial SVD")
    common(sp)
    sp.add_argument("--refine", default="none", help="none | subspace | zha-simon | lowrank:<l>")
    sp.add_argument("--iters", type=int, default=2)

    sp = sub.add_parser("cssp", help="column subset selection")
    common(sp)
    sp.add_argument("--projector-rank", type=int)
    sp.add_argument("--integer-data", action="store_true", help="round the reconstruction before counting mismatches")

    sp = sub.add_parser("sparsify", help="graph sparsification from an edge list")
    common(sp)
    sp.add_argument("--r", type=int, help="number of singular values in the error")

    sp = sub.add_parser("verify-bounds", help="check the coarsening error bounds")
    common(sp)
    sp.add_argument("--ks", type=_int_list, default=[1, 5, 10])
    sp.add_argument("--probes", type=int, default=100)

    sp = sub.add_parser("report-merge", help="merge report.json files into a CSV table")
    sp.add_argument("reports", nargs="+")
    sp.add_argument("-o", "--out")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "report-merge":
        try:
            text = report_merge(args.reports, args.out)
        except OSError as exc:
            print(f"I/O error: {exc}", file=sys.stderr)
            return EXIT_IO
        except MergeError as exc:
            print(f"merge error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        if args.out is None:
            sys.stdout.write(text)
        return EXIT_OK
    kw = {k: v for k, v in vars(args).items() if k in RunSpec.__dataclass_fields__ and k != "command"}
    spec = RunSpec(command=args.command, inputs=[args.input], **kw)
    return run(spec)


if __name__ == "__main__":
    sys.exit(main())
