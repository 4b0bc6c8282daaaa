"""Compare the compiled and pure-Python matching kernels.

Runs one coarsening level on random sparse matrices with each backend,
checks that both return identical results and prints the best-of-N wall
time and the speedup.

    python3 benchmarks/bench_matching.py --sizes 300x2000 1000x10000 --density 0.01
"""
import argparse
import json
import sys
import time

import numpy as np
import scipy.sparse as sp

from matcoarsen import SparseMatrix, coarsen_level
from matcoarsen._core import available_backends


def _matrix(m, n, density, seed, clustered):
    rng = np.random.default_rng(seed)
    if not clustered:
        M = sp.random(m, n, density=density, random_state=rng, format="csc")
        return SparseMatrix.from_scipy(M)
    # columns drawn from a pool of prototypes so that many pairs merge
    P = sp.random(m, max(1, n // 4), density=density, random_state=rng, format="csc")
    pick = rng.integers(0, P.shape[1], n)
    M = P[:, pick].tocsc()
    M.data *= 1.0 + 0.1 * rng.standard_normal(M.data.size)
    return SparseMatrix.from_scipy(M)


def _best_time(fn, repeats):
    best = float("inf")
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--sizes", nargs="+", default=["300x2000", "1000x10000", "3000x30000"])
    ap.add_argument("--density", type=float, default=0.005)
    ap.add_argument("--epsilon", type=float, default=0.5)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--uniform", action="store_true", help="unstructured matrices (few matches)")
    ap.add_argument("--json", help="also write the results to this file")
    args = ap.parse_args(argv)

    backends = available_backends()
    if "cython" not in backends:
        print("compiled kernel not built; only the Python backend is available", file=sys.stderr)
    rows = []
    print(f"{'size':>12} {'nnz':>9} {'matched':>8} " + " ".join(f"{b + ' [s]':>12}" for b in backends) + "  speedup")
    for size in args.sizes:
        m, n = (int(x) for x in size.lower().split("x"))
        A = _matrix(m, n, args.density, args.seed, not args.uniform)
        times, results = {}, {}
        for b in backends:
            times[b], results[b] = _best_time(
                lambda: coarsen_level(A, args.epsilon, seed=args.seed, backend=b), args.repeats
            )
        ref = results[backends[0]]
        for b in backends[1:]:
            r = results[b]
            same = (np.array_equal(ref.kept, r.kept) and np.array_equal(ref.partner, r.partner)
                    and ref.cos2theta.tobytes() == r.cos2theta.tobytes())
            if not same:
                raise SystemExit(f"backends disagree on {size}")
        speedup = times["python"] / times["cython"] if "cython" in times else float("nan")
        print(f"{size:>12} {A.nnz:>9} {ref.n_matched:>8} "
              + " ".join(f"{times[b]:>12.4f}" for b in backends) + f"  {speedup:7.1f}x")
        rows.append({"size": size, "nnz": A.nnz, "matched": ref.n_matched, "seconds": times, "speedup": speedup})
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=1)


if __name__ == "__main__":
    main()
