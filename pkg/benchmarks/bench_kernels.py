"""Compare the compiled and pure-numpy 1-NN kernels on matched workloads.

Usage:
    python benchmarks/bench_kernels.py [--n 50000] [--dim 100] [--queries 2000]

Both paths run on identical inputs in the same process, so the numbers
isolate kernel cost from index construction and I/O.  The compiled path is
warmed once before timing to exclude JIT compilation.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from nnvad import _kernels as K
from nnvad.ann import AnnIndex


def _time(fn, *args, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=50_000, help="indexed points")
    parser.add_argument("--dim", type=int, default=100)
    parser.add_argument("--queries", type=int, default=2_000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    if not K.NUMBA_ENABLED:
        raise SystemExit(
            "compiled path unavailable (numba missing or NNVAD_DISABLE_NUMBA set); "
            "nothing to compare"
        )

    rng = np.random.default_rng(args.seed)
    pts = rng.normal(size=(args.n, args.dim))
    qs = rng.normal(size=(args.queries, args.dim))

    index = AnnIndex.build(pts, mode="approx", seed=args.seed)
    f = index._forest
    forest_args = (
        pts,
        f["split_dim"], f["split_val"], f["left"], f["right"],
        f["leaf_start"], f["leaf_end"], f["leaf_points"], f["roots"],
        qs, index.search_budget,
    )

    # warm the JIT so compilation is not billed to the timed runs
    K.brute_force_nn_numba(pts[:64], qs[:4])
    K.forest_nn_numba(*forest_args[:9], qs[:4], index.search_budget)

    print(f"n={args.n} dim={args.dim} queries={args.queries} "
          f"(trees={index.trees}, budget={index.search_budget})\n")
    print(f"{'kernel':<22}{'numpy':>12}{'numba':>12}{'speedup':>10}")

    rows = [
        ("brute_force_nn", K.brute_force_nn_numpy, K.brute_force_nn_numba, (pts, qs)),
        ("forest_nn", K.forest_nn_numpy, K.forest_nn_numba, forest_args),
    ]
    for name, fn_np, fn_nb, call_args in rows:
        t_np, (d_np, i_np) = _time(fn_np, *call_args)
        t_nb, (d_nb, i_nb) = _time(fn_nb, *call_args)
        if not np.array_equal(i_np, i_nb) or not np.allclose(d_np, d_nb):
            raise SystemExit(f"{name}: paths disagree — benchmark aborted")
        print(f"{name:<22}{t_np:>11.3f}s{t_nb:>11.3f}s{t_np / t_nb:>9.1f}x")

    print("\nresults identical across paths (ids bit-equal, distances allclose)")


if __name__ == "__main__":
    main()
