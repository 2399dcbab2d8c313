"""Compare the compiled and pure-Python Frank-Wolfe kernels.

    python benchmarks/bench_solver.py [--sizes 200x16,2000x64,10000x784] [--queries 20]

Prints one JSON object per (size, backend) with wall time per projection and
the agreement between backends.
"""

import argparse
import json
import time

import numpy as np

from hullscope import PointSet, SolverConfig
from hullscope.hull import KERNELS, project_to_hull


def bench(points, queries, backend, config):
    t0 = time.perf_counter()
    res = [project_to_hull(points, q, config, backend=backend) for q in queries]
    el = time.perf_counter() - t0
    return el, res


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="200x16,2000x64,10000x784")
    ap.add_argument("--queries", type=int, default=20)
    ap.add_argument("--gap-tol", type=float, default=None)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(args.seed)
    config = SolverConfig(gap_tolerance=args.gap_tol)
    for size in args.sizes.split(","):
        n, d = (int(x) for x in size.split("x"))
        V = rng.uniform(size=(n, d))
        P = PointSet(V)
        # half inside-ish, half outside
        qs = [rng.dirichlet(np.ones(n)) @ V if i % 2 else rng.uniform(-0.5, 1.5, d)
              for i in range(args.queries)]
        timings = {}
        results = {}
        for backend in sorted(KERNELS):
            el, res = bench(P, qs, backend, config)
            timings[backend] = el
            results[backend] = res
            print(json.dumps({
                "n": n, "d": d, "backend": backend, "queries": len(qs),
                "ms_per_query": 1e3 * el / len(qs),
                "mean_iterations": float(np.mean([r.iterations for r in res])),
                "converged": int(sum(r.converged for r in res)),
            }))
        if len(results) > 1:
            a, b = (results[k] for k in sorted(results))
            diff = max(abs(x.distance - y.distance) for x, y in zip(a, b))
            print(json.dumps({"n": n, "d": d, "max_distance_diff": diff,
                              "speedup": timings["python"] / timings["cython"]}))


if __name__ == "__main__":
    main()
