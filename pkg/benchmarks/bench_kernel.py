"""Compare the compiled integrator kernel with the pure-Python fallback.

    python benchmarks/bench_kernel.py [--repeat N] [--nodes N ...] [--json]

Each case is a full solve (series start, integration, arclength, gate) on
one builtin family; the table reports the best of N wall times per backend,
the speed-up, and the largest difference in v between the two backends.
"""

import argparse
import json
import sys
import time

import numpy as np

from jang_penrose import kernel, solver
from jang_penrose.data import FlatData, build_builtin

CASES = {
    "schwarzschild-static": (lambda: build_builtin("schwarzschild-static"), None),
    "painleve-gullstrand": (lambda: build_builtin("painleve-gullstrand"), None),
    "bumped-conformal": (lambda: build_builtin("bumped-conformal", {"eps": 0.01}), None),
    "flat-k alpha=0.5": (lambda: FlatData(1.0, 0.3), 0.5),
}


def best_time(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--nodes", type=int, nargs="+", default=[2000, 8000])
    p.add_argument("--json", action="store_true", help="print rows as JSON")
    args = p.parse_args(argv)

    if "compiled" not in kernel.available():
        print("compiled kernel not built; run `pip install --no-build-isolation -e .`",
              file=sys.stderr)
        return 1

    rows = []
    for name, (make, boundary) in CASES.items():
        data = make()
        for n in args.nodes:
            times, sols = {}, {}
            for backend in ("compiled", "python"):
                cfg = solver.SolverConfig(n_nodes=n, backend=backend)
                times[backend], sols[backend] = best_time(
                    lambda: solver.solve(data, boundary, cfg), args.repeat)
            dv = float(np.max(np.abs(sols["compiled"].v - sols["python"].v)))
            rows.append({"case": name, "nodes": n, "compiled_s": times["compiled"],
                         "python_s": times["python"],
                         "speedup": times["python"] / times["compiled"], "max_dv": dv})

    if args.json:
        print(json.dumps(rows, indent=2))
        return 0
    head = f"{'case':<22}{'nodes':>7}{'compiled ms':>13}{'python ms':>11}{'speedup':>9}" \
           f"{'max |dv|':>11}"
    print(head)
    print("-" * len(head))
    for r in rows:
        print(f"{r['case']:<22}{r['nodes']:>7}{1e3 * r['compiled_s']:>13.2f}"
              f"{1e3 * r['python_s']:>11.1f}{r['speedup']:>9.1f}{r['max_dv']:>11.1e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
