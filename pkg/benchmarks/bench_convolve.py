"""Time the compiled recursion kernel against the pure-Python fallback.

Usage: python3 benchmarks/bench_convolve.py [--repeat R]

Both kernels run on the same discretized Pareto mixtures; the script also
reports the total-variation gap between their outputs.
"""

from __future__ import annotations

import argparse
import time

from collrisk.convolve import BACKENDS, convolve_n, total_variation
from collrisk.lattice import MixtureSpec, discretize_mixture

CASES = (
    ("a=10 b=90 n=100", MixtureSpec(0.1, 10.0, 90.0, 10.0), 100),
    ("a=3 b=20 n=100", MixtureSpec(0.1, 3.0, 20.0, 10.0), 100),
    ("a=3 b=20 n=400", MixtureSpec(0.1, 3.0, 20.0, 10.0), 400),
)


def best_time(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    if "cython" not in BACKENDS:
        print("compiled kernel not built; only the fallback is available")
    print(f"{'case':<18} {'support':>8} {'output':>9} " + " ".join(f"{b + ' s':>10}" for b in BACKENDS)
          + f" {'speedup':>8} {'tv_gap':>9}")
    for label, spec, n in CASES:
        base = discretize_mixture(spec, 1e-12)
        results, timings = {}, {}
        for name in BACKENDS:
            results[name] = convolve_n(base, n, backend=name).dist
            timings[name] = best_time(lambda: convolve_n(base, n, backend=name), args.repeat)
        speedup = timings["python"] / timings["cython"] if "cython" in timings else float("nan")
        gap = total_variation(results["python"], results["cython"]) if "cython" in results else 0.0
        cols = " ".join(f"{timings[b]:>10.4f}" for b in BACKENDS)
        print(f"{label:<18} {base.size:>8} {results['python'].size:>9} {cols} {speedup:>8.1f} {gap:>9.1e}")


if __name__ == "__main__":
    main()
