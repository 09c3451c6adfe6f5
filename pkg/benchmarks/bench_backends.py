"""Compare the compiled and pure-Python kernels on the three hot loops.

Usage: python3 benchmarks/bench_backends.py [--repeats 3]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from qcoreset import _backend, qkernel


def best_of(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def problems(rng):
    cfg = qkernel.FeatureMapConfig(4, 2)
    states = qkernel.feature_states(cfg, rng.uniform(0, np.pi, (300, 4)))
    gram = np.abs(states @ states.conj().T) ** 2
    n = 120
    y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    y[:2] = (1.0, -1.0)
    q = (y[:, None] * y[None, :]) * gram[:n, :n]
    caps = np.full(n, 10.0)
    a = rng.standard_normal((60, 60))
    sym = a + a.T
    return {
        "gram_overlaps (N=300, D=16)": lambda b: b.gram_overlaps(states),
        "smo_solve (N=120)": lambda b: b.smo_solve(q, y, caps, 1e-6, 1_000_000, False),
        "jacobi_eig (60x60)": lambda b: b.jacobi_eig(sym, 1e-12, 100),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()
    backends = _backend.available()
    rng = np.random.default_rng(0)
    print(f"{'kernel':32s}" + "".join(f"{name:>12s}" for name in backends) + (f"{'speedup':>10s}" if len(backends) > 1 else ""))
    for label, run in problems(rng).items():
        times = {name: best_of(lambda b=b: run(b), args.repeats) for name, b in backends.items()}
        row = f"{label:32s}" + "".join(f"{1e3 * t:10.2f}ms" for t in times.values())
        if "cython" in times and "python" in times:
            row += f"{times['python'] / times['cython']:9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
