"""Compare the compiled predictor kernel with the NumPy fallback.

Usage::

    python benchmarks/bench_kernels.py [--repeat 20] [--full-run]

Prints per-call timings for several batch sizes and degrees and, with
``--full-run``, the wall time of a complete Sod shock-tube run per backend.
"""
import argparse
import time

import numpy as np

from alelts import _kernels_py, kernels
from alelts.basis import build_tables
from alelts.systems import Euler, IdealMHD

try:
    from alelts import _kernels as compiled
except ImportError:
    compiled = None


def batch(system, M, nc, rng):
    if system.name == "euler":
        mean = np.array([1.0, 0.3, 2.5])
    else:
        mean = system.to_conserved(np.array([1.0, 0.1, 0.9, -1.0, 1.0, 3.5, -3.2, 3.8, 0.0]))
    w = np.zeros((nc, M + 1, system.nvar))
    w[:, 0] = mean * (1.0 + 0.1 * rng.random((nc, 1)))
    w[:, 1] = 0.02 * rng.standard_normal((nc, system.nvar)) * mean
    x_left = 0.01 * np.arange(nc)
    return w, x_left, np.full(nc, 0.01), np.full(nc, 0.002)


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def kernel_table(repeat):
    rng = np.random.default_rng(1)
    print(f"{'system':>7} {'M':>2} {'batch':>6} {'numpy [ms]':>11} {'compiled [ms]':>14} {'speedup':>8}")
    for system, velocity in ((Euler(1.4), "fluid-u"), (IdealMHD(5.0 / 3.0, 2.0), "fluid-u")):
        for M in (2, 4):
            tables = build_tables(M)
            for nc in (1, 8, 64):
                args = batch(system, M, nc, rng) + (system, tables, velocity, 1e-11, 100)
                t_py = best_of(lambda: _kernels_py.predictor(*args), repeat)
                if compiled is None:
                    print(f"{system.name:>7} {M:>2} {nc:>6} {1e3 * t_py:11.3f} {'n/a':>14}")
                    continue
                t_c = best_of(lambda: compiled.predictor(*args), repeat)
                print(f"{system.name:>7} {M:>2} {nc:>6} {1e3 * t_py:11.3f} {1e3 * t_c:14.3f} {t_py / t_c:8.1f}")


def full_run():
    from alelts.config import parse_config
    from alelts.studies import run

    cfg = parse_config(system="euler", case="rp1")
    backends = [("numpy", _kernels_py.predictor)]
    if compiled is not None:
        backends.append(("compiled", compiled.predictor))
    saved = kernels.predictor
    try:
        for name, fn in backends:
            kernels.predictor = fn
            t0 = time.perf_counter()
            report, _, _ = run(cfg)
            print(f"Sod LTS N=200 with {name:>8} predictor: {time.perf_counter() - t0:6.2f} s "
                  f"({report.updates} updates)")
    finally:
        kernels.predictor = saved


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=20)
    parser.add_argument("--full-run", action="store_true")
    args = parser.parse_args()
    print(f"active backend: {kernels.BACKEND}")
    kernel_table(args.repeat)
    if args.full_run:
        full_run()


if __name__ == "__main__":
    main()
