"""Compiled vs pure-Python kernels: wall time and bit-for-bit agreement.

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from fleam import _fallback, kernels, simulator

try:
    from fleam import _kernels
except ImportError:
    _kernels = None


def cases():
    rng = np.random.default_rng(0)
    arrivals = np.sort(rng.uniform(0, 1e5, 100_000))
    return {
        "lv_rk4 (20k steps)": lambda m: m.lv_rk4(1.0, 0.1, 0.1, 1.0, 5.0, 5.0, 1e-3, 20_000),
        "fifo_sojourn (100k jobs)": lambda m: m.fifo_sojourn(arrivals, 0.7),
    }


def delay_sim(impl):
    kernels._impl = impl
    return simulator.compare_delay_models(simulator.AttackScenario(trials=300, seed=0))


def best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if _kernels is None:
        print("compiled extension not built; only the fallback is available")
        return 1
    print(f"{'kernel':28s} {'cython s':>10s} {'python s':>10s} {'speedup':>8s}  identical")
    for name, fn in cases().items():
        a, b = fn(_kernels), fn(_fallback)
        same = all(np.asarray(x).tobytes() == np.asarray(y).tobytes() for x, y in
                   zip(a if isinstance(a, tuple) else (a,), b if isinstance(b, tuple) else (b,)))
        tc = best(lambda: fn(_kernels), args.repeat)
        tp = best(lambda: fn(_fallback), args.repeat)
        print(f"{name:28s} {tc:10.4f} {tp:10.4f} {tp / tc:8.1f}  {same}")
    saved = kernels._impl
    try:
        same = delay_sim(_kernels).summary() == delay_sim(_fallback).summary()
        tc = best(lambda: delay_sim(_kernels), max(1, args.repeat // 2))
        tp = best(lambda: delay_sim(_fallback), max(1, args.repeat // 2))
    finally:
        kernels._impl = saved
    print(f"{'delay simulation (300 trials)':28s} {tc:10.4f} {tp:10.4f} {tp / tc:8.1f}  {same}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
