"""Compiled vs numpy kernels on representative workloads.

    python benchmarks/bench_kernels.py [--repeat 5]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from sqetrack import _pykernels
from sqetrack.gmm import MAX_ITER, TOL, VAR_FLOOR

try:
    from sqetrack import _ckernels
except ImportError:  # pragma: no cover
    _ckernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def workloads(rng):
    unimodal = 0.8 + 0.05 * rng.standard_normal(1600)
    bimodal = np.concatenate([0.3 + 0.03 * rng.standard_normal(2500),
                              1.0 + 0.03 * rng.standard_normal(2500)])
    sizes = rng.integers(5, 40, size=30)
    offsets = np.zeros(31, dtype=np.int64)
    np.cumsum(sizes, out=offsets[1:])
    feats = 0.05 * rng.standard_normal((int(offsets[-1]), 128))
    tasks = np.array([(a, b) for a in range(30) for b in range(a, 30)], dtype=np.int64)
    cost = rng.random((60, 60))
    merge_feats = rng.standard_normal((300, 64))
    first = np.sort(rng.integers(0, 1000, 300)).astype(np.int64)
    last = first + rng.integers(0, 20, 300)
    return {
        "fit2 unimodal n=1600": lambda k: k.fit2(unimodal, TOL, MAX_ITER, VAR_FLOOR),
        "fit2 bimodal n=5000": lambda k: k.fit2(bimodal, TOL, MAX_ITER, VAR_FLOOR),
        f"batch_gaps {len(tasks)} tasks": lambda k: k.batch_gaps(
            feats, offsets, tasks, TOL, MAX_ITER, VAR_FLOOR),
        "lsa 60x60": lambda k: k.lsa(cost),
        "greedy_merge 300 tracklets": lambda k: k.greedy_merge(
            merge_feats.copy(), np.ones(300), first.copy(), last.copy(), 9.0),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"{'workload':32s} {'numpy ms':>10s} {'cython ms':>10s} {'speedup':>8s}")
    for name, run in workloads(rng).items():
        t_py = best_of(lambda: run(_pykernels), args.repeat)
        if _ckernels is None:
            print(f"{name:32s} {t_py * 1e3:10.2f} {'n/a':>10s}")
            continue
        t_c = best_of(lambda: run(_ckernels), args.repeat)
        print(f"{name:32s} {t_py * 1e3:10.2f} {t_c * 1e3:10.2f} {t_py / t_c:7.1f}x")


if __name__ == "__main__":
    main()
