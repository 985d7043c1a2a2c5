#!/usr/bin/env python3
"""Benchmark the compiled kernels against the NumPy fallback.

Times the per-point scoring and per-bucket aggregation kernels on a
synthetic scan of configurable size and prints a side-by-side table.

Usage: python benchmarks/bench_kernels.py [--points N] [--classes K] [--repeat R]
"""

import argparse
import time

import numpy as np

from annotator.kernels import _python

try:
    from annotator.kernels import _native
except ImportError:
    _native = None


def bench(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--points", type=int, default=200_000)
    parser.add_argument("--classes", type=int, default=19)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    n, k = args.points, args.classes
    probs = rng.dirichlet(np.ones(k), size=n)
    labels = rng.integers(1, k + 1, size=n).astype(np.int32)
    xyz = rng.uniform(-60, 60, size=(n, 3)).astype(np.float32)

    # CSR buckets from an actual voxelization of the synthetic scan
    from annotator.voxelgrid import build_index
    from annotator.lidar_io import PointCloud

    cloud = PointCloud(
        data=np.column_stack((xyz, rng.uniform(0, 1, n).astype(np.float32))), scan_id="bench"
    )
    idx = build_index(cloud, 0.25)
    per_point = _python.point_entropies(probs)

    cases = {
        "floor_coords": lambda impl: impl.floor_coords(xyz, 0.25),
        "point_entropies": lambda impl: impl.point_entropies(probs),
        "point_margins": lambda impl: impl.point_margins(probs),
        "argmax_labels": lambda impl: impl.argmax_labels(probs),
        "bucket_max": lambda impl: impl.bucket_max(per_point, idx.order, idx.offsets),
        "bucket_label_entropy": lambda impl: impl.bucket_label_entropy(
            labels, idx.order, idx.offsets, k
        ),
    }

    print(f"points={n} classes={k} buckets={len(idx)} repeat={args.repeat}")
    header = f"{'kernel':<22}{'numpy (ms)':>12}{'native (ms)':>13}{'speedup':>9}"
    print(header)
    print("-" * len(header))
    for name, call in cases.items():
        t_py = bench(lambda: call(_python), args.repeat) * 1e3
        if _native is None:
            print(f"{name:<22}{t_py:>12.2f}{'n/a':>13}{'-':>9}")
            continue
        t_nat = bench(lambda: call(_native), args.repeat) * 1e3
        np.testing.assert_allclose(
            np.asarray(call(_python), dtype=np.float64),
            np.asarray(call(_native), dtype=np.float64),
            atol=1e-9,
        )
        print(f"{name:<22}{t_py:>12.2f}{t_nat:>13.2f}{t_py / t_nat:>8.1f}x")


if __name__ == "__main__":
    main()
