"""NumPy implementations of the hot per-point and per-bucket kernels.

This is the fallback backend used when the compiled extension is not
available (or when forced via ``ANNOTATOR_KERNELS=python``). Semantics are
identical to the native backend; only speed differs.
"""

import numpy as np


def floor_coords(xyz: np.ndarray, voxel_size: float) -> np.ndarray:
    """Componentwise true floor of ``xyz / voxel_size`` as int64.

    True floor, not truncation: floor(-0.8) == -1. Division happens in
    float64 regardless of the input dtype.
    """
    q = xyz.astype(np.float64, copy=False) / float(voxel_size)
    return np.floor(q).astype(np.int64)


def point_entropies(probs: np.ndarray) -> np.ndarray:
    """Shannon entropy (natural log) of each probability row, 0*ln0 = 0."""
    p = probs.astype(np.float64, copy=False)
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(p > 0.0, p * np.log(np.where(p > 0.0, p, 1.0)), 0.0)
    return -plogp.sum(axis=1)


def point_margins(probs: np.ndarray) -> np.ndarray:
    """Largest minus second-largest entry of each probability row."""
    p = probs.astype(np.float64, copy=False)
    k = p.shape[1]
    part = np.partition(p, (k - 2, k - 1), axis=1)
    return part[:, -1] - part[:, -2]


def argmax_labels(probs: np.ndarray) -> np.ndarray:
    """1-based argmax class of each row; ties go to the lowest class id."""
    return (probs.argmax(axis=1) + 1).astype(np.int32)


def bucket_max(values: np.ndarray, order: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """Per-bucket maximum of ``values[order]`` over CSR-style ``offsets``."""
    gathered = values.astype(np.float64, copy=False)[order]
    return np.maximum.reduceat(gathered, offsets[:-1])


def bucket_label_entropy(
    labels: np.ndarray, order: np.ndarray, offsets: np.ndarray, class_count: int
) -> np.ndarray:
    """Shannon entropy of the label histogram of each bucket (natural log).

    ``labels`` holds class ids in 1..class_count; buckets are given as CSR
    (``order``/``offsets``) over point indices, no bucket empty.
    """
    n_buckets = len(offsets) - 1
    sizes = np.diff(offsets)
    bucket_of_point = np.repeat(np.arange(n_buckets, dtype=np.int64), sizes)
    keys = bucket_of_point * (class_count + 1) + labels[order]
    counts = np.bincount(keys, minlength=n_buckets * (class_count + 1))
    counts = counts.reshape(n_buckets, class_count + 1).astype(np.float64)
    frac = counts / sizes[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(frac > 0.0, frac * np.log(np.where(frac > 0.0, frac, 1.0)), 0.0)
    return -plogp.sum(axis=1)
