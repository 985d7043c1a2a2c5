"""Voxel scoring under the four acquisition strategies and per-scan selection.

Strategies:

- ``random``  — uniform draw among eligible voxels (seeded).
- ``entropy`` — per-point Shannon entropy of the softmax row, voxel score is
  the max over contained points, highest voxel wins.
- ``margin``  — per-point gap between the two largest softmax scores,
  aggregated per voxel (``max`` by default, see ``margin_aggregate``),
  lowest voxel wins.
- ``vcd``     — voxel confusion degree: Shannon entropy of the voxel's
  predicted-class histogram, highest wins. High VCD marks voxels whose
  points are predicted to belong to many different classes.

Natural logarithm throughout; the log base only rescales scores and never
changes a selection. All scoring is pure and deterministic; ties are broken
toward the lexicographically smallest voxel coordinate.
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigError, MalformedFileError, UsageError
from .voxelgrid import VoxelCoord, VoxelIndex

STRATEGIES = ("random", "entropy", "margin", "vcd")
ROW_SUM_TOLERANCE = 1e-5
PREDICTION_MAGIC = b"APRD"

_RANGE_SLACK = 1e-9  # float roundoff allowance before range checks trip


@dataclass(frozen=True)
class Predictions:
    """Per-point class probability rows (N x K), rows summing to 1.

    ``source`` tags where the rows came from (``"file"`` or ``"toy-learner"``).
    """

    probs: np.ndarray
    source: str = "toy-learner"

    def __post_init__(self):
        arr = np.ascontiguousarray(self.probs, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] < 1:
            raise UsageError(f"prediction matrix must be (N, K), got {arr.shape}")
        if not np.isfinite(arr).all():
            raise UsageError("prediction matrix contains non-finite values")
        if arr.min() < -_RANGE_SLACK or arr.max() > 1.0 + _RANGE_SLACK:
            raise UsageError("prediction entries must lie in [0, 1]")
        sums = arr.sum(axis=1)
        if np.abs(sums - 1.0).max() > ROW_SUM_TOLERANCE:
            bad = int(np.abs(sums - 1.0).argmax())
            raise UsageError(
                f"prediction row {bad} sums to {sums[bad]:.8f}, "
                f"outside 1 +/- {ROW_SUM_TOLERANCE}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "probs", arr)

    def __len__(self) -> int:
        return self.probs.shape[0]

    @property
    def class_count(self) -> int:
        return self.probs.shape[1]


@dataclass(frozen=True)
class VoxelScore:
    coord: VoxelCoord
    value: float
    strategy: str


def pseudo_labels(predictions: Predictions) -> np.ndarray:
    """Argmax class id (1..K) per row; ties resolve to the lowest class id."""
    return kernels.argmax_labels(predictions.probs)


def point_entropy(row) -> float:
    """Shannon entropy of one probability row, natural log, 0*ln0 = 0."""
    r = np.asarray(row, dtype=np.float64).reshape(1, -1)
    return float(kernels.point_entropies(r)[0])


def point_margin(row) -> float:
    """Largest minus second-largest probability of one row."""
    r = np.asarray(row, dtype=np.float64).reshape(1, -1)
    if r.shape[1] < 2:
        raise ConfigError("margin requires at least two classes")
    return float(kernels.point_margins(r)[0])


def _check_range(values: np.ndarray, low: float, high: float, what: str) -> np.ndarray:
    if values.size and (values.min() < low - _RANGE_SLACK or values.max() > high + _RANGE_SLACK):
        raise AssertionError(
            f"{what} score outside [{low}, {high}]: "
            f"range {values.min()}..{values.max()}"
        )
    return np.clip(values, low, high)


def score_buckets(
    index: VoxelIndex,
    strategy: str,
    predictions: Predictions | None = None,
    labels: np.ndarray | None = None,
    *,
    margin_aggregate: str = "max",
) -> np.ndarray:
    """Score every bucket of ``index``; returns one value per bucket.

    ``entropy``/``margin`` need ``predictions``; ``vcd`` needs ``labels``
    (1-based pseudo labels, computed from ``predictions`` when absent).
    Entropy and VCD values lie in [0, ln K], margins in [0, 1].
    """
    if strategy == "entropy":
        if predictions is None:
            raise UsageError("entropy scoring requires predictions")
        per_point = kernels.point_entropies(predictions.probs)
        values = kernels.bucket_max(per_point, index.order, index.offsets)
        return _check_range(values, 0.0, np.log(predictions.class_count), "entropy")
    if strategy == "margin":
        if predictions is None:
            raise UsageError("margin scoring requires predictions")
        if predictions.class_count < 2:
            raise ConfigError("margin requires at least two classes")
        per_point = kernels.point_margins(predictions.probs)
        if margin_aggregate == "max":
            values = kernels.bucket_max(per_point, index.order, index.offsets)
        elif margin_aggregate == "min":
            values = -kernels.bucket_max(-per_point, index.order, index.offsets)
        else:
            raise ConfigError(f"margin_aggregate must be 'max' or 'min', got {margin_aggregate!r}")
        return _check_range(values, 0.0, 1.0, "margin")
    if strategy == "vcd":
        if labels is None:
            if predictions is None:
                raise UsageError("vcd scoring requires predictions or pseudo labels")
            labels = pseudo_labels(predictions)
        labels = np.ascontiguousarray(labels, dtype=np.int32)
        if labels.shape[0] != index.n_points:
            raise UsageError("pseudo-label count does not match the scan")
        class_count = int(labels.max())
        values = kernels.bucket_label_entropy(labels, index.order, index.offsets, class_count)
        return _check_range(values, 0.0, np.log(max(class_count, 2)), "vcd")
    raise ConfigError(f"strategy {strategy!r} has no bucket scores")


def score_entropy(index: VoxelIndex, coord: VoxelCoord, predictions: Predictions) -> VoxelScore:
    """Entropy score of one voxel: max point entropy inside it."""
    rows = predictions.probs[index.bucket(coord)]
    value = float(kernels.point_entropies(rows).max())
    _check_range(np.array([value]), 0.0, np.log(predictions.class_count), "entropy")
    return VoxelScore(coord=coord, value=value, strategy="entropy")


def score_margin(
    index: VoxelIndex,
    coord: VoxelCoord,
    predictions: Predictions,
    *,
    aggregate: str = "max",
) -> VoxelScore:
    """Margin score of one voxel (``aggregate`` over its points' margins)."""
    if predictions.class_count < 2:
        raise ConfigError("margin requires at least two classes")
    margins = kernels.point_margins(predictions.probs[index.bucket(coord)])
    value = float(margins.max() if aggregate == "max" else margins.min())
    _check_range(np.array([value]), 0.0, 1.0, "margin")
    return VoxelScore(coord=coord, value=value, strategy="margin")


def score_vcd(index: VoxelIndex, coord: VoxelCoord, labels: np.ndarray) -> VoxelScore:
    """Voxel confusion degree of one voxel from 1-based pseudo labels."""
    bucket = index.bucket(coord)
    _, counts = np.unique(np.asarray(labels)[bucket], return_counts=True)
    frac = counts / counts.sum()
    value = float(-(frac * np.log(frac)).sum())
    return VoxelScore(coord=coord, value=value, strategy="vcd")


def eligible_rows(
    index: VoxelIndex,
    excluded: set[VoxelCoord] | frozenset[VoxelCoord] = frozenset(),
    min_points: int = 1,
) -> np.ndarray:
    """Bucket rows that may still be selected, in lexicographic order."""
    sizes = index.sizes()
    rows = [
        m
        for m in range(len(index))
        if sizes[m] >= min_points and index.coord_at(m) not in excluded
    ]
    return np.asarray(rows, dtype=np.int64)


def select_voxel(
    index: VoxelIndex,
    predictions: Predictions | None,
    strategy: str,
    excluded: set[VoxelCoord] | frozenset[VoxelCoord] = frozenset(),
    seed: int | np.random.SeedSequence | None = None,
    *,
    min_points: int = 1,
    margin_aggregate: str = "max",
) -> VoxelScore | None:
    """Pick this scan's winning voxel under ``strategy``.

    Returns None when no eligible bucket remains. Entropy and VCD pick the
    highest score, margin the lowest; ties go to the lexicographically
    smallest coordinate. ``random`` draws uniformly from the eligible
    buckets using ``seed`` and reports score 0.
    """
    if strategy not in STRATEGIES:
        raise ConfigError(f"unknown strategy {strategy!r} (choose from {STRATEGIES})")
    rows = eligible_rows(index, excluded, min_points)
    if rows.size == 0:
        return None
    if strategy == "random":
        rng = np.random.default_rng(seed)
        row = int(rows[rng.integers(rows.size)])
        return VoxelScore(coord=index.coord_at(row), value=0.0, strategy="random")
    if predictions is None:
        raise UsageError(f"strategy {strategy!r} requires predictions")
    if len(predictions) != index.n_points:
        raise UsageError("prediction row count does not match the scan")
    values = score_buckets(
        index, strategy, predictions, margin_aggregate=margin_aggregate
    )[rows]
    # rows are lexicographically ordered and argmin/argmax return the first
    # occurrence, which realizes the smallest-coordinate tie rule
    pick = int(np.argmin(values) if strategy == "margin" else np.argmax(values))
    row = int(rows[pick])
    return VoxelScore(coord=index.coord_at(row), value=float(values[pick]), strategy=strategy)


def write_predictions(predictions: Predictions, path) -> None:
    """Serialize rows as: magic ``APRD``, u32 N, u32 K, N*K float32 (LE)."""
    n, k = predictions.probs.shape
    with open(path, "wb") as fh:
        fh.write(PREDICTION_MAGIC)
        fh.write(struct.pack("<II", n, k))
        fh.write(predictions.probs.astype("<f4").tobytes())


def read_predictions(path) -> Predictions:
    """Read an ``APRD`` prediction file; renormalizes drifted rows with a warning."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 12 or raw[:4] != PREDICTION_MAGIC:
        raise MalformedFileError(f"{path}: missing APRD prediction header")
    n, k = struct.unpack("<II", raw[4:12])
    expected = 12 + 4 * n * k
    if len(raw) != expected:
        raise MalformedFileError(
            f"{path}: expected {expected} bytes for {n}x{k} rows, got {len(raw)}"
        )
    probs = np.frombuffer(raw[12:], dtype="<f4").reshape(n, k).astype(np.float64)
    if probs.min() < 0.0 or not np.isfinite(probs).all():
        raise MalformedFileError(f"{path}: prediction entries outside [0, 1]")
    sums = probs.sum(axis=1)
    drifted = np.abs(sums - 1.0) > ROW_SUM_TOLERANCE
    if drifted.any():
        if (sums[drifted] <= 0.0).any():
            raise MalformedFileError(f"{path}: prediction row sums to zero")
        warnings.warn(
            f"{path}: renormalized {int(drifted.sum())} prediction row(s) "
            "whose probabilities did not sum to 1",
            stacklevel=2,
        )
        probs = probs / sums[:, None]
    return Predictions(probs=probs, source="file")
