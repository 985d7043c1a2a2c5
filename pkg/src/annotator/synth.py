"""Synthetic LiDAR-like scenes for desk-scale campaigns, demos and tests.

Two families:

- long-tail scenes: three common classes (ground/wall/foliage, ~90% of
  points) and two rare ones (posts/markers, ~10%), spatially structured so
  mixed-class voxels exist at object boundaries;
- Gaussian-mixture scenes: one blob per class, optionally mean-shifted to
  play the role of a source domain.

Coordinates are meters in a scene a few tens of meters across; intensities
are class-correlated so the point classifier has something to learn.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .lidar_io import LabelSet, PointCloud, write_labels, write_points
from .loop import Scan

LONGTAIL_CLASS_NAMES = {1: "ground", 2: "wall", 3: "foliage", 4: "post", 5: "marker"}
LONGTAIL_CLASS_COUNT = 5


def _cloud(scan_id: str, xyz: np.ndarray, intensity: np.ndarray) -> PointCloud:
    data = np.column_stack((xyz, np.clip(intensity, 0.0, 1.0))).astype(np.float32)
    return PointCloud(data=data, scan_id=scan_id)


def uniform_box_cloud(
    rng: np.random.Generator,
    n: int = 1000,
    extent: float | tuple[float, float, float] = 10.0,
    scan_id: str = "box",
) -> PointCloud:
    """Points uniform in [-extent, extent] per axis with uniform intensity."""
    ext = np.broadcast_to(np.asarray(extent, dtype=float), (3,))
    xyz = rng.uniform(-ext, ext, size=(n, 3))
    return _cloud(scan_id, xyz, rng.uniform(0.0, 1.0, size=n))


def dense_box_dataset(
    seed: int,
    n_scans: int = 3,
    n_points: int = 2800,
    extent: tuple[float, float, float] = (1.0, 1.0, 0.5),
    class_count: int = 3,
    prefix: str = "box",
) -> list[Scan]:
    """Densely and uniformly filled boxes with random labels.

    Dense enough that voxel occupancy grows steeply with voxel size, which
    is what point-budget round-count comparisons need.
    """
    rng = np.random.default_rng(seed)
    scans = []
    for i in range(n_scans):
        cloud = uniform_box_cloud(rng, n_points, extent, scan_id=f"{prefix}_{i:04d}")
        labels = rng.integers(1, class_count + 1, n_points).astype(np.int32)
        scans.append(
            Scan(
                scan_id=cloud.scan_id,
                cloud=cloud,
                labels=LabelSet(labels=labels, class_count=class_count),
            )
        )
    return scans


def longtail_scene(
    rng: np.random.Generator,
    scan_id: str,
    n_points: int = 1500,
    extent: float = 8.0,
    intensity_shift: float = 0.0,
) -> Scan:
    """One long-tail scene; ``intensity_shift`` perturbs the class intensities
    (used to fake a shifted source domain)."""
    counts = {
        1: int(n_points * 0.45),
        2: int(n_points * 0.25),
        3: int(n_points * 0.20),
        4: int(n_points * 0.06),
    }
    counts[5] = n_points - sum(counts.values())
    xyz_parts, intensity_parts, label_parts = [], [], []

    def emit(label: int, xyz: np.ndarray, base_intensity: float, spread: float):
        n = xyz.shape[0]
        xyz_parts.append(xyz)
        intensity_parts.append(base_intensity + intensity_shift + rng.normal(0.0, spread, n))
        label_parts.append(np.full(n, label, dtype=np.int32))

    # ground: a rough plane covering the scene
    n = counts[1]
    ground = np.column_stack(
        (
            rng.uniform(-extent, extent, n),
            rng.uniform(-extent, extent, n),
            rng.normal(0.0, 0.04, n),
        )
    )
    emit(1, ground, 0.35, 0.05)

    # walls: vertical slabs along two sides
    n = counts[2]
    side = rng.integers(0, 2, n)
    walls = np.column_stack(
        (
            np.where(side == 0, rng.uniform(-extent, extent, n), -extent + rng.normal(0, 0.05, n)),
            np.where(side == 0, extent + rng.normal(0, 0.05, n), rng.uniform(-extent, extent, n)),
            rng.uniform(0.0, 2.5, n),
        )
    )
    emit(2, walls, 0.20, 0.05)

    # foliage: a few elevated blobs
    n = counts[3]
    centers = rng.uniform(-extent * 0.6, extent * 0.6, size=(4, 2))
    which = rng.integers(0, len(centers), n)
    foliage = np.column_stack(
        (
            centers[which, 0] + rng.normal(0, 0.8, n),
            centers[which, 1] + rng.normal(0, 0.8, n),
            rng.uniform(2.0, 3.2, n),
        )
    )
    emit(3, foliage, 0.60, 0.05)

    # posts (rare): many thin columns rising from the ground
    n = counts[4]
    n_posts = 12
    post_xy = rng.uniform(-extent * 0.9, extent * 0.9, size=(n_posts, 2))
    which = rng.integers(0, n_posts, n)
    posts = np.column_stack(
        (
            post_xy[which, 0] + rng.normal(0, 0.03, n),
            post_xy[which, 1] + rng.normal(0, 0.03, n),
            rng.uniform(0.0, 1.2, n),
        )
    )
    emit(4, posts, 0.90, 0.03)

    # markers (rare): small clusters lying on the ground
    n = counts[5]
    n_markers = 10
    marker_xy = rng.uniform(-extent * 0.9, extent * 0.9, size=(n_markers, 2))
    which = rng.integers(0, n_markers, n)
    markers = np.column_stack(
        (
            marker_xy[which, 0] + rng.normal(0, 0.08, n),
            marker_xy[which, 1] + rng.normal(0, 0.08, n),
            np.abs(rng.normal(0.05, 0.03, n)),
        )
    )
    emit(5, markers, 0.05, 0.02)

    xyz = np.vstack(xyz_parts)
    intensity = np.concatenate(intensity_parts)
    labels = np.concatenate(label_parts)
    perm = rng.permutation(len(labels))
    return Scan(
        scan_id=scan_id,
        cloud=_cloud(scan_id, xyz[perm], intensity[perm]),
        labels=LabelSet(labels=labels[perm], class_count=LONGTAIL_CLASS_COUNT),
    )


def longtail_dataset(
    seed: int,
    n_scans: int = 6,
    n_points: int = 1500,
    intensity_shift: float = 0.0,
    prefix: str = "scan",
    extent: float = 8.0,
) -> list[Scan]:
    rng = np.random.default_rng(seed)
    return [
        longtail_scene(
            rng, f"{prefix}_{i:04d}", n_points, extent=extent, intensity_shift=intensity_shift
        )
        for i in range(n_scans)
    ]


def gaussian_mixture_scene(
    rng: np.random.Generator,
    scan_id: str,
    class_count: int = 4,
    n_points: int = 3000,
    shift: float = 0.0,
    spread: float = 0.32,
    radius: float = 0.8,
) -> Scan:
    """One blob per class on a circle, dense enough that 0.25 m voxels hold
    several points and neighboring blobs genuinely overlap.

    ``shift`` translates every blob (a simple domain shift); intensities
    are class-specific with noise.
    """
    angles = 2.0 * np.pi * np.arange(class_count) / class_count
    centers = np.column_stack(
        (
            radius * np.cos(angles) + shift,
            radius * np.sin(angles) + shift,
            0.3 * np.arange(class_count),
        )
    )
    labels = rng.integers(1, class_count + 1, n_points).astype(np.int32)
    xyz = centers[labels - 1] + rng.normal(0.0, spread, size=(n_points, 3))
    intensity = (labels / (class_count + 1.0)) + rng.normal(0.0, 0.05, n_points)
    return Scan(
        scan_id=scan_id,
        cloud=_cloud(scan_id, xyz, intensity),
        labels=LabelSet(labels=labels, class_count=class_count),
    )


def gaussian_dataset(
    seed: int,
    n_scans: int = 4,
    class_count: int = 4,
    n_points: int = 3000,
    shift: float = 0.0,
    prefix: str = "gm",
) -> list[Scan]:
    rng = np.random.default_rng(seed)
    return [
        gaussian_mixture_scene(rng, f"{prefix}_{i:04d}", class_count, n_points, shift=shift)
        for i in range(n_scans)
    ]


def write_dataset(scans: list[Scan], out_dir, class_names: dict[int, str] | None = None) -> Path:
    """Write scans/labels as .bin/.label plus a class map and manifest."""
    out_dir = Path(out_dir)
    (out_dir / "scans").mkdir(parents=True, exist_ok=True)
    (out_dir / "labels").mkdir(parents=True, exist_ok=True)
    class_count = scans[0].labels.class_count
    names = class_names or {k: f"class_{k}" for k in range(1, class_count + 1)}
    for scan in scans:
        write_points(scan.cloud, out_dir / "scans" / f"{scan.scan_id}.bin")
        write_labels(scan.labels, out_dir / "labels" / f"{scan.scan_id}.label")
    map_lines = [f"{k} {k} {names.get(k, f'class_{k}')}" for k in sorted(names)]
    (out_dir / "classmap.txt").write_text("\n".join(map_lines) + "\n", encoding="utf-8")
    manifest = {
        "scan_count": len(scans),
        "class_count": class_count,
        "class_map": "classmap.txt",
        "scans": "scans",
        "labels": "labels",
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", "utf-8")
    return out_dir
