"""Deterministic voxel bucketing of a scan's points.

Every point lands in the voxel ``floor(p / voxel_size)`` (true floor, so
negative coordinates round down). The resulting index is immutable,
iterates buckets in lexicographic coordinate order, and keeps point
indices within a bucket in ascending scan order, so everything downstream
is reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

import numpy as np

from . import kernels
from .errors import ConfigError
from .lidar_io import PointCloud

VoxelCoord = tuple[int, int, int]

# Default edge lengths in meters: a fine grid for training-side bookkeeping
# and a coarse one for selection (coarse voxels are more robust to noise and
# sparsity as annotation units). Both are config-overridable.
DEFAULT_TRAIN_VOXEL_SIZE = 0.05
DEFAULT_SELECTION_VOXEL_SIZE = 0.25


def _fix_boundary_floors(xyz: np.ndarray, voxel_size: float, coords: np.ndarray) -> np.ndarray:
    """Correct floor(p / size) where float division may have crossed an integer.

    IEEE division rounds to nearest, so a quotient a hair below an integer
    can round up to it (and vice versa), off-by-one-ing the floor. Only
    quotients within rounding distance of an integer can be affected; those
    few are recomputed with exact rational arithmetic on the stored values.
    """
    q = xyz.astype(np.float64, copy=False) / float(voxel_size)
    nearest = np.rint(q)
    suspect = np.abs(q - nearest) <= 4.0 * np.spacing(np.abs(q))
    if not suspect.any():
        return coords
    coords = coords.copy()
    size = Fraction(float(voxel_size))
    for i, j in zip(*np.nonzero(suspect)):
        k = int(nearest[i, j])
        # on-boundary points belong to the higher-indexed voxel (floor is k)
        coords[i, j] = k if Fraction(float(xyz[i, j])) >= k * size else k - 1
    return coords


def voxel_of(point, voxel_size: float) -> VoxelCoord:
    """Voxel coordinate of one 3-D point: componentwise true floor(p / size).

    True floor of the exact quotient of the stored values, so points lying
    exactly on a grid plane land in the higher-indexed voxel.
    """
    if voxel_size <= 0:
        raise ConfigError(f"voxel size must be > 0, got {voxel_size}")
    p = np.asarray(point, dtype=np.float64).reshape(1, 3)
    if not np.isfinite(p).all():
        raise ConfigError("point coordinates must be finite")
    coords = kernels.floor_coords(p, float(voxel_size))
    coords = _fix_boundary_floors(p, voxel_size, coords)
    a, b, c = coords[0]
    return (int(a), int(b), int(c))


@dataclass(frozen=True)
class VoxelIndex:
    """CSR-style grouping of point indices by voxel coordinate.

    ``coords[m]`` is the m-th bucket's voxel coordinate (lexicographically
    sorted); its point indices are ``order[offsets[m]:offsets[m+1]]``,
    strictly increasing. Buckets partition 0..n_points-1 and none is empty.
    """

    voxel_size: float
    coords: np.ndarray  # (M, 3) int64, lexicographically sorted
    offsets: np.ndarray  # (M + 1,) int64
    order: np.ndarray  # (N,) int64
    _row_of: dict[VoxelCoord, int] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        for name in ("coords", "offsets", "order"):
            getattr(self, name).setflags(write=False)
        rows = {tuple(map(int, c)): m for m, c in enumerate(self.coords)}
        object.__setattr__(self, "_row_of", rows)

    def __len__(self) -> int:
        return self.coords.shape[0]

    @property
    def n_points(self) -> int:
        return self.order.shape[0]

    def sizes(self) -> np.ndarray:
        return np.diff(self.offsets)

    def coord_at(self, row: int) -> VoxelCoord:
        a, b, c = self.coords[row]
        return (int(a), int(b), int(c))

    def row_of(self, coord: VoxelCoord) -> int:
        return self._row_of[tuple(int(v) for v in coord)]

    def __contains__(self, coord) -> bool:
        return tuple(int(v) for v in coord) in self._row_of

    def bucket(self, coord: VoxelCoord) -> np.ndarray:
        """Point indices contained in the given voxel (ascending)."""
        m = self.row_of(coord)
        return self.order[self.offsets[m] : self.offsets[m + 1]]

    def bucket_at(self, row: int) -> np.ndarray:
        return self.order[self.offsets[row] : self.offsets[row + 1]]

    def items(self) -> Iterator[tuple[VoxelCoord, np.ndarray]]:
        """Iterate (coord, point indices) in lexicographic coord order."""
        for m in range(len(self)):
            yield self.coord_at(m), self.bucket_at(m)


def build_index(cloud: PointCloud | np.ndarray, voxel_size: float) -> VoxelIndex:
    """Bucket a scan's points into voxels of edge length ``voxel_size``."""
    if voxel_size <= 0:
        raise ConfigError(f"voxel size must be > 0, got {voxel_size}")
    xyz = cloud.xyz if isinstance(cloud, PointCloud) else np.asarray(cloud)[:, :3]
    coords = kernels.floor_coords(np.ascontiguousarray(xyz), float(voxel_size))
    coords = _fix_boundary_floors(xyz, voxel_size, coords)
    # lexsort: last key is primary; stable, so ascending point order survives
    perm = np.lexsort((coords[:, 2], coords[:, 1], coords[:, 0]))
    sorted_coords = coords[perm]
    if len(perm) == 1:
        starts = np.array([0], dtype=np.int64)
    else:
        changed = np.any(sorted_coords[1:] != sorted_coords[:-1], axis=1)
        starts = np.concatenate(([0], np.flatnonzero(changed) + 1)).astype(np.int64)
    offsets = np.concatenate((starts, [len(perm)])).astype(np.int64)
    return VoxelIndex(
        voxel_size=float(voxel_size),
        coords=sorted_coords[starts].copy(),
        offsets=offsets,
        order=perm.astype(np.int64),
    )
