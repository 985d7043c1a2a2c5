"""Binary scan/label file IO and dataset-to-task class mapping.

Scan files (``.bin``) follow the KITTI convention: N consecutive points,
each four little-endian float32 values ``(x, y, z, intensity)``. Label
files (``.label``) hold N little-endian uint32 values whose low 16 bits
are the semantic id (the high 16 bits carry an instance id and are
discarded). Class-map files are UTF-8 text, one ``<raw_id> <train_id>
<name>`` triple per line, ``#`` starting a comment.

All returned objects are immutable after construction and safe to share
across workers; the readers are pure functions of the file bytes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigError, CorruptPointError, MalformedFileError, UsageError

POINT_RECORD_BYTES = 16  # 4 float32
LABEL_RECORD_BYTES = 4  # 1 uint32
IGNORE_ID = 0

_POINT_DTYPE = np.dtype("<f4")
_LABEL_DTYPE = np.dtype("<u4")


@dataclass(frozen=True)
class PointCloud:
    """One scan: an (N, 4) float32 array of ``x, y, z, intensity`` rows.

    Point order is preserved exactly as read; row index i is the stable
    identity of point i throughout the pipeline.
    """

    data: np.ndarray
    scan_id: str = ""

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        if arr.ndim != 2 or arr.shape[1] != 4:
            raise UsageError(f"point cloud must be (N, 4), got {arr.shape}")
        if arr.shape[0] < 1:
            raise UsageError("point cloud must contain at least one point")
        if not np.isfinite(arr).all():
            bad = int(np.flatnonzero(~np.isfinite(arr).all(axis=1))[0])
            raise CorruptPointError(self.scan_id or "<memory>", bad)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    def __len__(self) -> int:
        return self.data.shape[0]

    @property
    def xyz(self) -> np.ndarray:
        return self.data[:, :3]

    @property
    def intensity(self) -> np.ndarray:
        return self.data[:, 3]


@dataclass(frozen=True)
class LabelSet:
    """Per-point train ids in ``{0..class_count}``; 0 means ignore/unlabeled."""

    labels: np.ndarray
    class_count: int

    def __post_init__(self):
        arr = np.ascontiguousarray(self.labels, dtype=np.int32)
        if arr.ndim != 1:
            raise UsageError(f"labels must be 1-D, got shape {arr.shape}")
        if self.class_count < 1:
            raise UsageError("class_count must be >= 1")
        if arr.size and (arr.min() < 0 or arr.max() > self.class_count):
            raise UsageError(
                f"label ids must lie in 0..{self.class_count}, "
                f"got range {arr.min()}..{arr.max()}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "labels", arr)

    def __len__(self) -> int:
        return self.labels.shape[0]


@dataclass(frozen=True)
class ClassMap:
    """Raw dataset ids -> train ids in ``{0..class_count}`` with names.

    Raw ids absent from the map translate to the ignore id 0. Partial
    vocabularies are allowed: a train id in 1..class_count may have no
    entry at all (cross-dataset tasks).
    """

    entries: tuple[tuple[int, int, str], ...]
    class_count: int
    _lookup: dict[int, int] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        seen: dict[int, int] = {}
        for raw_id, train_id, _name in self.entries:
            if raw_id in seen:
                raise ConfigError(f"duplicate raw id {raw_id} in class map")
            if not 0 <= train_id <= self.class_count:
                raise ConfigError(
                    f"train id {train_id} outside 0..{self.class_count} "
                    f"(raw id {raw_id})"
                )
            seen[raw_id] = train_id
        object.__setattr__(self, "entries", tuple(self.entries))
        object.__setattr__(self, "_lookup", seen)

    def train_id_of(self, raw_id: int) -> int:
        return self._lookup.get(int(raw_id), IGNORE_ID)

    def apply(self, raw_ids: np.ndarray) -> np.ndarray:
        """Map an array of raw ids to train ids (unknown ids -> 0)."""
        out = np.zeros(raw_ids.shape, dtype=np.int32)
        for raw_id, train_id in self._lookup.items():
            if train_id != IGNORE_ID:
                out[raw_ids == raw_id] = train_id
        return out

    def train_class_names(self) -> dict[int, str]:
        """First-seen name per train id (1..class_count), for reporting."""
        names: dict[int, str] = {}
        for _raw, train_id, name in self.entries:
            if train_id != IGNORE_ID and train_id not in names:
                names[train_id] = name
        return names

    @staticmethod
    def identity(class_count: int) -> "ClassMap":
        """Map i -> i for 0..class_count; used to reload written label files."""
        entries = tuple((i, i, f"class_{i}") for i in range(class_count + 1))
        return ClassMap(entries=entries, class_count=class_count)


def normalize_intensity(raw: np.ndarray) -> np.ndarray:
    """Bring intensities into [0, 1].

    Values above 1 are assumed to be on the 0..255 scale and divided by
    255; everything is then clamped to [0, 1]. Datasets disagree on the
    scale, so this is a declared convention, not an inferred one.
    """
    out = np.where(raw > 1.0, raw / np.float32(255.0), raw)
    return np.clip(out, 0.0, 1.0).astype(np.float32)


def read_points(
    path, scan_id: str | None = None, *, layout: str = "kitti", normalize: bool = True
) -> PointCloud:
    """Read a binary scan file.

    ``layout`` is ``"kitti"`` (4 float32 per point) or ``"nuscenes"``
    (5 float32 per point; the trailing ring index is dropped). With
    ``normalize=True`` intensities are normalized via
    :func:`normalize_intensity`.

    Raises :class:`MalformedFileError` if the size is not a positive
    multiple of the record size, :class:`CorruptPointError` on non-finite
    values.
    """
    path = Path(path)
    if layout == "kitti":
        fields = 4
    elif layout == "nuscenes":
        fields = 5
    else:
        raise ConfigError(f"unknown scan layout {layout!r}")
    record = 4 * fields
    raw = path.read_bytes()
    if len(raw) == 0 or len(raw) % record != 0:
        raise MalformedFileError(
            f"{path}: size {len(raw)} is not a positive multiple of {record} bytes"
        )
    flat = np.frombuffer(raw, dtype=_POINT_DTYPE)
    data = flat.reshape(-1, fields)[:, :4]
    finite = np.isfinite(data).all(axis=1)
    if not finite.all():
        raise CorruptPointError(path, int(np.flatnonzero(~finite)[0]))
    data = np.array(data, dtype=np.float32)  # own the memory, drop buffer ref
    if normalize:
        data[:, 3] = normalize_intensity(data[:, 3])
    return PointCloud(data=data, scan_id=scan_id if scan_id is not None else path.stem)


def write_points(cloud: PointCloud, path) -> None:
    """Write a scan as N x 16 bytes; bit-exact inverse of :func:`read_points`."""
    path = Path(path)
    try:
        path.write_bytes(cloud.data.astype(_POINT_DTYPE, copy=False).tobytes())
    except OSError as exc:
        raise OSError(f"failed writing scan to {path}: {exc}") from exc


def read_labels(path, class_map: ClassMap) -> LabelSet:
    """Read a label file and map raw semantic ids to train ids.

    Each uint32 record keeps its low 16 bits as the raw semantic id; the
    high 16 (instance id) are discarded. Raw ids absent from ``class_map``
    become the ignore id 0.
    """
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) == 0 or len(raw) % LABEL_RECORD_BYTES != 0:
        raise MalformedFileError(
            f"{path}: size {len(raw)} is not a positive multiple of "
            f"{LABEL_RECORD_BYTES} bytes"
        )
    values = np.frombuffer(raw, dtype=_LABEL_DTYPE)
    semantic = (values & np.uint32(0xFFFF)).astype(np.int64)
    return LabelSet(labels=class_map.apply(semantic), class_count=class_map.class_count)


def write_labels(labels: LabelSet, path) -> None:
    """Write train ids as uint32 records (low 16 bits, high bits zero)."""
    path = Path(path)
    values = labels.labels.astype(np.int64)
    if values.size and values.max() > 0xFFFF:
        raise UsageError("train ids exceed 16 bits; cannot serialize")
    try:
        path.write_bytes(values.astype(_LABEL_DTYPE).tobytes())
    except OSError as exc:
        raise OSError(f"failed writing labels to {path}: {exc}") from exc


def _parse_class_map(
    text: str, *, class_count: int | None, origin: str
) -> ClassMap:
    entries: list[tuple[int, int, str]] = []
    first_line: dict[int, int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        parts = stripped.split(maxsplit=2)
        if len(parts) != 3:
            raise ConfigError(f"{origin}:{lineno}: expected '<raw_id> <train_id> <name>'")
        try:
            raw_id, train_id = int(parts[0]), int(parts[1])
        except ValueError as exc:
            raise ConfigError(f"{origin}:{lineno}: non-integer id field") from exc
        if raw_id in first_line:
            raise ConfigError(
                f"{origin}:{lineno}: duplicate raw id {raw_id} "
                f"(first seen on line {first_line[raw_id]})"
            )
        first_line[raw_id] = lineno
        entries.append((raw_id, train_id, parts[2]))
    if not entries:
        raise ConfigError(f"{origin}: class map has no entries")
    k = class_count if class_count is not None else max(t for _r, t, _n in entries)
    return ClassMap(entries=tuple(entries), class_count=k)


def load_class_map(path, *, class_count: int | None = None) -> ClassMap:
    """Parse a class-map text file.

    ``class_count`` overrides the inferred K (max train id in the file);
    needed for partial vocabularies whose top class has no entry.
    """
    path = Path(path)
    return _parse_class_map(
        path.read_text(encoding="utf-8"), class_count=class_count, origin=str(path)
    )


# Built-in maps for the four cross-dataset tasks. K is explicit because the
# 7-class nuScenes vocabulary is partial (no raw class maps to train id 7).
BUILTIN_CLASS_MAPS: dict[str, int] = {
    "synlidar_to_19": 19,
    "kitti_to_19": 19,
    "synlidar_to_13": 13,
    "poss_to_13": 13,
    "kitti_to_7": 7,
    "nuscenes_to_7": 7,
}


def builtin_class_map(name: str) -> ClassMap:
    """Load one of the shipped class maps (see ``BUILTIN_CLASS_MAPS``)."""
    if name not in BUILTIN_CLASS_MAPS:
        known = ", ".join(sorted(BUILTIN_CLASS_MAPS))
        raise ConfigError(f"unknown built-in class map {name!r} (known: {known})")
    text = (
        resources.files("annotator.class_maps").joinpath(f"{name}.txt").read_text("utf-8")
    )
    return _parse_class_map(
        text, class_count=BUILTIN_CLASS_MAPS[name], origin=f"builtin:{name}"
    )


def resolve_class_map(spec: str, *, class_count: int | None = None) -> ClassMap:
    """Accept either a built-in map name or a path to a map file."""
    if spec in BUILTIN_CLASS_MAPS:
        return builtin_class_map(spec)
    return load_class_map(spec, class_count=class_count)
