"""Append-only record of selected voxels and their revealed labels.

Persisted as newline-delimited JSON (one self-describing record per line);
the first line is a header carrying the campaign parameters. The file is
the resume token: identical campaigns produce byte-identical journals, and
a resumed run continues the file exactly where it stopped.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import IntegrityError
from .voxelgrid import VoxelCoord

JOURNAL_VERSION = 1


@dataclass(frozen=True)
class JournalEntry:
    scan_id: str
    round_index: int
    coord: VoxelCoord
    strategy: str
    score: float
    point_indices: tuple[int, ...]
    revealed_labels: tuple[int, ...]

    def __post_init__(self):
        if len(self.point_indices) != len(self.revealed_labels):
            raise IntegrityError(
                f"{self.scan_id}@{self.coord}: {len(self.revealed_labels)} labels "
                f"for {len(self.point_indices)} points"
            )
        object.__setattr__(self, "coord", tuple(int(v) for v in self.coord))
        object.__setattr__(self, "point_indices", tuple(int(v) for v in self.point_indices))
        object.__setattr__(self, "revealed_labels", tuple(int(v) for v in self.revealed_labels))

    def to_json(self) -> str:
        return json.dumps(
            {
                "kind": "entry",
                "scan_id": self.scan_id,
                "round": self.round_index,
                "coord": list(self.coord),
                "strategy": self.strategy,
                "score": self.score,
                "point_indices": list(self.point_indices),
                "revealed_labels": list(self.revealed_labels),
            },
            separators=(",", ":"),
        )

    @staticmethod
    def from_json(record: dict) -> "JournalEntry":
        return JournalEntry(
            scan_id=record["scan_id"],
            round_index=record["round"],
            coord=tuple(record["coord"]),
            strategy=record["strategy"],
            score=record["score"],
            point_indices=tuple(record["point_indices"]),
            revealed_labels=tuple(record["revealed_labels"]),
        )


class Journal:
    """In-memory entry list with optional write-through persistence.

    (scan_id, coord) pairs are unique across the whole campaign; appends
    that violate this raise :class:`IntegrityError`. When ``path`` is set,
    every append is written and flushed immediately, so the file never
    lags the accepted state by more than nothing.
    """

    def __init__(self, header: dict, path: str | Path | None = None):
        self.header = dict(header)
        self.entries: list[JournalEntry] = []
        self._seen: set[tuple[str, VoxelCoord]] = set()
        self._path = Path(path) if path is not None else None
        self._fh = None
        if self._path is not None:
            exists = self._path.exists() and self._path.stat().st_size > 0
            self._fh = open(self._path, "a", encoding="utf-8")
            if not exists:
                self._fh.write(self._header_line() + "\n")
                self._fh.flush()

    def _header_line(self) -> str:
        payload = {"kind": "header", "version": JOURNAL_VERSION}
        payload.update(self.header)
        return json.dumps(payload, separators=(",", ":"))

    def append(self, entry: JournalEntry) -> None:
        key = (entry.scan_id, entry.coord)
        if key in self._seen:
            raise IntegrityError(f"voxel {entry.coord} of {entry.scan_id} selected twice")
        self.entries.append(entry)
        self._seen.add(key)
        if self._fh is not None:
            self._fh.write(entry.to_json() + "\n")
            self._fh.flush()

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def rounds_completed(self) -> int:
        return max((e.round_index for e in self.entries), default=0)

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    @classmethod
    def resume(cls, path: str | Path, expected_header: dict) -> "Journal":
        """Reopen an existing journal for appending.

        Validates the stored campaign parameters against ``expected_header``
        and rewrites the file from its parsed records first, which drops any
        partial trailing line left by an interrupted writer (serialization
        is deterministic, so an intact file is rewritten byte-identically).
        """
        path = Path(path)
        header, entries = cls.load(path)
        stored = {k: v for k, v in header.items() if k not in ("kind", "version")}
        if stored != dict(expected_header):
            raise IntegrityError(
                f"{path}: journal was written by a different campaign "
                f"(stored {stored}, expected {dict(expected_header)})"
            )
        journal = cls(expected_header)
        for entry in entries:
            journal.append(entry)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(journal._header_line() + "\n")
            for entry in journal.entries:
                fh.write(entry.to_json() + "\n")
        journal._path = path
        journal._fh = open(path, "a", encoding="utf-8")
        return journal

    @staticmethod
    def load(path: str | Path) -> tuple[dict, list[JournalEntry]]:
        """Read a journal file back; tolerates one truncated trailing line.

        Returns (header, entries). A missing or malformed header raises
        :class:`IntegrityError`.
        """
        path = Path(path)
        lines = path.read_text(encoding="utf-8").splitlines()
        if not lines:
            raise IntegrityError(f"{path}: empty journal file")
        try:
            header = json.loads(lines[0])
        except json.JSONDecodeError as exc:
            raise IntegrityError(f"{path}: unreadable journal header") from exc
        if header.get("kind") != "header":
            raise IntegrityError(f"{path}: first record is not a journal header")
        entries: list[JournalEntry] = []
        for i, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError:
                if i == len(lines):  # interrupted mid-write; drop the tail
                    break
                raise IntegrityError(f"{path}:{i}: unreadable journal record")
            if record.get("kind") != "entry":
                raise IntegrityError(f"{path}:{i}: unexpected record kind")
            entries.append(JournalEntry.from_json(record))
        return header, entries
