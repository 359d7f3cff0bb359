"""
Append-only aggregate store.

Records are JSON lines grouped into segment files ``<root>/<scale>/<yyyymmdd>.log``
(UTC day of the record's time key). Only two kinds exist, WindowStats and
Baseline snapshots; raw events have no record kind and cannot be written.
"""

from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import IO, Iterator

from .baseline import BaselineSnapshot
from .ingest import Direction
from .rollup import WindowStat

logger = logging.getLogger(__name__)

DAY_MS = 86_400_000


class RecordKind(str, Enum):
    WINDOW_STAT = "window_stat"
    BASELINE = "baseline"


class RecordValidationError(ValueError):
    pass


class RangeError(ValueError):
    pass


@dataclass(frozen=True)
class SnapshotRecord:
    record_kind: RecordKind
    payload: WindowStat | BaselineSnapshot
    write_ts_ms: int
    seq: int | None = None

    @property
    def scale(self) -> str:
        return self.payload.scale

    @property
    def time_key(self) -> int:
        """window_start_ms for stats; the last absorbed window for baselines."""
        if self.record_kind is RecordKind.WINDOW_STAT:
            return self.payload.window_start_ms
        return self.payload.last_updated_ms or 0

    def to_line(self) -> str:
        return json.dumps({"seq": self.seq, "kind": self.record_kind.value,
                           "write_ts_ms": self.write_ts_ms,
                           "payload": self.payload.to_dict()}, separators=(",", ":"))

    @classmethod
    def from_line(cls, line: str) -> "SnapshotRecord":
        d = json.loads(line)
        kind = RecordKind(d["kind"])
        if kind is RecordKind.WINDOW_STAT:
            payload = WindowStat.from_dict(d["payload"])
        else:
            payload = BaselineSnapshot.from_dict(d["payload"])
        return cls(kind, payload, int(d["write_ts_ms"]), d["seq"])


def window_stat_record(stat: WindowStat, write_ts_ms: int) -> SnapshotRecord:
    return SnapshotRecord(RecordKind.WINDOW_STAT, stat, write_ts_ms)


def baseline_record(snap: BaselineSnapshot, write_ts_ms: int) -> SnapshotRecord:
    return SnapshotRecord(RecordKind.BASELINE, snap, write_ts_ms)


def _finite(*xs) -> bool:
    return all(isinstance(x, (int, float)) and math.isfinite(x) for x in xs)


def validate(record: SnapshotRecord) -> None:
    p = record.payload
    kind = record.record_kind
    if kind is RecordKind.WINDOW_STAT:
        if not isinstance(p, WindowStat):
            raise RecordValidationError("window_stat record without a WindowStat payload")
        if not _finite(p.mean, p.variance, p.min_value, p.max_value):
            raise RecordValidationError("non-finite statistic")
        if p.min_value > p.max_value:
            raise RecordValidationError(f"min_value {p.min_value} > max_value {p.max_value}")
        if not p.min_value <= p.mean <= p.max_value:
            raise RecordValidationError("mean outside [min_value, max_value]")
        if p.min_value < 0 or p.variance < 0:
            raise RecordValidationError("negative statistic")
        if p.sample_count < 1:
            raise RecordValidationError("sample_count must be >= 1")
        if p.sample_count == 1 and p.variance != 0:
            raise RecordValidationError("single-sample window with non-zero variance")
    elif kind is RecordKind.BASELINE:
        if not isinstance(p, BaselineSnapshot):
            raise RecordValidationError("baseline record without a BaselineSnapshot payload")
        if p.history_len > p.capacity:
            raise RecordValidationError("history longer than capacity")
        if (p.x_min is None) != (p.x_max is None):
            raise RecordValidationError("x_min and x_max must both be set or both be empty")
        if p.x_min is not None and p.x_min > p.x_max:
            raise RecordValidationError(f"x_min {p.x_min} > x_max {p.x_max}")
        if p.norm_factor_f is not None and not p.norm_factor_f > 0:
            raise RecordValidationError("norm_factor_f must be positive")
    else:
        raise RecordValidationError(f"unknown record kind {kind!r}")
    if not 0 <= p.port <= 65535:
        raise RecordValidationError(f"port {p.port} out of range")
    if not p.scale or "/" in p.scale or p.scale.startswith("."):
        raise RecordValidationError(f"bad scale name {p.scale!r}")


def _day_name(t_ms: int) -> str:
    return datetime.fromtimestamp(t_ms / 1000, tz=timezone.utc).strftime("%Y%m%d")


def _day_start(name: str) -> int:
    d = datetime.strptime(name, "%Y%m%d").replace(tzinfo=timezone.utc)
    return int(d.timestamp() * 1000)


class Store:
    """Single-writer segment store; appends are flushed so readers see them at once."""

    def __init__(self, root: str | os.PathLike, fsync: bool = False):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.fsync = fsync
        self._handles: dict[Path, IO[str]] = {}
        self._next_seq = self._scan_next_seq()

    def _scan_next_seq(self) -> int:
        last = -1
        for rec in self._iter_all():
            last = max(last, rec.seq)
        return last + 1

    def segment_path(self, record: SnapshotRecord) -> Path:
        return self.root / record.scale / f"{_day_name(record.time_key)}.log"

    def append(self, record: SnapshotRecord) -> SnapshotRecord:
        """Validate and append; returns the record stamped with its sequence number."""
        validate(record)
        record = SnapshotRecord(record.record_kind, record.payload, record.write_ts_ms, self._next_seq)
        path = self.segment_path(record)
        fh = self._handles.get(path)
        if fh is None:
            path.parent.mkdir(parents=True, exist_ok=True)
            fh = self._handles[path] = open(path, "a", encoding="utf-8")
        fh.write(record.to_line() + "\n")
        fh.flush()
        if self.fsync:
            os.fsync(fh.fileno())
        self._next_seq += 1
        return record

    def close(self) -> None:
        for fh in self._handles.values():
            fh.close()
        self._handles.clear()

    def __enter__(self) -> "Store":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _segments(self, scale: str | None = None) -> list[Path]:
        if scale is not None:
            return sorted((self.root / scale).glob("*.log"))
        return sorted(self.root.glob("*/*.log"))

    @staticmethod
    def _read(path: Path) -> Iterator[SnapshotRecord]:
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    yield SnapshotRecord.from_line(line)

    def _iter_all(self) -> Iterator[SnapshotRecord]:
        for path in self._segments():
            yield from self._read(path)

    def records(self) -> list[SnapshotRecord]:
        """Every record in append order."""
        return sorted(self._iter_all(), key=lambda r: r.seq)

    def scales(self) -> list[str]:
        return sorted(p.name for p in self.root.iterdir() if p.is_dir())

    def query(self, kind: RecordKind | str, port: int, direction: Direction | str, scale: str,
              time_range: tuple[int, int]) -> list[SnapshotRecord]:
        """Records matching every filter with time key in ``[start, end)``, in time order."""
        start, end = time_range
        if start > end:
            raise RangeError(f"inverted range [{start}, {end})")
        kind = RecordKind(kind)
        direction = Direction(direction)
        out = []
        for path in self._segments(scale):
            day0 = _day_start(path.stem)
            if day0 >= end or day0 + DAY_MS <= start:
                continue
            for rec in self._read(path):
                p = rec.payload
                if (rec.record_kind is kind and p.port == port and p.direction == direction
                        and start <= rec.time_key < end):
                    out.append(rec)
        out.sort(key=lambda r: (r.time_key, r.seq))
        return out
