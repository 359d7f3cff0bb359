"""
Multi-timescale window statistics.

Each scale's windows are built only from the immediately finer scale:
base bins feed minutes, minute means feed hours, hour means feed days and
so on. A window's statistics (mean, population variance, extrema) are
taken over its children's values, so higher scales average averages and
never look at raw counts again.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict
from typing import Iterable, Sequence

from .ingest import CountBin, Direction


class EmptyWindowError(ValueError):
    pass


class LadderViolationError(ValueError):
    pass


@dataclass(frozen=True)
class TimeScale:
    name: str
    children_per_window: int
    width_ms: int
    parent: str | None = None

    def window_start(self, t_ms: int) -> int:
        return t_ms - t_ms % self.width_ms


DEFAULT_LADDER_SPEC: tuple[tuple[str, int], ...] = (
    ("minute", 60),
    ("hour", 60),
    ("day", 24),
    ("month", 30),
)


class Ladder:
    """Ordered scales from ``base`` (one bin) up to the coarsest scale."""

    def __init__(self, bin_width_ms: int = 1000, spec: Sequence[tuple[str, int]] = DEFAULT_LADDER_SPEC):
        if bin_width_ms < 1:
            raise ValueError("bin_width_ms must be >= 1")
        scales = [TimeScale("base", 1, bin_width_ms)]
        seen = {"base"}
        for name, children in spec:
            if children < 1:
                raise ValueError(f"scale {name!r}: children_per_window must be >= 1")
            if name in seen:
                raise ValueError(f"duplicate scale {name!r}")
            seen.add(name)
            prev = scales[-1]
            scales.append(TimeScale(name, int(children), prev.width_ms * int(children), prev.name))
        self.scales: tuple[TimeScale, ...] = tuple(scales)
        self._by_name = {s.name: s for s in self.scales}

    def __getitem__(self, name: str) -> TimeScale:
        try:
            return self._by_name[name]
        except KeyError:
            raise KeyError(f"unknown scale {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def __iter__(self):
        return iter(self.scales)

    @property
    def stat_scales(self) -> tuple[TimeScale, ...]:
        """Scales that produce WindowStats (everything above base), fine to coarse."""
        return self.scales[1:]

    def next_scale(self, name: str) -> TimeScale | None:
        idx = self.scales.index(self[name])
        return self.scales[idx + 1] if idx + 1 < len(self.scales) else None

    def spec(self) -> list[tuple[str, int]]:
        return [(s.name, s.children_per_window) for s in self.stat_scales]


@dataclass(frozen=True)
class WindowStat:
    scale: str
    window_start_ms: int
    port: int
    direction: Direction
    mean: float
    variance: float
    min_value: float
    max_value: float
    sample_count: int
    partial: bool = False

    def to_dict(self) -> dict:
        d = asdict(self)
        d["direction"] = self.direction.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "WindowStat":
        return cls(
            scale=d["scale"],
            window_start_ms=int(d["window_start_ms"]),
            port=int(d["port"]),
            direction=Direction(d["direction"]),
            mean=float(d["mean"]),
            variance=float(d["variance"]),
            min_value=float(d["min_value"]),
            max_value=float(d["max_value"]),
            sample_count=int(d["sample_count"]),
            partial=bool(d.get("partial", False)),
        )


def window_mean(child_values: Sequence[float]) -> float:
    """Arithmetic mean (n_1 + ... + n_t) / t."""
    if len(child_values) == 0:
        raise EmptyWindowError("window has no children")
    return math.fsum(child_values) / len(child_values)


def window_stat(scale: TimeScale, window_start_ms: int, port: int, direction: Direction,
                child_values: Sequence[float], partial: bool | None = None) -> WindowStat:
    t = len(child_values)
    if t == 0:
        raise EmptyWindowError("window has no children")
    if t > scale.children_per_window:
        raise LadderViolationError(
            f"{t} children exceed {scale.name} capacity {scale.children_per_window}")
    lo = min(child_values)
    hi = max(child_values)
    mean = window_mean(child_values)
    # a correctly rounded fsum/t can land one ulp outside the extrema
    mean = min(max(mean, lo), hi)
    var = 0.0 if t == 1 else math.fsum((v - mean) ** 2 for v in child_values) / t
    if partial is None:
        partial = t < scale.children_per_window
    return WindowStat(scale.name, window_start_ms, port, direction,
                      mean, var, float(lo), float(hi), t, partial)


class WindowAccumulator:
    """
    Streaming grouping of ordered children into windows of one scale.

    A window is emitted as soon as its last slot arrives. A window that is
    left behind with missing slots can never complete and is emitted flagged
    partial; only the trailing window is held until :meth:`flush`.
    """

    def __init__(self, scale: TimeScale, child_width_ms: int, port: int, direction: Direction):
        self.scale = scale
        self.child_width_ms = child_width_ms
        self.port = port
        self.direction = direction
        self._start: int | None = None
        self._values: list[float] = []
        self._partial_child = False
        self._last_child: int | None = None

    def push(self, child_start_ms: int, value: float, partial: bool = False) -> list[WindowStat]:
        if self._last_child is not None and child_start_ms <= self._last_child:
            raise LadderViolationError(
                f"{self.scale.name}: child at {child_start_ms} not after {self._last_child}")
        self._last_child = child_start_ms
        out: list[WindowStat] = []
        ws = self.scale.window_start(child_start_ms)
        if self._start is not None and ws != self._start:
            out.append(self._close())
        if self._start is None:
            self._start = ws
        self._values.append(value)
        self._partial_child |= partial
        if child_start_ms + self.child_width_ms >= ws + self.scale.width_ms:
            out.append(self._close())
        return out

    def flush(self) -> list[WindowStat]:
        return [self._close()] if self._start is not None else []

    def _close(self) -> WindowStat:
        partial = self._partial_child or len(self._values) < self.scale.children_per_window
        stat = window_stat(self.scale, self._start, self.port, self.direction, self._values, partial)
        self._start = None
        self._values = []
        self._partial_child = False
        return stat


def rollup_next(finer_stats: Sequence[WindowStat], target_scale: TimeScale,
                child_width_ms: int | None = None, flush: bool = False) -> list[WindowStat]:
    """
    Group scale-k stats into scale-(k+1) windows over their means.

    ``child_width_ms`` defaults to ``target_scale.width_ms / children_per_window``.
    Without ``flush`` an incomplete trailing window is held back.
    """
    if not finer_stats:
        return []
    if target_scale.parent is None:
        raise LadderViolationError(f"{target_scale.name} has no finer parent scale")
    first = finer_stats[0]
    for s in finer_stats:
        if s.scale != target_scale.parent:
            raise LadderViolationError(
                f"input scale {s.scale!r} is not the parent of {target_scale.name!r} ({target_scale.parent!r})")
        if (s.port, s.direction) != (first.port, first.direction):
            raise LadderViolationError("input mixes ports or directions")
    if child_width_ms is None:
        child_width_ms = target_scale.width_ms // target_scale.children_per_window
    acc = WindowAccumulator(target_scale, child_width_ms, first.port, first.direction)
    out: list[WindowStat] = []
    for s in finer_stats:
        out.extend(acc.push(s.window_start_ms, s.mean, s.partial))
    if flush:
        out.extend(acc.flush())
    return out


class SeriesLadder:
    """The full ladder for one (port, direction) series, fed with CountBins."""

    def __init__(self, ladder: Ladder, port: int, direction: Direction):
        self.ladder = ladder
        self.port = port
        self.direction = direction
        scales = ladder.scales
        self._accs = [WindowAccumulator(scales[i], scales[i - 1].width_ms, port, direction)
                      for i in range(1, len(scales))]

    def push_bin(self, b: CountBin) -> list[WindowStat]:
        if (b.port, b.direction) != (self.port, self.direction):
            raise LadderViolationError("bin belongs to another series")
        return self._feed(0, [(b.bin_start_ms, b.count, False)])

    def push_value(self, start_ms: int, value: float) -> list[WindowStat]:
        return self._feed(0, [(start_ms, value, False)])

    def _feed(self, level: int, items) -> list[WindowStat]:
        out: list[WindowStat] = []
        while items and level < len(self._accs):
            emitted: list[WindowStat] = []
            for start, value, partial in items:
                emitted.extend(self._accs[level].push(start, value, partial))
            out.extend(emitted)
            items = [(s.window_start_ms, s.mean, s.partial) for s in emitted]
            level += 1
        return out

    def flush(self) -> list[WindowStat]:
        """Emit every open window, finest first, propagating upward."""
        out: list[WindowStat] = []
        for level, acc in enumerate(self._accs):
            for stat in acc.flush():
                out.append(stat)
                out.extend(self._feed(level + 1, [(stat.window_start_ms, stat.mean, stat.partial)]))
        return out


def rollup_values(values: Iterable[float], ladder: Ladder, port: int = 0,
                  direction: Direction = Direction.INCOMING, start_ms: int = 0,
                  flush: bool = False) -> dict[str, list[WindowStat]]:
    """Run a contiguous base-resolution series through a whole ladder, grouped by scale."""
    series = SeriesLadder(ladder, port, direction)
    width = ladder.scales[0].width_ms
    by_scale: dict[str, list[WindowStat]] = {s.name: [] for s in ladder.stat_scales}
    for i, v in enumerate(values):
        for stat in series.push_value(start_ms + i * width, v):
            by_scale[stat.scale].append(stat)
    if flush:
        for stat in series.flush():
            by_scale[stat.scale].append(stat)
    return by_scale
