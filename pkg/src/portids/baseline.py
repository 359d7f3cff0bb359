"""
Sliding min/max baselines and the [0, 1] normalization they induce.

A Baseline keeps the last ``capacity`` complete WindowStats of one
(port, direction, scale) series. Its extrema over the retained means define
the normal region, widened by ``tolerance`` times the range width, and the
normalization factor f = 1 / |x_max - x_min|.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .ingest import Direction
from .rollup import WindowStat


class FlatSeriesError(ValueError):
    """x_max == x_min, so the normalization factor is undefined."""


class ArgumentOrderError(ValueError):
    pass


class ColdStartError(RuntimeError):
    pass


class BaselineIdentityError(ValueError):
    pass


def norm_factor(x_max: float, x_min: float) -> float:
    if x_max < x_min:
        raise ArgumentOrderError(f"x_max {x_max} < x_min {x_min}")
    if x_max == x_min:
        raise FlatSeriesError(f"flat series at {x_max}")
    return 1.0 / abs(x_max - x_min)


def normalize(x_raw: float, x_min: float, f: float) -> float:
    """f * (x_raw - x_min); deliberately unclamped."""
    if not f > 0:
        raise ValueError(f"normalization factor must be positive, got {f}")
    return f * (x_raw - x_min)


@dataclass(frozen=True)
class NormalRegion:
    low: float
    high: float
    scale: str

    def __post_init__(self):
        if self.low > self.high:
            raise ValueError(f"region low {self.low} > high {self.high}")


def flat_width(x: float) -> float:
    """Surrogate range width used when every retained mean is equal."""
    return max(abs(x), 1.0)


def widen(x_min: float, x_max: float, tolerance: float, scale: str) -> NormalRegion:
    if tolerance < 0:
        raise ValueError("tolerance must be non-negative")
    if x_max < x_min:
        raise ArgumentOrderError(f"x_max {x_max} < x_min {x_min}")
    pad = tolerance * (x_max - x_min) if x_max > x_min else tolerance * flat_width(x_min)
    return NormalRegion(max(0.0, x_min - pad), x_max + pad, scale)


class _RegionMixin:
    x_min: float | None
    x_max: float | None
    tolerance: float
    min_history: int
    scale: str

    @property
    def warm(self) -> bool:
        return self.history_len >= self.min_history

    def normal_region(self) -> NormalRegion:
        if not self.warm:
            raise ColdStartError(
                f"{self.scale} baseline has {self.history_len} of {self.min_history} windows")
        return widen(self.x_min, self.x_max, self.tolerance, self.scale)


@dataclass(frozen=True)
class BaselineSnapshot(_RegionMixin):
    port: int
    direction: Direction
    scale: str
    history_window_starts: tuple[int, ...]
    x_min: float | None
    x_max: float | None
    norm_factor_f: float | None
    tolerance: float
    min_history: int
    capacity: int
    last_updated_ms: int | None

    @property
    def history_len(self) -> int:
        return len(self.history_window_starts)

    def to_dict(self) -> dict:
        return {
            "port": self.port,
            "direction": self.direction.value,
            "scale": self.scale,
            "history_window_starts": list(self.history_window_starts),
            "x_min": self.x_min,
            "x_max": self.x_max,
            "norm_factor_f": self.norm_factor_f,
            "tolerance": self.tolerance,
            "min_history": self.min_history,
            "capacity": self.capacity,
            "last_updated_ms": self.last_updated_ms,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BaselineSnapshot":
        return cls(
            port=int(d["port"]),
            direction=Direction(d["direction"]),
            scale=d["scale"],
            history_window_starts=tuple(int(x) for x in d["history_window_starts"]),
            x_min=d["x_min"],
            x_max=d["x_max"],
            norm_factor_f=d["norm_factor_f"],
            tolerance=float(d["tolerance"]),
            min_history=int(d["min_history"]),
            capacity=int(d["capacity"]),
            last_updated_ms=d["last_updated_ms"],
        )


class Baseline(_RegionMixin):
    """
    Sliding history of window means for one series and scale.

    Extrema are tracked with monotonic deques, so each update is amortized
    O(1) while always equal to a full rescan of the retained history.
    """

    def __init__(self, port: int, direction: Direction, scale: str, capacity: int = 60,
                 tolerance: float = 0.1, min_history: int = 5, accept_partial: bool = False):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        if min_history < 1 or min_history > capacity:
            raise ValueError("min_history must lie in [1, capacity]")
        if tolerance < 0:
            raise ValueError("tolerance must be non-negative")
        self.port = port
        self.direction = Direction(direction)
        self.scale = scale
        self.capacity = capacity
        self.tolerance = tolerance
        self.min_history = min_history
        self.accept_partial = accept_partial
        self.history: deque[WindowStat] = deque()
        self.last_updated_ms: int | None = None
        self._seq = 0
        self._maxq: deque[tuple[int, float]] = deque()
        self._minq: deque[tuple[int, float]] = deque()

    @property
    def history_len(self) -> int:
        return len(self.history)

    @property
    def x_min(self) -> float | None:
        return self._minq[0][1] if self._minq else None

    @property
    def x_max(self) -> float | None:
        return self._maxq[0][1] if self._maxq else None

    @property
    def norm_factor_f(self) -> float | None:
        """f = 1/|x_max - x_min|, or None for an empty or flat history."""
        if not self.history or self.x_max == self.x_min:
            return None
        return norm_factor(self.x_max, self.x_min)

    @property
    def is_flat(self) -> bool:
        return bool(self.history) and self.x_max == self.x_min

    def update(self, stat: WindowStat) -> "Baseline":
        if (stat.port, stat.direction, stat.scale) != (self.port, self.direction, self.scale):
            raise BaselineIdentityError(
                f"stat {stat.port}/{stat.direction.value}/{stat.scale} fed to baseline "
                f"{self.port}/{self.direction.value}/{self.scale}")
        if stat.partial and not self.accept_partial:
            raise ValueError("partial window offered to a baseline that rejects partials")
        seq = self._seq
        self._seq += 1
        m = stat.mean
        self.history.append(stat)
        while self._maxq and self._maxq[-1][1] <= m:
            self._maxq.pop()
        self._maxq.append((seq, m))
        while self._minq and self._minq[-1][1] >= m:
            self._minq.pop()
        self._minq.append((seq, m))
        if len(self.history) > self.capacity:
            self.history.popleft()
            oldest = seq - self.capacity
            if self._maxq[0][0] <= oldest:
                self._maxq.popleft()
            if self._minq[0][0] <= oldest:
                self._minq.popleft()
        self.last_updated_ms = stat.window_start_ms
        return self

    def snapshot(self) -> BaselineSnapshot:
        return BaselineSnapshot(
            port=self.port,
            direction=self.direction,
            scale=self.scale,
            history_window_starts=tuple(s.window_start_ms for s in self.history),
            x_min=self.x_min,
            x_max=self.x_max,
            norm_factor_f=self.norm_factor_f,
            tolerance=self.tolerance,
            min_history=self.min_history,
            capacity=self.capacity,
            last_updated_ms=self.last_updated_ms,
        )


def update_baseline(baseline: Baseline, stat: WindowStat) -> Baseline:
    return baseline.update(stat)


def normal_region(baseline: Baseline | BaselineSnapshot) -> NormalRegion:
    return baseline.normal_region()
