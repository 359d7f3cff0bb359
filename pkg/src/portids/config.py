from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .detect import Thresholds
from .rollup import DEFAULT_LADDER_SPEC


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class EngineConfig:
    bin_width_ms: int = 1000
    ladder: tuple[tuple[str, int], ...] = DEFAULT_LADDER_SPEC
    history_capacity: int = 60
    tolerance: float = 0.1
    min_history: int = 5
    blend_lambda: float = 0.3
    info_threshold: float = 0.2
    warning_threshold: float = 0.5
    critical_threshold: float = 0.8
    descend_always: bool = False
    expiry_bins: int = 3600
    late_events: str = "drop"
    store_root: str | None = None

    def __post_init__(self):
        if self.bin_width_ms < 1:
            raise ConfigError("bin_width_ms must be >= 1")
        if not self.ladder:
            raise ConfigError("ladder needs at least one scale above base")
        for entry in self.ladder:
            if len(entry) != 2 or int(entry[1]) < 1:
                raise ConfigError(f"bad ladder entry {entry!r}")
        if self.history_capacity < 1:
            raise ConfigError("history_capacity must be >= 1")
        if not 1 <= self.min_history <= self.history_capacity:
            raise ConfigError("min_history must lie in [1, history_capacity]")
        if self.tolerance < 0:
            raise ConfigError("tolerance must be non-negative")
        if not 0 <= self.blend_lambda <= 1:
            raise ConfigError("blend_lambda must lie in [0, 1]")
        if not 0 <= self.info_threshold <= self.warning_threshold <= self.critical_threshold <= 1:
            raise ConfigError("thresholds must satisfy 0 <= info <= warning <= critical <= 1")
        if self.expiry_bins < 1:
            raise ConfigError("expiry_bins must be >= 1")
        if self.late_events not in ("drop", "abort"):
            raise ConfigError("late_events must be 'drop' or 'abort'")

    @property
    def thresholds(self) -> Thresholds:
        return Thresholds(self.info_threshold, self.warning_threshold, self.critical_threshold)

    def replace(self, **changes) -> "EngineConfig":
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_dict(cls, d: dict) -> "EngineConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        d = dict(d)
        if "ladder" in d:
            ladder = d["ladder"]
            if isinstance(ladder, dict):
                ladder = list(ladder.items())
            d["ladder"] = tuple((str(name), int(n)) for name, n in ladder)
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["ladder"] = [list(x) for x in self.ladder]
        return d


def load_config(path: str | Path | None) -> EngineConfig:
    """Read a one-object JSON config; a missing path or empty file yields the defaults."""
    if path is None:
        return EngineConfig()
    text = Path(path).read_text(encoding="utf-8").strip()
    if not text:
        return EngineConfig()
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc.msg})") from None
    if not isinstance(d, dict):
        raise ConfigError(f"{path}: expected one JSON object")
    return EngineConfig.from_dict(d)
