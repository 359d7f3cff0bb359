"""
Coarse-to-fine region checks, per-node scoring and network blending.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

from .baseline import ColdStartError, NormalRegion, flat_width
from .ingest import Direction, Node
from .interaction import GraphIdentityError, PortGraph

# edge comparisons tolerate this much relative rounding so that a value
# sitting exactly on a widened edge stays inside regardless of volume scale
EDGE_RTOL = 1e-12


class Severity(str, Enum):
    INFO = "info"
    WARNING = "warning"
    CRITICAL = "critical"


class ThresholdOrderError(ValueError):
    pass


@dataclass(frozen=True)
class ScaleVerdict:
    scale: str
    observed_mean: float
    region: NormalRegion
    outside: bool
    normalized_deviation: float

    def to_dict(self) -> dict:
        return {"scale": self.scale, "observed": self.observed_mean, "low": self.region.low,
                "high": self.region.high, "outside": self.outside,
                "deviation": self.normalized_deviation}


def scale_check(observed_mean: float, region: NormalRegion, f: float | None) -> ScaleVerdict:
    """
    Inclusive-edge region test.

    ``f`` is the baseline's normalization factor, or None for a flat
    baseline, in which case the excess is scaled by ``1 / max(|x|, 1)``.
    """
    slack = EDGE_RTOL * max(abs(region.low), abs(region.high), abs(observed_mean))
    if observed_mean < region.low - slack:
        excess = region.low - observed_mean
    elif observed_mean > region.high + slack:
        excess = observed_mean - region.high
    else:
        return ScaleVerdict(region.scale, observed_mean, region, False, 0.0)
    if f is None:
        centre = (region.low + region.high) / 2
        f = 1.0 / flat_width(centre)
    return ScaleVerdict(region.scale, observed_mean, region, True, excess * f)


@dataclass
class CascadeResult:
    verdicts: list[ScaleVerdict]
    skipped: list[str] = field(default_factory=list)


def cascade(port: int, direction: Direction, window_start_ms: int,
            baselines: Sequence, observations: Mapping[str, float],
            descend_always: bool = False) -> CascadeResult:
    """
    Walk the scales from coarsest to finest.

    ``baselines`` are ordered long to short. A scale is skipped when its
    baseline is cold or no observation is available for it. After the
    first evaluated scale the walk continues only while the latest verdict
    is outside, unless ``descend_always`` is set.
    """
    verdicts: list[ScaleVerdict] = []
    skipped: list[str] = []
    for bl in baselines:
        if verdicts and not descend_always and not verdicts[-1].outside:
            break
        obs = observations.get(bl.scale)
        if obs is None or not bl.warm:
            skipped.append(bl.scale)
            continue
        verdicts.append(scale_check(obs, bl.normal_region(), bl.norm_factor_f))
    if not verdicts:
        raise ColdStartError(f"every scale of {port}/{Direction(direction).value} is cold at {window_start_ms}")
    return CascadeResult(verdicts, skipped)


def port_score(verdicts: Sequence[ScaleVerdict]) -> float:
    """Share of outside verdicts, weighting the k-th coarsest by k / sum(1..n)."""
    n = len(verdicts)
    if n == 0:
        raise ValueError("no verdicts to score")
    total = n * (n + 1) / 2
    return min(1.0, sum(k for k, v in enumerate(verdicts, 1) if v.outside) / total)


def network_score(scores: Mapping[Node, float], graph: PortGraph, lam: float = 0.3,
                  visits: list | None = None) -> dict[Node, float]:
    """
    Blend each node's score with the strength-weighted mean of all others.

    Every ordered pair (i, j), i != j, is visited; pass a list as
    ``visits`` to record them.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lam must lie in [0, 1]")
    for node in scores:
        if node not in graph:
            raise GraphIdentityError(f"node {node} missing from graph")
    out: dict[Node, float] = {}
    for i in scores:
        num = 0.0
        den = 0.0
        for j in graph.nodes:
            if j == i:
                continue
            if visits is not None:
                visits.append((i, j))
            s = graph.strength(i, j)
            num += s * scores.get(j, 0.0)
            den += s
        if len(graph.nodes) == 1:
            # nothing to blend with
            out[i] = scores[i]
            continue
        neighbour = num / den if den > 0 else 0.0
        out[i] = min(1.0, max(0.0, (1 - lam) * scores[i] + lam * neighbour))
    return out


@dataclass(frozen=True)
class Thresholds:
    info: float = 0.2
    warning: float = 0.5
    critical: float = 0.8

    def __post_init__(self):
        if not self.info <= self.warning <= self.critical:
            raise ThresholdOrderError(
                f"thresholds must satisfy info <= warning <= critical, got "
                f"{self.info}/{self.warning}/{self.critical}")

    def severity(self, score: float) -> Severity | None:
        if score >= self.critical:
            return Severity.CRITICAL
        if score >= self.warning:
            return Severity.WARNING
        if score >= self.info:
            return Severity.INFO
        return None


@dataclass(frozen=True)
class Alert:
    port: int
    direction: Direction
    window_start_ms: int
    verdicts: tuple[ScaleVerdict, ...]
    port_score: float
    network_score: float
    severity: Severity

    @property
    def node(self) -> Node:
        return Node(self.port, self.direction)

    def to_dict(self) -> dict:
        return {"ts_ms": self.window_start_ms, "port": self.port, "dir": self.direction.value,
                "severity": self.severity.value, "port_score": self.port_score,
                "network_score": self.network_score,
                "verdicts": [v.to_dict() for v in self.verdicts]}

    def to_line(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))


def emit_alert(node: Node, window_start_ms: int, verdicts: Sequence[ScaleVerdict],
               port_score_value: float, network_score_value: float,
               thresholds: Thresholds | Sequence[float] = Thresholds()) -> Alert | None:
    if not isinstance(thresholds, Thresholds):
        thresholds = Thresholds(*thresholds)
    sev = thresholds.severity(network_score_value)
    if sev is None:
        return None
    return Alert(node.port, node.direction, window_start_ms, tuple(verdicts),
                 port_score_value, network_score_value, sev)
