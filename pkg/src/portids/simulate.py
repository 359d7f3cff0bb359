"""
Seeded synthetic traffic: stationary Poisson background plus attack episodes.

Background traffic is emitted as pre-aggregated events, one per
(node, protocol, second) with ``packet_count`` set, so long scenarios stay
small on disk and fast to ingest.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .ingest import PROTOCOLS, Direction, Protocol, TrafficEvent


class ScenarioError(ValueError):
    pass


class AttackKind(str, Enum):
    FLOOD = "flood"
    PORT_SCAN = "port_scan"
    SILENCE = "silence"


@dataclass(frozen=True)
class PortSpec:
    port: int
    direction: Direction
    mean_rate: float
    mix: dict = field(default_factory=lambda: {Protocol.TCP: 1.0})

    def probabilities(self) -> np.ndarray:
        w = np.array([float(self.mix.get(p, 0.0)) for p in PROTOCOLS])
        return w / w.sum()


@dataclass(frozen=True)
class AttackSpec:
    kind: AttackKind
    start_s: int
    end_s: int
    intensity: float
    port: int | None = None
    port_range: tuple[int, int] | None = None
    # None hits both directions of the target port
    direction: Direction | None = None

    def __post_init__(self):
        if not self.start_s < self.end_s:
            raise ScenarioError(f"attack window [{self.start_s}, {self.end_s}) is empty")
        if not self.intensity > 0:
            raise ScenarioError("attack intensity must be positive")
        if self.kind is AttackKind.PORT_SCAN:
            if self.port_range is None or self.port_range[0] > self.port_range[1]:
                raise ScenarioError("port_scan needs port_range [lo, hi]")
        elif self.port is None:
            raise ScenarioError(f"{self.kind.value} needs a target port")

    def hits(self, event: TrafficEvent) -> bool:
        return (event.port == self.port
                and (self.direction is None or event.direction == self.direction)
                and self.start_s * 1000 <= event.timestamp_ms < self.end_s * 1000)


@dataclass(frozen=True)
class ScenarioSpec:
    duration_s: int
    ports: tuple[PortSpec, ...]
    attacks: tuple[AttackSpec, ...] = ()
    seed: int = 0

    def __post_init__(self):
        if self.duration_s < 0:
            raise ScenarioError("duration_s must be non-negative")
        for p in self.ports:
            if not p.mean_rate > 0:
                raise ScenarioError(f"port {p.port}: mean_rate must be positive")
            if not 0 <= p.port <= 65535:
                raise ScenarioError(f"port {p.port} out of range")
            w = [float(v) for v in p.mix.values()]
            if not w or min(w) < 0 or sum(w) <= 0:
                raise ScenarioError(f"port {p.port}: protocol mix needs positive total weight")
        nodes = [(p.port, p.direction) for p in self.ports]
        if len(set(nodes)) != len(nodes):
            raise ScenarioError("duplicate (port, direction) in scenario")
        for a in self.attacks:
            if a.start_s < 0 or a.end_s > self.duration_s:
                raise ScenarioError(f"attack window [{a.start_s}, {a.end_s}) outside [0, {self.duration_s}]")


def scenario_from_dict(d: dict) -> ScenarioSpec:
    try:
        ports = tuple(
            PortSpec(int(p["port"]), Direction(p.get("dir", "in")), float(p["rate"]),
                     {Protocol(k): float(v) for k, v in p.get("mix", {"tcp": 1.0}).items()})
            for p in d.get("ports", []))
        attacks = tuple(
            AttackSpec(AttackKind(a["kind"]), int(a["start_s"]), int(a["end_s"]), float(a["intensity"]),
                       port=a.get("port"),
                       port_range=tuple(a["port_range"]) if "port_range" in a else None,
                       direction=Direction(a["dir"]) if a.get("dir") else None)
            for a in d.get("attacks", []))
        return ScenarioSpec(int(d["duration_s"]), ports, attacks, int(d.get("seed", 0)))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(f"invalid scenario: {exc!r}") from None


def load_scenario(path: str | Path) -> ScenarioSpec:
    text = Path(path).read_text(encoding="utf-8")
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON ({exc.msg})") from None
    return scenario_from_dict(d)


def _sorted(events: Iterable[TrafficEvent]) -> list[TrafficEvent]:
    return sorted(events, key=lambda e: (e.timestamp_ms, e.port, e.direction.value, PROTOCOLS.index(e.protocol)))


def gen_normal(spec: ScenarioSpec) -> list[TrafficEvent]:
    """Independent per-second Poisson counts for every declared node."""
    rng = np.random.default_rng(spec.seed)
    if spec.duration_s == 0:
        return []
    cols = []
    for node_idx, p in enumerate(spec.ports):
        counts = rng.poisson(p.mean_rate, size=spec.duration_s)
        split = rng.multinomial(counts, p.probabilities())
        sec, proto = np.nonzero(split)
        n = split[sec, proto]
        offset = rng.integers(0, 1000, size=len(sec))
        cols.append((sec * 1000 + offset, np.full(len(sec), node_idx), proto, n))
    ts = np.concatenate([c[0] for c in cols])
    node = np.concatenate([c[1] for c in cols])
    proto = np.concatenate([c[2] for c in cols])
    n = np.concatenate([c[3] for c in cols])
    keys = [(p.port, 0 if p.direction is Direction.INCOMING else 1) for p in spec.ports]
    port_key = np.array([k[0] for k in keys])[node]
    dir_key = np.array([k[1] for k in keys])[node]
    order = np.lexsort((proto, dir_key, port_key, ts))
    out = []
    for i in order:
        p = spec.ports[node[i]]
        out.append(TrafficEvent(int(ts[i]), p.port, p.direction, PROTOCOLS[proto[i]], int(n[i])))
    return out


def inject_attack(stream: Sequence[TrafficEvent], attack: AttackSpec, seed: int) -> list[TrafficEvent]:
    rng = np.random.default_rng(seed)
    k = attack.intensity
    if attack.kind is AttackKind.SILENCE:
        return [e for e in stream if not attack.hits(e)]
    if attack.kind is AttackKind.FLOOD:
        out = []
        for e in stream:
            if not attack.hits(e):
                out.append(e)
                continue
            if k >= 1:
                n = e.packet_count + int(rng.poisson((k - 1) * e.packet_count))
            else:
                n = int(rng.binomial(e.packet_count, k))
            if n > 0:
                out.append(TrafficEvent(e.timestamp_ms, e.port, e.direction, e.protocol, n))
        return out
    lo, hi = attack.port_range
    extra = []
    for s in range(attack.start_s, attack.end_s):
        m = int(rng.poisson(k))
        ports = rng.integers(lo, hi + 1, size=m)
        offsets = rng.integers(0, 1000, size=m)
        for port, off in zip(ports, offsets):
            extra.append(TrafficEvent(s * 1000 + int(off), int(port), Direction.INCOMING, Protocol.TCP, 1))
    return _sorted(list(stream) + extra)


def attack_seed(scenario_seed: int, index: int) -> int:
    return int(np.random.SeedSequence([scenario_seed, index + 1]).generate_state(1)[0])


def simulate(spec: ScenarioSpec) -> list[TrafficEvent]:
    events = gen_normal(spec)
    for i, attack in enumerate(spec.attacks):
        events = inject_attack(events, attack, attack_seed(spec.seed, i))
    return events


def scale_volume(events: Iterable[TrafficEvent], factor: int) -> list[TrafficEvent]:
    """Multiply every event's packet count by a positive integer."""
    if factor < 1:
        raise ValueError("factor must be a positive integer")
    return [TrafficEvent(e.timestamp_ms, e.port, e.direction, e.protocol, e.packet_count * factor)
            for e in events]
