"""Canned scenarios used by the experiment scripts and the acceptance suite."""

from __future__ import annotations

from .ingest import Direction, Protocol
from .simulate import AttackKind, AttackSpec, PortSpec, ScenarioSpec

TCP, UDP, ICMP, OTHER = Protocol.TCP, Protocol.UDP, Protocol.ICMP, Protocol.OTHER

# (port, protocol mix, incoming rate, outgoing rate); rates in packets/s
EIGHT_PORTS = (
    (80, {TCP: 1.0}, 20.0, 18.0),
    (53, {UDP: 0.9, TCP: 0.1}, 12.0, 12.0),
    (123, {UDP: 1.0}, 5.0, 5.0),
    (161, {UDP: 1.0}, 8.0, 6.0),
    (0, {ICMP: 1.0}, 6.0, 6.0),
    (500, {UDP: 1.0}, 10.0, 9.0),
    (47, {OTHER: 1.0}, 30.0, 28.0),
    (5060, {UDP: 0.8, TCP: 0.2}, 50.0, 45.0),
)

WARMUP_S = 2 * 3600
FLOOD_PORT = 80
FLOOD_S = 10 * 60


def eight_port_ports() -> tuple[PortSpec, ...]:
    specs = []
    for port, mix, rate_in, rate_out in EIGHT_PORTS:
        specs.append(PortSpec(port, Direction.INCOMING, rate_in, dict(mix)))
        specs.append(PortSpec(port, Direction.OUTGOING, rate_out, dict(mix)))
    return tuple(specs)


def flood_scenario(seed: int = 2024, tail_s: int = 20 * 60, intensity: float = 10.0) -> ScenarioSpec:
    """Two hours of warm-up, then a ten-minute flood on port 80 (both directions)."""
    start = WARMUP_S
    end = start + FLOOD_S
    attack = AttackSpec(AttackKind.FLOOD, start, end, intensity, port=FLOOD_PORT)
    return ScenarioSpec(end + tail_s, eight_port_ports(), (attack,), seed)


def stationary_scenario(seed: int = 2024, post_warmup_s: int = 6 * 3600) -> ScenarioSpec:
    return ScenarioSpec(WARMUP_S + post_warmup_s, eight_port_ports(), (), seed)
