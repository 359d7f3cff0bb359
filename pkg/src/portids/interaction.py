"""
Port interaction graph.

Every active (port, direction) node is connected to every other one. Edge
strength is the cosine similarity of the two nodes' protocol-usage
proportions, so it measures how alike the ports are accessed, not how
busy they are.
"""

from __future__ import annotations

import itertools
import json
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

from .ingest import PROTOCOLS, CountBin, Direction, Node, Protocol


class GraphIdentityError(ValueError):
    pass


@dataclass(frozen=True)
class ProtocolProfile:
    port: int
    direction: Direction
    proportions: Mapping[Protocol, float] = field(default_factory=dict)

    @property
    def node(self) -> Node:
        return Node(self.port, self.direction)

    @property
    def empty(self) -> bool:
        return not self.proportions

    def vector(self) -> tuple[float, ...]:
        return tuple(self.proportions.get(p, 0.0) for p in PROTOCOLS)


def profile_from_counts(port: int, direction: Direction, counts: Mapping[Protocol, int]) -> ProtocolProfile:
    total = sum(counts.values())
    if total <= 0:
        return ProtocolProfile(port, direction, {})
    return ProtocolProfile(port, direction, {p: counts[p] / total for p in PROTOCOLS if counts.get(p)})


def protocol_profile(bins: Iterable[CountBin], port: int | None = None,
                     direction: Direction | None = None) -> ProtocolProfile:
    """Per-protocol share of all packets in ``bins`` (one node's bins)."""
    totals = dict.fromkeys(PROTOCOLS, 0)
    for b in bins:
        if port is None:
            port, direction = b.port, b.direction
        elif (b.port, b.direction) != (port, direction):
            raise GraphIdentityError("bins from more than one node")
        for proto, c in b.protocol_counts.items():
            totals[Protocol(proto)] += c
    if port is None:
        port, direction = -1, Direction.INCOMING
    return profile_from_counts(port, direction, totals)


def cosine_strength(a: ProtocolProfile, b: ProtocolProfile) -> float:
    if a.empty or b.empty:
        return 0.0
    va, vb = a.vector(), b.vector()
    dot = math.fsum(x * y for x, y in zip(va, vb))
    na = math.sqrt(math.fsum(x * x for x in va))
    nb = math.sqrt(math.fsum(y * y for y in vb))
    # rounding can push an exact match a hair over 1
    return min(1.0, max(0.0, dot / (na * nb)))


def strength(a: ProtocolProfile, b: ProtocolProfile) -> float:
    return cosine_strength(a, b)


def _edge_key(a: Node, b: Node) -> tuple[Node, Node]:
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class PortGraph:
    nodes: tuple[Node, ...]
    edges: Mapping[tuple[Node, Node], float]

    def strength(self, a: Node, b: Node) -> float:
        return self.edges[_edge_key(a, b)]

    def __contains__(self, node: Node) -> bool:
        return node in self._node_set

    @property
    def _node_set(self) -> frozenset:
        return frozenset(self.nodes)

    def records(self) -> list[dict]:
        out = []
        for (a, b), s in self.edges.items():
            out.append({"port_a": a.port, "dir_a": a.direction.value,
                        "port_b": b.port, "dir_b": b.direction.value, "strength": s})
        return out

    def dump_lines(self) -> list[str]:
        return [json.dumps(r, separators=(",", ":")) for r in self.records()]


def build_graph(profiles: Iterable[ProtocolProfile],
                metric: Callable[[ProtocolProfile, ProtocolProfile], float] = cosine_strength) -> PortGraph:
    profiles = sorted(profiles, key=lambda p: p.node)
    nodes = tuple(p.node for p in profiles)
    if len(set(nodes)) != len(nodes):
        raise GraphIdentityError("duplicate (port, direction) among profiles")
    edges = {}
    for a, b in itertools.combinations(profiles, 2):
        edges[(a.node, b.node)] = metric(a, b)
    return PortGraph(nodes, edges)


class ProfileTracker:
    """Running protocol totals over the most recent ``window`` bins of each node."""

    def __init__(self, window: int = 60):
        self.window = window
        self._bins: dict[Node, deque] = {}
        self._totals: dict[Node, dict[Protocol, int]] = {}

    def push(self, b: CountBin) -> None:
        node = b.node
        q = self._bins.get(node)
        if q is None:
            q = self._bins[node] = deque()
            self._totals[node] = dict.fromkeys(PROTOCOLS, 0)
        totals = self._totals[node]
        q.append(b.protocol_counts)
        for p, c in b.protocol_counts.items():
            totals[p] += c
        if len(q) > self.window:
            for p, c in q.popleft().items():
                totals[p] -= c

    def drop(self, node: Node) -> None:
        self._bins.pop(node, None)
        self._totals.pop(node, None)

    def profile(self, node: Node) -> ProtocolProfile:
        return profile_from_counts(node.port, node.direction, self._totals.get(node, {}))

    def profiles(self, nodes: Iterable[Node] | None = None) -> list[ProtocolProfile]:
        if nodes is None:
            nodes = sorted(self._totals)
        return [self.profile(n) for n in nodes]
