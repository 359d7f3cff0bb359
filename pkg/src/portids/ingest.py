"""
Event parsing and base-resolution binning.

Events arrive as line-delimited JSON objects::

    {"ts_ms": 1000, "port": 80, "dir": "in", "proto": "tcp", "n": 3}

and are accumulated into per-(port, direction) CountBins of a fixed width.
Only port, direction, protocol and packet count survive parsing.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, NamedTuple


class Direction(str, Enum):
    INCOMING = "in"
    OUTGOING = "out"


class Protocol(str, Enum):
    TCP = "tcp"
    UDP = "udp"
    ICMP = "icmp"
    OTHER = "other"


PROTOCOLS: tuple[Protocol, ...] = tuple(Protocol)


class Node(NamedTuple):
    """One monitored series: a port seen in one direction."""

    port: int
    direction: Direction

    def __str__(self) -> str:
        return f"{self.port}/{self.direction.value}"


class EventParseError(ValueError):
    """A record could not be parsed; ``field`` names the offending key."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


class EventValidationError(ValueError):
    pass


class LateEventError(ValueError):
    """An event belongs to a bin that has already been closed."""

    def __init__(self, event: "TrafficEvent", open_bin_start_ms: int):
        super().__init__(
            f"event at {event.timestamp_ms} ms is older than the open bin starting at {open_bin_start_ms} ms"
        )
        self.event = event
        self.open_bin_start_ms = open_bin_start_ms


@dataclass(frozen=True)
class TrafficEvent:
    timestamp_ms: int
    port: int
    direction: Direction
    protocol: Protocol
    packet_count: int = 1

    def __post_init__(self):
        if not 0 <= self.port <= 65535:
            raise EventValidationError(f"port {self.port} outside [0, 65535]")
        if self.packet_count < 1:
            raise EventValidationError(f"packet_count must be >= 1, got {self.packet_count}")
        if self.timestamp_ms < 0:
            raise EventValidationError(f"negative timestamp {self.timestamp_ms}")

    @property
    def node(self) -> Node:
        return Node(self.port, self.direction)

    def to_record(self) -> dict:
        rec = {"ts_ms": self.timestamp_ms, "port": self.port,
               "dir": self.direction.value, "proto": self.protocol.value}
        if self.packet_count != 1:
            rec["n"] = self.packet_count
        return rec

    def to_line(self) -> str:
        return json.dumps(self.to_record(), separators=(",", ":"))


@dataclass(frozen=True)
class CountBin:
    bin_start_ms: int
    port: int
    direction: Direction
    count: int
    protocol_counts: dict = field(default_factory=dict)

    @property
    def node(self) -> Node:
        return Node(self.port, self.direction)


def _int_field(obj: dict, key: str, required: bool = True, default: int | None = None) -> int:
    if key not in obj:
        if required:
            raise EventParseError(key, "missing")
        return default
    value = obj[key]
    # bool is an int subclass; reject it explicitly
    if isinstance(value, bool) or not isinstance(value, int):
        raise EventParseError(key, f"expected integer, got {value!r}")
    return value


def parse_event(line: str) -> TrafficEvent:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise EventParseError("record", f"invalid JSON ({exc.msg})") from None
    if not isinstance(obj, dict):
        raise EventParseError("record", "expected a JSON object")

    ts = _int_field(obj, "ts_ms")
    port = _int_field(obj, "port")
    n = _int_field(obj, "n", required=False, default=1)
    if "dir" not in obj:
        raise EventParseError("dir", "missing")
    if "proto" not in obj:
        raise EventParseError("proto", "missing")
    try:
        direction = Direction(obj["dir"])
    except ValueError:
        raise EventValidationError(f"unknown direction {obj['dir']!r}") from None
    try:
        protocol = Protocol(obj["proto"])
    except ValueError:
        raise EventValidationError(f"unknown protocol {obj['proto']!r}") from None
    return TrafficEvent(ts, port, direction, protocol, n)


def read_events(lines: Iterable[str]) -> Iterator[TrafficEvent]:
    """Parse non-blank lines into events."""
    for line in lines:
        if line.strip():
            yield parse_event(line)


class Binner:
    """
    Streaming accumulator from events to CountBins.

    Bins are closed when an event from a later bin arrives (or on
    :meth:`flush`). Every active node gets a bin for every closed bin, with
    explicit zeros, until it has been silent for ``expiry_bins`` bins.
    """

    def __init__(self, bin_width_ms: int = 1000, expiry_bins: int = 3600):
        if bin_width_ms < 1:
            raise ValueError("bin_width_ms must be >= 1")
        if expiry_bins < 1:
            raise ValueError("expiry_bins must be >= 1")
        self.bin_width_ms = bin_width_ms
        self.expiry_bins = expiry_bins
        self._open_start: int | None = None
        self._open: dict[Node, Counter] = {}
        # node -> consecutive silent bins emitted so far
        self._silent: dict[Node, int] = {}

    @property
    def active_nodes(self) -> list[Node]:
        return sorted(set(self._silent) | set(self._open))

    def push(self, event: TrafficEvent) -> list[CountBin]:
        """Add one event; returns the bins closed by its arrival."""
        start = event.timestamp_ms - event.timestamp_ms % self.bin_width_ms
        closed: list[CountBin] = []
        if self._open_start is None:
            self._open_start = start
        elif start < self._open_start:
            raise LateEventError(event, self._open_start)
        elif start > self._open_start:
            closed = self._advance_to(start)
        self._open.setdefault(event.node, Counter())[event.protocol] += event.packet_count
        return closed

    def flush(self) -> list[CountBin]:
        """Close the open bin without opening another."""
        if self._open_start is None:
            return []
        out = self._close_open()
        self._open_start += self.bin_width_ms
        return out

    def _close_open(self) -> list[CountBin]:
        out = []
        for node in sorted(set(self._silent) | set(self._open)):
            counts = self._open.get(node)
            if counts:
                self._silent[node] = 0
                pc = {p: counts[p] for p in PROTOCOLS if counts[p]}
                out.append(CountBin(self._open_start, node.port, node.direction, sum(pc.values()), pc))
            else:
                silent = self._silent[node] + 1
                if silent > self.expiry_bins:
                    del self._silent[node]
                    continue
                self._silent[node] = silent
                out.append(CountBin(self._open_start, node.port, node.direction, 0, {}))
        self._open = {}
        return out

    def _advance_to(self, start: int) -> list[CountBin]:
        out = self._close_open()
        nxt = self._open_start + self.bin_width_ms
        # zero-fill empty bins in between, stopping once every node has expired
        while nxt < start and self._silent:
            self._open_start = nxt
            out.extend(self._close_open())
            nxt += self.bin_width_ms
        self._open_start = start
        return out


def bin_events(events: Iterable[TrafficEvent], bin_width_ms: int = 1000,
               expiry_bins: int = 3600) -> Iterator[CountBin]:
    binner = Binner(bin_width_ms, expiry_bins)
    for event in events:
        yield from binner.push(event)
    yield from binner.flush()
