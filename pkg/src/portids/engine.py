"""
Streaming pipeline: events -> bins -> window ladder -> baselines -> detection.

Detection runs whenever the finest stat scale (minute by default) closes a
window. The finest observation is that window's mean. A coarser scale is
observed over the trailing full-length window ending at the same point
(e.g. the last 60 minute means for the hour scale), so it is compared
against a region learned from windows of the same length. Every node is
checked against its baselines as they stood *before* the closing window is
absorbed.
"""

from __future__ import annotations

import logging
import math
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Iterable

from .baseline import Baseline, ColdStartError
from .config import EngineConfig
from .detect import Alert, CascadeResult, cascade, emit_alert, network_score, port_score
from .ingest import Binner, CountBin, LateEventError, Node, TrafficEvent
from .interaction import PortGraph, ProfileTracker, build_graph
from .rollup import Ladder, SeriesLadder, WindowStat
from .store import Store, baseline_record, window_stat_record

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Evaluation:
    node: Node
    window_start_ms: int
    result: CascadeResult | None
    port_score: float | None
    network_score: float


@dataclass
class EngineStats:
    events: int = 0
    late_events: int = 0
    bins: int = 0
    stats_emitted: int = 0
    ticks: int = 0
    region_evals: Counter = field(default_factory=Counter)
    pair_visits: int = 0


class _Trailing:
    """Recent finest-scale means of one node, for trailing coarse observations."""

    def __init__(self, maxlen: int, width_ms: int):
        self.means: deque[float] = deque(maxlen=maxlen)
        self.width_ms = width_ms
        self.last_start: int | None = None

    def push(self, stat: WindowStat) -> None:
        contiguous = self.last_start is not None and stat.window_start_ms == self.last_start + self.width_ms
        if stat.partial or not contiguous:
            self.means.clear()
        self.last_start = stat.window_start_ms
        if not stat.partial:
            self.means.append(stat.mean)

    def mean_of_last(self, n: int) -> float | None:
        if len(self.means) < n:
            return None
        if n == 1:
            return self.means[-1]
        vals = list(self.means)[-n:]
        return math.fsum(vals) / n


class Engine:
    def __init__(self, config: EngineConfig | None = None, store: Store | None = None,
                 keep_evaluations: bool = False):
        self.config = config = config or EngineConfig()
        self.ladder = Ladder(config.bin_width_ms, config.ladder)
        self.binner = Binner(config.bin_width_ms, config.expiry_bins)
        self.profiles = ProfileTracker(config.history_capacity)
        self.store = store
        self.keep_evaluations = keep_evaluations
        self.evaluations: list[Evaluation] = []
        self.stats = EngineStats()
        self.series: dict[Node, SeriesLadder] = {}
        self.baselines: dict[Node, dict[str, Baseline]] = {}
        self.trailing: dict[Node, _Trailing] = {}
        self.last_graph: PortGraph | None = None

        scales = self.ladder.stat_scales
        self.finest = scales[0]
        # number of finest windows spanned by one window of each scale
        self.span = {s.name: s.width_ms // self.finest.width_ms for s in scales}
        self._coarse_to_fine = [s.name for s in reversed(scales)]
        self._group_start: int | None = None
        self._pending_finest: list[WindowStat] = []
        self._pending_stats: list[WindowStat] = []

    # -- ingestion -----------------------------------------------------------

    def process(self, event: TrafficEvent) -> list[Alert]:
        self.stats.events += 1
        try:
            bins = self.binner.push(event)
        except LateEventError:
            self.stats.late_events += 1
            if self.config.late_events == "abort":
                raise
            logger.warning("dropping late event at %d ms (port %d)", event.timestamp_ms, event.port)
            return []
        return self._process_bins(bins)

    def finish(self) -> list[Alert]:
        """Close the open bin, run the last detection tick and flush partial windows."""
        alerts = self._process_bins(self.binner.flush())
        alerts.extend(self._tick())
        for node in sorted(self.series):
            for stat in self.series[node].flush():
                self._persist_stat(stat)
        return alerts

    def run(self, events: Iterable[TrafficEvent]) -> list[Alert]:
        alerts: list[Alert] = []
        for e in events:
            alerts.extend(self.process(e))
        alerts.extend(self.finish())
        return alerts

    def _process_bins(self, bins: list[CountBin]) -> list[Alert]:
        alerts: list[Alert] = []
        for b in bins:
            if self._group_start is not None and b.bin_start_ms != self._group_start:
                alerts.extend(self._tick())
            self._group_start = b.bin_start_ms
            self._absorb_bin(b)
        return alerts

    def _absorb_bin(self, b: CountBin) -> None:
        self.stats.bins += 1
        node = b.node
        self.profiles.push(b)
        series = self.series.get(node)
        if series is None:
            series = self.series[node] = SeriesLadder(self.ladder, node.port, node.direction)
            self.baselines[node] = {
                s.name: Baseline(node.port, node.direction, s.name, self.config.history_capacity,
                                 self.config.tolerance, self.config.min_history)
                for s in self.ladder.stat_scales}
            self.trailing[node] = _Trailing(max(self.span.values()), self.finest.width_ms)
        for stat in series.push_bin(b):
            if stat.scale == self.finest.name:
                self._pending_finest.append(stat)
            self._pending_stats.append(stat)

    # -- detection -----------------------------------------------------------

    def observations(self, node: Node) -> dict[str, float]:
        tr = self.trailing[node]
        obs = {}
        for name, n in self.span.items():
            bl = self.baselines[node][name]
            # trailing means are only needed where a region exists
            if not bl.warm:
                continue
            m = tr.mean_of_last(n)
            if m is not None:
                obs[name] = m
        return obs

    def _tick(self) -> list[Alert]:
        finest, stats = self._pending_finest, self._pending_stats
        self._pending_finest, self._pending_stats = [], []
        if not stats:
            return []
        alerts: list[Alert] = []
        if finest:
            self.stats.ticks += 1
            alerts = self._detect(finest)
        for stat in stats:
            self._persist_stat(stat)
            if stat.partial:
                continue
            bl = self.baselines[Node(stat.port, stat.direction)][stat.scale]
            bl.update(stat)
            if self.store is not None:
                self.store.append(baseline_record(bl.snapshot(), self._now_ms()))
        return alerts

    def _detect(self, finest: list[WindowStat]) -> list[Alert]:
        results: dict[Node, CascadeResult] = {}
        window_of: dict[Node, int] = {}
        for stat in finest:
            node = Node(stat.port, stat.direction)
            self.trailing[node].push(stat)
            if stat.partial:
                continue
            window_of[node] = stat.window_start_ms
            bls = [self.baselines[node][name] for name in self._coarse_to_fine]
            try:
                res = cascade(node.port, node.direction, stat.window_start_ms, bls,
                              self.observations(node), self.config.descend_always)
            except ColdStartError:
                continue
            for v in res.verdicts:
                self.stats.region_evals[v.scale] += 1
            results[node] = res

        active = set(self.binner.active_nodes) | set(window_of)
        graph = build_graph(self.profiles.profiles(sorted(active)))
        self.last_graph = graph
        scores = {n: 0.0 for n in graph.nodes}
        for node, res in results.items():
            scores[node] = port_score(res.verdicts)
        visits: list = []
        blended = network_score(scores, graph, self.config.blend_lambda, visits)
        self.stats.pair_visits += len(visits)

        alerts = []
        thresholds = self.config.thresholds
        for node in sorted(window_of):
            res = results.get(node)
            if self.keep_evaluations:
                self.evaluations.append(Evaluation(
                    node, window_of[node], res, scores[node] if res else None, blended[node]))
            if res is None:
                continue
            alert = emit_alert(node, window_of[node], res.verdicts, scores[node], blended[node], thresholds)
            if alert is not None:
                alerts.append(alert)
        return alerts

    # -- persistence ---------------------------------------------------------

    def _now_ms(self) -> int:
        return (self._group_start or 0) + self.config.bin_width_ms

    def _persist_stat(self, stat: WindowStat) -> None:
        self.stats.stats_emitted += 1
        if self.store is not None:
            self.store.append(window_stat_record(stat, self._now_ms()))


def run_events(events: Iterable[TrafficEvent], config: EngineConfig | None = None,
               store: Store | None = None, keep_evaluations: bool = False) -> tuple[list[Alert], Engine]:
    engine = Engine(config, store, keep_evaluations)
    alerts = engine.run(events)
    return alerts, engine
