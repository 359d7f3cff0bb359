"""
Command-line entry point.

    portids simulate scenario.json -o events.jsonl
    portids run --config engine.json events.jsonl > alerts.jsonl
    portids report --store-root store --port 80 --dir in --scale minute
    portids graph-dump events.jsonl

Alerts and data go to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import os
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, TextIO

from .config import ConfigError, EngineConfig, load_config
from .engine import Engine
from .ingest import Binner, Direction, EventParseError, EventValidationError, LateEventError, parse_event
from .interaction import ProfileTracker, build_graph
from .simulate import ScenarioError, load_scenario, simulate
from .store import RecordKind, RangeError, Store

logger = logging.getLogger("portids")

REPORT_COLUMNS = ("window_start_ms", "mean", "min", "max", "variance", "sample_count", "partial")


class CliError(Exception):
    pass


@contextmanager
def _open_in(path: str | None) -> Iterator[TextIO]:
    if path is None or path == "-":
        yield sys.stdin
        return
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from None
    with fh:
        yield fh


@contextmanager
def _open_out(path: str | None) -> Iterator[TextIO]:
    if path is None or path == "-":
        yield sys.stdout
        return
    try:
        fh = open(path, "w", encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc.strerror}") from None
    with fh:
        yield fh


def _iter_events(fh: TextIO):
    for lineno, line in enumerate(fh, 1):
        if not line.strip():
            continue
        try:
            yield parse_event(line)
        except (EventParseError, EventValidationError) as exc:
            raise CliError(f"line {lineno}: {exc}") from None


def _parse_ladder(text: str) -> tuple[tuple[str, int], ...]:
    out = []
    for part in text.split(","):
        name, _, n = part.partition(":")
        if not name or not n.isdigit():
            raise CliError(f"bad --ladder entry {part!r}; expected name:children")
        out.append((name.strip(), int(n)))
    return tuple(out)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="engine config file (one JSON object)")
    for f in dataclasses.fields(EngineConfig):
        flag = "--" + f.name.replace("_", "-")
        if f.name == "ladder":
            p.add_argument(flag, help="e.g. minute:60,hour:60,day:24,month:30")
        elif f.name == "descend_always":
            p.add_argument(flag, action="store_true", default=None)
        elif f.name in ("late_events", "store_root"):
            p.add_argument(flag)
        elif f.type in ("int", int):
            p.add_argument(flag, type=int)
        else:
            p.add_argument(flag, type=float)


def _config_from_args(args) -> EngineConfig:
    try:
        cfg = load_config(args.config)
    except OSError as exc:
        raise CliError(f"cannot read config {args.config}: {exc.strerror}") from None
    changes = {}
    for f in dataclasses.fields(EngineConfig):
        value = getattr(args, f.name, None)
        if value is None:
            continue
        changes[f.name] = _parse_ladder(value) if f.name == "ladder" else value
    return cfg.replace(**changes) if changes else cfg


def cmd_simulate(args) -> int:
    try:
        spec = load_scenario(args.scenario)
    except FileNotFoundError:
        raise CliError(f"scenario file not found: {args.scenario}") from None
    except OSError as exc:
        raise CliError(f"cannot read scenario {args.scenario}: {exc.strerror}") from None
    except ScenarioError as exc:
        raise CliError(f"{args.scenario}: {exc}") from None
    events = simulate(spec)
    with _open_out(args.out) as out:
        for e in events:
            out.write(e.to_line() + "\n")
    logger.info("wrote %d events", len(events))
    return 0


def cmd_run(args) -> int:
    cfg = _config_from_args(args)
    store = Store(cfg.store_root) if cfg.store_root else None
    if store is None:
        logger.info("no store_root configured; aggregates are not persisted")
    engine = Engine(cfg, store)
    n_alerts = 0
    out = sys.stdout
    try:
        with _open_in(args.events) as fh:
            for event in _iter_events(fh):
                try:
                    alerts = engine.process(event)
                except LateEventError as exc:
                    raise CliError(str(exc)) from None
                for a in alerts:
                    out.write(a.to_line() + "\n")
                n_alerts += len(alerts)
        for a in engine.finish():
            out.write(a.to_line() + "\n")
            n_alerts += 1
        out.flush()
    finally:
        if store is not None:
            store.close()
    logger.info("%d events, %d alerts, %d late events dropped",
                engine.stats.events, n_alerts, engine.stats.late_events)
    return 0


def cmd_report(args) -> int:
    root = Path(args.store_root)
    if not root.is_dir():
        raise CliError(f"store not found: {root}")
    store = Store(root)
    if args.scale not in store.scales():
        raise CliError(f"unknown scale {args.scale!r} in {root}")
    if not any(r.payload.port == args.port for r in store.records()):
        raise CliError(f"unknown port {args.port} in {root}")
    try:
        recs = store.query(RecordKind.WINDOW_STAT, args.port, Direction(args.dir), args.scale,
                           (args.start_ms, args.end_ms))
    except RangeError as exc:
        raise CliError(str(exc)) from None
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for r in recs:
        s = r.payload
        writer.writerow([s.window_start_ms, repr(s.mean), repr(s.min_value), repr(s.max_value),
                         repr(s.variance), s.sample_count, int(s.partial)])
    return 0


def cmd_graph_dump(args) -> int:
    cfg = _config_from_args(args)
    binner = Binner(cfg.bin_width_ms, cfg.expiry_bins)
    tracker = ProfileTracker(cfg.history_capacity)
    with _open_in(args.events) as fh:
        for event in _iter_events(fh):
            try:
                bins = binner.push(event)
            except LateEventError as exc:
                if cfg.late_events == "abort":
                    raise CliError(str(exc)) from None
                continue
            for b in bins:
                tracker.push(b)
    for b in binner.flush():
        tracker.push(b)
    graph = build_graph(tracker.profiles(binner.active_nodes))
    for line in graph.dump_lines():
        sys.stdout.write(line + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="portids", description=__doc__.splitlines()[1])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic event stream")
    p.add_argument("scenario")
    p.add_argument("-o", "--out", default="-")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("run", help="run the detection pipeline; alerts on stdout")
    p.add_argument("events", nargs="?", default="-")
    _add_config_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="CSV series of stored window statistics")
    p.add_argument("--store-root", required=True)
    p.add_argument("--port", type=int, required=True)
    p.add_argument("--dir", choices=[d.value for d in Direction], default="in")
    p.add_argument("--scale", default="minute")
    p.add_argument("--start-ms", type=int, default=0)
    p.add_argument("--end-ms", type=int, default=2**63 - 1)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("graph-dump", help="dump the current port interaction graph")
    p.add_argument("events", nargs="?", default="-")
    _add_config_flags(p)
    p.set_defaults(func=cmd_graph_dump)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        code = args.func(args)
        sys.stdout.flush()
        return code
    except (CliError, ConfigError) as exc:
        print(f"portids {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except BrokenPipeError:
        # downstream reader went away (e.g. piped into head)
        devnull = os.open(os.devnull, os.O_WRONLY)
        os.dup2(devnull, sys.stdout.fileno())
        return 0


if __name__ == "__main__":
    sys.exit(main())
