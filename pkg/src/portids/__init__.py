"""Per-port statistical traffic anomaly detection over multi-timescale min/max baselines."""

from .baseline import Baseline, NormalRegion, norm_factor, normalize, normal_region, update_baseline
from .config import EngineConfig, load_config
from .detect import Alert, ScaleVerdict, Severity, cascade, emit_alert, network_score, port_score, scale_check
from .engine import Engine, run_events
from .ingest import CountBin, Direction, Node, Protocol, TrafficEvent, bin_events, parse_event
from .interaction import PortGraph, ProtocolProfile, build_graph, protocol_profile, strength
from .rollup import Ladder, TimeScale, WindowStat, rollup_next, window_mean, window_stat
from .simulate import AttackSpec, PortSpec, ScenarioSpec, gen_normal, inject_attack, simulate
from .store import RecordKind, SnapshotRecord, Store

__version__ = "0.1.0"
