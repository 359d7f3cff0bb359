"""
False-alarm rate on stationary traffic as a function of the tolerance.

Runs the no-attack eight-port scenario once per tolerance value with
descend_always set, and reports, per port, the share of minute windows
after warm-up whose minute-scale verdict is outside, plus the same share
counting any scale and the number of alerts raised.

    python3 scripts/false_alarm_sweep.py --tolerances 0 0.05 0.1 0.2 --hours 6
"""

import argparse
import csv
import sys
from collections import defaultdict

from portids import EngineConfig, run_events, simulate
from portids.scenarios import WARMUP_S, stationary_scenario


def sweep_point(events, tolerance: float) -> tuple[dict, int]:
    alerts, engine = run_events(events, EngineConfig(tolerance=tolerance, descend_always=True),
                                keep_evaluations=True)
    tally = defaultdict(lambda: [0, 0, 0])  # minute outside, any outside, windows
    for ev in engine.evaluations:
        if ev.window_start_ms < WARMUP_S * 1000 or ev.result is None:
            continue
        t = tally[ev.node.port]
        t[0] += ev.result.verdicts[-1].outside
        t[1] += any(v.outside for v in ev.result.verdicts)
        t[2] += 1
    return tally, len(alerts)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[1])
    parser.add_argument("--tolerances", type=float, nargs="+", default=[0.0, 0.05, 0.1, 0.2, 0.3])
    parser.add_argument("--hours", type=float, default=6.0, help="simulated hours after warm-up")
    parser.add_argument("--seed", type=int, default=2024)
    args = parser.parse_args()

    events = simulate(stationary_scenario(seed=args.seed, post_warmup_s=int(args.hours * 3600)))
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["tolerance", "port", "minute_flagged", "any_scale_flagged", "windows", "alerts_total"])
    for tol in args.tolerances:
        tally, n_alerts = sweep_point(events, tol)
        for port in sorted(tally):
            minute, anyscale, n = tally[port]
            writer.writerow([tol, port, f"{minute / n:.4f}", f"{anyscale / n:.4f}", n, n_alerts])


if __name__ == "__main__":
    main()
