"""Command-line entry point.

Subcommands:
  simulate  run the full randomized session for every configured subject
  replay    analyze a recorded joint-angle CSV against targets
  metrics   recompute the per-trial metrics table from stored trial logs
  compare   paired Wilcoxon comparisons from a metrics table
  report    boxplot SVGs from a metrics table (+ optional comparisons)

Device and subject parameters come from a YAML config file; flags cover
paths, seed, and device selection. All outputs are deterministic for a
given config.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

from .config import ConfigError, SessionConfig, default_config, load_config
from .core import GuidanceError, SimClock, TargetPose, derive_seed
from .engine import (
    Device,
    build_session,
    log_from_dict,
    log_to_dict,
    run_session,
)
from .metrics import MetricsRow, aggregate, row_from_log
from .mocap import parse_mocap_csv, replay_guidance
from .bus import MessageBus, TOPIC_CUFF_CMD, TOPIC_ERGOTAC_CMD, TOPIC_JOINT_STATES
from .report import generate_reports
from .stats import compare_conditions
from .tables import (
    read_compare_csv,
    read_metrics_csv,
    write_compare_csv,
    write_metrics_csv,
    write_summary_csv,
)


def _dump_log(log, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(log_to_dict(log), handle, sort_keys=True, separators=(",", ":"))
        handle.write("\n")


def run_configured_session(
    config: SessionConfig, subject_id: str, params
) -> list:
    """One subject's full session with the per-participant protocol seed."""
    clock = SimClock(dt=config.dt_s)
    session_seed = derive_seed(config.seed, 2000 + int(subject_id[1:]))
    session = build_session(
        session_seed, timeout_s=config.timeout_s, initial_pose=config.initial_pose
    )
    return run_session(session, params, config.devices, clock)


def cmd_simulate(args) -> int:
    config = load_config(args.config) if args.config else default_config()
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    out_dir = args.out or config.out_dir
    logs_dir = os.path.join(out_dir, "logs")
    os.makedirs(logs_dir, exist_ok=True)
    rows: list[MetricsRow] = []
    for subject_id, params in zip(config.subject_ids(), config.subjects):
        logs = run_configured_session(config, subject_id, params)
        subject_dir = os.path.join(logs_dir, subject_id)
        os.makedirs(subject_dir, exist_ok=True)
        for log in logs:  # write logs per subject to keep memory flat
            _dump_log(log, os.path.join(subject_dir, f"trial_{log.spec.trial_index:02d}.json"))
            rows.append(
                row_from_log(
                    subject_id, log, tolerance_deg=config.devices.cuff_tolerance_deg
                )
            )
    write_metrics_csv(rows, os.path.join(out_dir, "metrics.csv"))
    write_summary_csv(aggregate(rows), os.path.join(out_dir, "summary.csv"))
    write_compare_csv(compare_conditions(rows), os.path.join(out_dir, "compare.csv"))
    n_trials = len(rows)
    n_success = sum(1 for r in rows if r.metrics.success)
    print(
        f"simulated {len(config.subjects)} subjects, {n_trials} trials "
        f"({n_success} successful); outputs in {out_dir}"
    )
    return 0


def cmd_replay(args) -> int:
    config = load_config(args.config) if args.config else default_config()
    out_dir = args.out or config.out_dir
    targets = TargetPose(shoulder_deg=args.shoulder_target, knee_deg=args.knee_target)
    samples = parse_mocap_csv(args.input)
    bus = MessageBus()
    os.makedirs(out_dir, exist_ok=True)
    cue_log_path = os.path.join(out_dir, "replay_cues.jsonl")
    from .bus import register_standard_topics

    register_standard_topics(bus)
    with open(cue_log_path, "w", encoding="utf-8") as sink:
        recorder = bus.record(
            [TOPIC_JOINT_STATES, TOPIC_ERGOTAC_CMD, TOPIC_CUFF_CMD], sink
        )
        log = replay_guidance(
            samples,
            Device(args.device),
            targets,
            config.devices,
            bus=bus,
            tolerance_deg=config.devices.cuff_tolerance_deg,
        )
        recorder.close()
    from .metrics import compute_metrics

    metrics = compute_metrics(log, tolerance_deg=config.devices.cuff_tolerance_deg)
    _dump_log(log, os.path.join(out_dir, "replay_log.json"))
    outcome = "success" if metrics.success else "timeout"
    print(f"replayed {len(samples)} samples ({outcome}); cue log in {cue_log_path}")
    print(f"confusion {metrics.confusion_pct:.2f}%", end="")
    if metrics.success:
        print(
            f", reaching time {metrics.reaching_time_s:.3f} s, "
            f"distance {metrics.angular_distance_deg:.2f} deg"
        )
    else:
        print(f", final error {metrics.final_error_pct:.2f}%")
    return 0


def cmd_metrics(args) -> int:
    config = load_config(args.config) if args.config else default_config()
    out_dir = args.out or config.out_dir
    rows: list[MetricsRow] = []
    logs_dir = args.input
    for subject_id in sorted(os.listdir(logs_dir)):
        subject_dir = os.path.join(logs_dir, subject_id)
        if not os.path.isdir(subject_dir):
            continue
        for name in sorted(os.listdir(subject_dir)):
            if not name.endswith(".json"):
                continue
            with open(os.path.join(subject_dir, name), "r", encoding="utf-8") as handle:
                log = log_from_dict(json.load(handle))
            rows.append(
                row_from_log(
                    subject_id, log, tolerance_deg=config.devices.cuff_tolerance_deg
                )
            )
    if not rows:
        print(f"no trial logs found under {logs_dir}", file=sys.stderr)
        return 1
    os.makedirs(out_dir, exist_ok=True)
    write_metrics_csv(rows, os.path.join(out_dir, "metrics.csv"))
    write_summary_csv(aggregate(rows), os.path.join(out_dir, "summary.csv"))
    print(f"{len(rows)} trials -> {os.path.join(out_dir, 'metrics.csv')}")
    return 0


def cmd_compare(args) -> int:
    rows = read_metrics_csv(args.input)
    out_dir = args.out or "."
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "compare.csv")
    write_compare_csv(compare_conditions(rows), path)
    print(f"comparison table -> {path}")
    return 0


def cmd_report(args) -> int:
    rows = read_metrics_csv(args.input)
    comparisons = read_compare_csv(args.compare) if args.compare else None
    out_dir = args.out or "."
    paths = generate_reports(rows, out_dir, comparisons)
    print(f"{len(paths)} plots -> {out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hapticguide",
        description="Closed-loop haptic postural guidance simulator and evaluator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run the simulated session protocol")
    p.add_argument("--config", help="YAML session config")
    p.add_argument("--seed", type=int, help="override the protocol seed")
    p.add_argument("--out", help="output directory (overrides config)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("replay", help="analyze a recorded joint-angle CSV")
    p.add_argument("--input", required=True, help="CSV: t_seconds,shoulder_deg,knee_deg")
    p.add_argument("--device", required=True, choices=[d.value for d in Device])
    p.add_argument("--shoulder-target", type=float, help="shoulder target, degrees")
    p.add_argument("--knee-target", type=float, help="knee target, degrees")
    p.add_argument("--config", help="YAML session config")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("metrics", help="recompute metrics from stored trial logs")
    p.add_argument("--input", required=True, help="logs directory (one subdir per subject)")
    p.add_argument("--config", help="YAML session config")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("compare", help="paired Wilcoxon comparisons from metrics.csv")
    p.add_argument("--input", required=True, help="metrics CSV path")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("report", help="boxplot SVGs from metrics.csv")
    p.add_argument("--input", required=True, help="metrics CSV path")
    p.add_argument("--compare", help="comparison CSV for star annotations")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except GuidanceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
