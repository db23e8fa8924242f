"""CSV schemas for the pipeline's tabular outputs.

Three tables: per-trial metrics, per-condition summaries, and the paired
comparison results. Floats are written with ``repr`` so parsing a file back
reproduces the in-memory values exactly; inapplicable cells stay empty.
"""

from __future__ import annotations

import csv

from .core import GuidanceError
from .engine import Device, SubBlock
from .metrics import ConditionSummary, MetricsRow, TrialMetrics
from .stats import ComparisonRow

METRICS_COLUMNS = (
    "subject_id",
    "device",
    "sub_block",
    "trial_index",
    "target_shoulder_deg",
    "target_knee_deg",
    "success",
    "confusion_pct",
    "reaching_time_s",
    "angular_distance_deg",
    "reaching_velocity_dps",
    "final_error_pct",
)

SUMMARY_COLUMNS = (
    "device",
    "sub_block",
    "index",
    "n",
    "mean",
    "std",
    "median",
    "q1",
    "q3",
    "min",
    "max",
    "success_ratio_pct",
)

COMPARE_COLUMNS = ("index", "pair", "W", "n", "method", "p", "stars")


class TableSchemaError(GuidanceError):
    """A CSV file does not match the expected schema."""


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_float(cell: str) -> float | None:
    return None if cell == "" else float(cell)


def write_metrics_csv(rows: list[MetricsRow], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(METRICS_COLUMNS)
        for row in rows:
            m = row.metrics
            writer.writerow(
                [
                    row.subject_id,
                    row.device.value,
                    row.sub_block.value,
                    row.trial_index,
                    _fmt(row.target_shoulder_deg),
                    _fmt(row.target_knee_deg),
                    _fmt(m.success),
                    _fmt(m.confusion_pct),
                    _fmt(m.reaching_time_s),
                    _fmt(m.angular_distance_deg),
                    _fmt(m.reaching_velocity_dps),
                    _fmt(m.final_error_pct),
                ]
            )


def read_metrics_csv(path: str) -> list[MetricsRow]:
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = tuple(next(reader))
        except StopIteration:
            raise TableSchemaError(f"{path}: empty file, expected header") from None
        if header != METRICS_COLUMNS:
            raise TableSchemaError(
                f"{path}: bad header; expected {','.join(METRICS_COLUMNS)}"
            )
        rows = []
        for record in reader:
            if len(record) != len(METRICS_COLUMNS):
                raise TableSchemaError(f"{path}: row with {len(record)} cells")
            cells = dict(zip(METRICS_COLUMNS, record))
            metrics = TrialMetrics(
                confusion_pct=float(cells["confusion_pct"]),
                success=cells["success"] == "true",
                reaching_time_s=_parse_float(cells["reaching_time_s"]),
                angular_distance_deg=_parse_float(cells["angular_distance_deg"]),
                reaching_velocity_dps=_parse_float(cells["reaching_velocity_dps"]),
                final_error_pct=_parse_float(cells["final_error_pct"]),
            )
            rows.append(
                MetricsRow(
                    subject_id=cells["subject_id"],
                    device=Device(cells["device"]),
                    sub_block=SubBlock(cells["sub_block"]),
                    trial_index=int(cells["trial_index"]),
                    target_shoulder_deg=_parse_float(cells["target_shoulder_deg"]),
                    target_knee_deg=_parse_float(cells["target_knee_deg"]),
                    metrics=metrics,
                )
            )
    if not rows:
        raise TableSchemaError(f"{path}: no data rows")
    return rows


def write_summary_csv(summaries: list[ConditionSummary], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(SUMMARY_COLUMNS)
        for summary in summaries:
            for index, stats in summary.stats.items():
                writer.writerow(
                    [
                        summary.device.value,
                        summary.sub_block.value,
                        index,
                        stats.n,
                        _fmt(stats.mean),
                        _fmt(stats.std),
                        _fmt(stats.median),
                        _fmt(stats.q1),
                        _fmt(stats.q3),
                        _fmt(stats.min),
                        _fmt(stats.max),
                        _fmt(summary.success_ratio_pct),
                    ]
                )


def write_compare_csv(rows: list[ComparisonRow], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(COMPARE_COLUMNS)
        for row in rows:
            writer.writerow(
                [
                    row.index,
                    row.pair,
                    _fmt(row.w_statistic),
                    row.n,
                    row.method,
                    _fmt(row.p_value),
                    row.stars,
                ]
            )


def read_compare_csv(path: str) -> list[ComparisonRow]:
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = tuple(next(reader))
        except StopIteration:
            raise TableSchemaError(f"{path}: empty file, expected header") from None
        if header != COMPARE_COLUMNS:
            raise TableSchemaError(f"{path}: bad header; expected {','.join(COMPARE_COLUMNS)}")
        rows = []
        for record in reader:
            if len(record) != len(COMPARE_COLUMNS):
                raise TableSchemaError(f"{path}: row with {len(record)} cells")
            cells = dict(zip(COMPARE_COLUMNS, record))
            rows.append(
                ComparisonRow(
                    index=cells["index"],
                    pair=cells["pair"],
                    n=int(cells["n"]),
                    w_statistic=_parse_float(cells["W"]),
                    p_value=_parse_float(cells["p"]),
                    method=cells["method"],
                    stars=cells["stars"],
                )
            )
    return rows
