"""Per-trial performance indices and per-condition aggregation.

Six indices are computed from a trial log, split into three applicability
groups: confusion index and success apply to every trial, reaching time /
angular distance / reaching velocity only to successful trials, and final
error only to failed ones. Exactly one group beyond the always-applicable
pair is defined per trial.

Conventions chosen here (kept behind single functions so alternates can be
swapped): reaching velocity is net displacement over duration (the
path-based variant is available separately), and final error is normalized
by the initially required displacement, which makes it dimensionless and
comparable across targets.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import GuidanceError, InvalidInputError
from .devices import CuffCommand, ErgoTacCommand, Slide, VibrationLevel
from .engine import Device, SubBlock, TrialLog

# A per-tick angle change at or below this is treated as sensor noise, not
# intentional motion, when counting opposite-direction ticks.
MOTION_DEADBAND_DEG = 0.01

# |error| must exceed this for a tick to count as actively guided.
DEFAULT_GUIDANCE_TOLERANCE_DEG = 5.0


class NotApplicableError(GuidanceError):
    """An index from the wrong applicability group was requested."""


@dataclass(frozen=True)
class TrialMetrics:
    """The six indices for one trial; group-inapplicable entries are None."""

    confusion_pct: float
    success: bool
    reaching_time_s: float | None
    angular_distance_deg: float | None
    reaching_velocity_dps: float | None
    final_error_pct: float | None


def _cue_is_active(cue) -> bool:
    if isinstance(cue, ErgoTacCommand):
        return cue.level is not VibrationLevel.OFF
    if isinstance(cue, CuffCommand):
        return cue.slide is not Slide.NONE
    return False


def _sign(x: float) -> int:
    return (x > 0) - (x < 0)


def confusion_index(
    log: TrialLog,
    tolerance_deg: float = DEFAULT_GUIDANCE_TOLERANCE_DEG,
    deadband_deg: float = MOTION_DEADBAND_DEG,
    pooled: bool = False,
) -> float:
    """Percent of actively guided time spent moving against the guidance.

    A tick counts as active for a joint when its cue is directional and the
    error magnitude exceeds the tolerance; it counts as opposite when the
    joint moved more than the deadband against the error sign during that
    tick. Per-joint percentages are averaged over the guided joints
    (``pooled=True`` pools ticks across joints instead). Zero when no tick
    was active.
    """
    if len(log.samples) < 2:
        raise InvalidInputError("confusion index needs at least two samples")
    guided = log.spec.guided_joints()
    per_joint = []
    total_active = 0
    total_opposite = 0
    for joint in guided:
        active = 0
        opposite = 0
        for k in range(len(log.samples) - 1):
            sample = log.samples[k]
            cue = sample.cues.get(joint)
            error = sample.errors[joint]
            if cue is None or not _cue_is_active(cue) or abs(error) <= tolerance_deg:
                continue
            active += 1
            delta = log.samples[k + 1].angles[joint] - sample.angles[joint]
            if abs(delta) > deadband_deg and _sign(delta) == -_sign(error):
                opposite += 1
        per_joint.append(100.0 * opposite / active if active else 0.0)
        total_active += active
        total_opposite += opposite
    if pooled:
        return 100.0 * total_opposite / total_active if total_active else 0.0
    return sum(per_joint) / len(per_joint)


def success(log: TrialLog) -> bool:
    """True when the goal was declared within the timeout."""
    return log.outcome.success


def _require_success(log: TrialLog, index: str) -> None:
    if not log.outcome.success:
        raise NotApplicableError(f"{index} is defined only for successful trials")


def reaching_time(log: TrialLog) -> float:
    """Seconds from trial start to the goal declaration."""
    _require_success(log, "reaching time")
    return log.samples[-1].t - log.samples[0].t


def angular_distance(log: TrialLog) -> float:
    """Total travelled angular path, degrees, summed over guided joints."""
    _require_success(log, "angular distance")
    total = 0.0
    for joint in log.spec.guided_joints():
        for k in range(len(log.samples) - 1):
            total += abs(log.samples[k + 1].angles[joint] - log.samples[k].angles[joint])
    return total


def reaching_velocity(log: TrialLog) -> float:
    """Net displacement over reaching time, degrees/second.

    Net displacement sums |target - initial| over the guided joints; the
    travelled-path variant is :func:`path_velocity`.
    """
    _require_success(log, "reaching velocity")
    duration = reaching_time(log)
    net = sum(
        abs(target - log.samples[0].angles[joint])
        for joint, target in log.spec.targets.items()
    )
    if duration == 0.0:
        return 0.0
    return net / duration


def path_velocity(log: TrialLog) -> float:
    """Travelled path over reaching time, degrees/second."""
    duration = reaching_time(log)
    if duration == 0.0:
        return 0.0
    return angular_distance(log) / duration


def final_error(log: TrialLog) -> float:
    """Remaining displacement at timeout as a percent of the required one.

    100% means the subject ended as far from the goal as it started; 0%
    means it ended on the goal despite never declaring. When no displacement
    was required at all, returns 0 if the final pose is on target, else 100.
    """
    if log.outcome.success:
        raise NotApplicableError("final error is defined only for failed trials")
    remaining = 0.0
    required = 0.0
    for joint, target in log.spec.targets.items():
        remaining += abs(log.samples[-1].angles[joint] - target)
        required += abs(log.samples[0].angles[joint] - target)
    if required == 0.0:
        return 0.0 if remaining == 0.0 else 100.0
    return 100.0 * remaining / required


def compute_metrics(
    log: TrialLog,
    tolerance_deg: float = DEFAULT_GUIDANCE_TOLERANCE_DEG,
    deadband_deg: float = MOTION_DEADBAND_DEG,
) -> TrialMetrics:
    """All six indices for one trial, respecting the applicability groups."""
    if success(log):
        return TrialMetrics(
            confusion_pct=confusion_index(log, tolerance_deg, deadband_deg),
            success=True,
            reaching_time_s=reaching_time(log),
            angular_distance_deg=angular_distance(log),
            reaching_velocity_dps=reaching_velocity(log),
            final_error_pct=None,
        )
    return TrialMetrics(
        confusion_pct=confusion_index(log, tolerance_deg, deadband_deg),
        success=False,
        reaching_time_s=None,
        angular_distance_deg=None,
        reaching_velocity_dps=None,
        final_error_pct=final_error(log),
    )


# --- aggregation -------------------------------------------------------------

INDEX_NAMES = (
    "confusion_pct",
    "success_ratio_pct",
    "reaching_time_s",
    "angular_distance_deg",
    "reaching_velocity_dps",
    "final_error_pct",
)


@dataclass(frozen=True)
class MetricsRow:
    """One trial's metrics plus its condition labels."""

    subject_id: str
    device: Device
    sub_block: SubBlock
    trial_index: int
    target_shoulder_deg: float | None
    target_knee_deg: float | None
    metrics: TrialMetrics


def row_from_log(subject_id: str, log: TrialLog, **metric_kwargs) -> MetricsRow:
    spec = log.spec
    if spec.sub_block is None or spec.trial_index is None:
        raise InvalidInputError("session labels missing from the trial spec")
    return MetricsRow(
        subject_id=subject_id,
        device=spec.device,
        sub_block=spec.sub_block,
        trial_index=spec.trial_index,
        target_shoulder_deg=spec.targets.shoulder_deg,
        target_knee_deg=spec.targets.knee_deg,
        metrics=compute_metrics(log, **metric_kwargs),
    )


def _index_value(row: MetricsRow, index: str) -> float | None:
    m = row.metrics
    if index == "confusion_pct":
        return m.confusion_pct
    if index == "success_ratio_pct":
        return 100.0 if m.success else 0.0
    if index == "reaching_time_s":
        return m.reaching_time_s
    if index == "angular_distance_deg":
        return m.angular_distance_deg
    if index == "reaching_velocity_dps":
        return m.reaching_velocity_dps
    if index == "final_error_pct":
        return m.final_error_pct
    raise InvalidInputError(f"unknown index {index!r}")


@dataclass(frozen=True)
class IndexStats:
    """Summary statistics of one index over one condition."""

    n: int
    mean: float
    std: float
    median: float
    q1: float
    q3: float
    min: float
    max: float


@dataclass(frozen=True)
class ConditionSummary:
    """Per-condition statistics for every applicable index."""

    device: Device
    sub_block: SubBlock
    n_trials: int
    success_ratio_pct: float
    stats: dict[str, IndexStats]


def _summarize(values: list[float]) -> IndexStats:
    arr = np.asarray(values, dtype=float)
    q1, median, q3 = np.percentile(arr, [25.0, 50.0, 75.0])  # linear interpolation
    return IndexStats(
        n=len(values),
        mean=float(arr.mean()),
        std=float(arr.std()),
        median=float(median),
        q1=float(q1),
        q3=float(q3),
        min=float(arr.min()),
        max=float(arr.max()),
    )


def aggregate(rows: list[MetricsRow], by_subject: bool = False) -> list[ConditionSummary]:
    """Group rows by (device, sub-block) and summarize each index.

    ``by_subject=True`` first averages per subject so every subject
    contributes one value per index (the form used for paired comparisons
    and the report boxplots). Indices with no applicable trials in a group
    are dropped with a warning.
    """
    if not rows:
        raise InvalidInputError("no rows to aggregate")
    summaries = []
    for device in Device:
        for sub_block in SubBlock:
            group = [r for r in rows if r.device is device and r.sub_block is sub_block]
            if not group:
                continue
            stats: dict[str, IndexStats] = {}
            for index in INDEX_NAMES:
                if by_subject:
                    values = [
                        v
                        for subject in sorted({r.subject_id for r in group})
                        if (v := subject_value(group, subject, index)) is not None
                    ]
                else:
                    values = [
                        v for r in group if (v := _index_value(r, index)) is not None
                    ]
                if not values:
                    warnings.warn(
                        f"no {index} values for ({device.value}, {sub_block.value}); "
                        "index skipped",
                        stacklevel=2,
                    )
                    continue
                stats[index] = _summarize(values)
            n_success = sum(1 for r in group if r.metrics.success)
            summaries.append(
                ConditionSummary(
                    device=device,
                    sub_block=sub_block,
                    n_trials=len(group),
                    success_ratio_pct=100.0 * n_success / len(group),
                    stats=stats,
                )
            )
    return summaries


def subject_value(rows: list[MetricsRow], subject_id: str, index: str) -> float | None:
    """One subject's value of an index over a set of rows.

    Mean over the trials where the index applies; None when it never does
    (e.g. final error for a subject with no failed trial).
    """
    values = [
        v
        for r in rows
        if r.subject_id == subject_id and (v := _index_value(r, index)) is not None
    ]
    if not values:
        return None
    return sum(values) / len(values)
