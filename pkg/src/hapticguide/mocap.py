"""Recorded joint-angle files: parsing and open-loop guidance analysis.

Replaces the live motion-capture stream with a CSV file (header
``t_seconds,shoulder_deg,knee_deg``; strictly increasing time, '.' decimal,
UTF-8). Replay streams the samples through the message bus, computes the
cues the selected device would have emitted at each sample, and evaluates
the trial metrics against given targets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .bus import MessageBus, TOPIC_CUFF_CMD, TOPIC_ERGOTAC_CMD, TOPIC_JOINT_STATES
from .busio import attach_guidance_processor, _joint_states_payload
from .core import GuidanceError, JOINT_ORDER, JointId, Pose, TargetPose, signed_error
from .devices import command_from_dict
from .engine import Device, DeviceConfig, Sample, TrialLog, TrialOutcome, TrialSpec
from .subject import Intent


class MocapParseError(GuidanceError):
    """A replay file row is malformed; carries the 1-based row number."""

    def __init__(self, row: int, reason: str):
        super().__init__(f"row {row}: {reason}")
        self.row = row


EXPECTED_HEADER = ("t_seconds", "shoulder_deg", "knee_deg")


@dataclass(frozen=True)
class MocapSample:
    t_s: float
    shoulder_deg: float
    knee_deg: float


def parse_mocap_csv(path: str) -> list[MocapSample]:
    """Read and validate a recorded joint-angle file."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            lines = handle.read().splitlines()
    except OSError as exc:
        raise MocapParseError(0, f"cannot read file: {exc}") from None
    if not lines:
        raise MocapParseError(1, "empty file, expected a header row")
    header = tuple(name.strip() for name in lines[0].split(","))
    if header != EXPECTED_HEADER:
        raise MocapParseError(1, f"expected header {','.join(EXPECTED_HEADER)!r}")
    samples: list[MocapSample] = []
    for row_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            raise MocapParseError(row_no, "blank row")
        parts = line.split(",")
        if len(parts) != 3:
            raise MocapParseError(row_no, f"expected 3 fields, got {len(parts)}")
        try:
            t, shoulder, knee = (float(p) for p in parts)
        except ValueError:
            raise MocapParseError(row_no, f"non-numeric field in {line!r}") from None
        if not all(map(math.isfinite, (t, shoulder, knee))):
            raise MocapParseError(row_no, "non-finite value")
        if samples and t <= samples[-1].t_s:
            raise MocapParseError(row_no, f"time not strictly increasing at t={t}")
        samples.append(MocapSample(t, shoulder, knee))
    if not samples:
        raise MocapParseError(2, "no data rows")
    return samples


def replay_guidance(
    samples: list[MocapSample],
    device: Device,
    targets: TargetPose,
    device_config: DeviceConfig | None = None,
    bus: MessageBus | None = None,
    tolerance_deg: float = 5.0,
) -> TrialLog:
    """Open-loop analysis of a recorded motion against targets.

    Every sample is published as a joint state; the guidance processor on
    the bus answers with the device commands it would have sent. The
    resulting log marks success when all guided joints end inside the
    tolerance band, with the reaching time taken at the earliest sample
    after which they stay inside it.
    """
    if not samples:
        raise MocapParseError(2, "no data rows")
    device_config = device_config or DeviceConfig()
    bus = bus or MessageBus()
    from .bus import register_standard_topics

    register_standard_topics(bus)
    initial = Pose(shoulder_deg=samples[0].shoulder_deg, knee_deg=samples[0].knee_deg)
    spec = TrialSpec(device=device, targets=targets, initial_pose=initial,
                     timeout_s=max(samples[-1].t_s - samples[0].t_s, 1e-6) + 1.0)
    attach_guidance_processor(bus, spec, device_config)
    cmd_topic = TOPIC_ERGOTAC_CMD if device is Device.ERGOTAC else TOPIC_CUFF_CMD
    received: dict[JointId, object] = {}

    def on_command(envelope):
        cue = command_from_dict(envelope.payload)
        received[cue.joint] = cue

    bus.subscribe(cmd_topic, callback=on_command, retain=False)
    guided = targets.joints()
    target_map = targets.as_dict()
    log_samples = []
    for sample in samples:
        angles = {JointId.SHOULDER: sample.shoulder_deg, JointId.KNEE: sample.knee_deg}
        bus.publish(TOPIC_JOINT_STATES, _joint_states_payload(angles), sample.t_s)
        errors = {j: signed_error(angles[j], target_map[j]) for j in guided}
        cues = {j: received[j] for j in JOINT_ORDER if j in errors}
        log_samples.append(
            Sample(
                t=sample.t_s,
                angles=angles,
                errors=errors,
                cues=cues,
                intents={j: Intent.HOLD for j in guided},
            )
        )
    in_band = [
        all(abs(s.errors[j]) <= tolerance_deg for j in guided) for s in log_samples
    ]
    if in_band[-1]:
        first = len(in_band) - 1
        while first > 0 and in_band[first - 1]:
            first -= 1
        outcome = TrialOutcome(
            success=True,
            reaching_time_s=log_samples[first].t - log_samples[0].t,
        )
    else:
        outcome = TrialOutcome(success=False)
    return TrialLog(spec, subject_seed=0, samples=tuple(log_samples), outcome=outcome)
