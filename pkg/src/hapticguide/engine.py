"""Closed-loop trial execution and protocol orchestration.

A trial runs the guidance loop at a fixed timestep: read joint angles,
compute per-joint signed errors, emit device cues under the device-specific
multi-joint policy, let the simulated subject perceive and move, and log
one sample per tick until the subject declares the goal or the timeout
fires. A session reproduces the randomized block protocol: two device
blocks, three sub-blocks each (shoulder only, knee only, both joints), and
three targets per sub-block, all permuted by a seed.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from enum import Enum

from .core import (
    InvalidInputError,
    JOINT_ORDER,
    JOINT_RANGES,
    JointId,
    Pose,
    SimClock,
    TargetPose,
    derive_seed,
    signed_error,
)
from .devices import (
    CuffCommand,
    ErgoTacCommand,
    ErgoTacUnit,
    GuidanceCue,
    Placement,
    SpotThresholds,
    VibrationLevel,
    command_from_dict,
    command_to_dict,
    cuff_command,
    ergotac_spot,
)
from .subject import Intent, SubjectParams, SubjectState


class Device(Enum):
    """Which haptic device drives a trial."""

    ERGOTAC = "ergotac"
    CUFF = "cuff"


class SubBlock(Enum):
    """Guidance condition within a device block."""

    SHOULDER_ONLY = "SH"
    KNEE_ONLY = "KN"
    MULTI_JOINT = "SH+KN"


# Reference targets per sub-block; a session contains exactly these.
SHOULDER_TARGETS = (-10.0, 45.0, 90.0)
KNEE_TARGETS = (30.0, 80.0, 115.0)
MULTI_TARGETS = ((20.0, 110.0), (55.0, 70.0), (100.0, 40.0))

SUB_BLOCK_TARGETS: dict[SubBlock, tuple[TargetPose, ...]] = {
    SubBlock.SHOULDER_ONLY: tuple(TargetPose(shoulder_deg=a) for a in SHOULDER_TARGETS),
    SubBlock.KNEE_ONLY: tuple(TargetPose(knee_deg=a) for a in KNEE_TARGETS),
    SubBlock.MULTI_JOINT: tuple(
        TargetPose(shoulder_deg=s, knee_deg=k) for s, k in MULTI_TARGETS
    ),
}

DEFAULT_TIMEOUT_S = 90.0


@dataclass(frozen=True)
class DeviceConfig:
    """Tunable device parameters shared by all trials of a session."""

    spot: SpotThresholds = SpotThresholds()
    pulse_period_s: float = 0.8
    cuff_tolerance_deg: float = 5.0

    def __post_init__(self) -> None:
        if self.pulse_period_s <= 0:
            raise InvalidInputError("pulse period must be positive")
        if self.cuff_tolerance_deg <= 0:
            raise InvalidInputError("cuff tolerance must be positive")


@dataclass(frozen=True)
class TrialSpec:
    """One guidance trial: device, targets, timeout, and starting posture."""

    device: Device
    targets: TargetPose
    timeout_s: float = DEFAULT_TIMEOUT_S
    initial_pose: Pose = Pose()
    sub_block: SubBlock | None = None
    trial_index: int | None = None

    def __post_init__(self) -> None:
        if not self.timeout_s > 0:
            raise InvalidInputError("timeout must be positive")
        for joint, target in self.targets.items():
            lo, hi = JOINT_RANGES[joint]
            if not lo <= target <= hi:
                raise InvalidInputError(
                    f"target {target} deg outside {joint.value} range [{lo}, {hi}]"
                )

    def guided_joints(self) -> tuple[JointId, ...]:
        return self.targets.joints()


@dataclass(frozen=True)
class TrialOutcome:
    """Success with the declaration time, or timeout."""

    success: bool
    reaching_time_s: float | None = None

    def __post_init__(self) -> None:
        if self.success != (self.reaching_time_s is not None):
            raise InvalidInputError("reaching time present iff the trial succeeded")


@dataclass(frozen=True)
class Sample:
    """State of one tick: angles/errors at t, cue and intent active over [t, t+dt)."""

    t: float
    angles: dict[JointId, float]
    errors: dict[JointId, float]
    cues: dict[JointId, GuidanceCue]
    intents: dict[JointId, Intent]


@dataclass(frozen=True)
class TrialLog:
    """Full timestamped record of one trial."""

    spec: TrialSpec
    subject_seed: int
    samples: tuple[Sample, ...]
    outcome: TrialOutcome


@dataclass(frozen=True)
class SessionSpec:
    """A seeded, fully ordered list of trials covering the whole protocol."""

    seed: int
    trials: tuple[TrialSpec, ...]


def ergotac_schedule(
    errors: dict[JointId, float],
    thresholds: SpotThresholds,
    previous_active: JointId | None = None,
) -> ErgoTacCommand | None:
    """Pick the single ErgoTac command for this tick, or None when all joints
    are inside tolerance.

    Only one unit vibrates at a time: among joints outside tolerance the one
    with the largest |error| is selected, with hysteresis - a previously
    active joint keeps the guidance until it enters tolerance, so the cue
    does not chatter between joints.
    """
    candidates = {
        j: e for j, e in errors.items() if abs(e) > thresholds.tolerance_deg
    }
    if not candidates:
        return None
    if previous_active is not None and previous_active in candidates:
        selected = previous_active
    else:
        selected = max(
            candidates, key=lambda j: (abs(candidates[j]), -JOINT_ORDER.index(j))
        )
    return ergotac_spot(selected, candidates[selected], thresholds)


def cuff_schedule(
    errors: dict[JointId, float], tolerance_deg: float
) -> dict[JointId, CuffCommand]:
    """Independent CUFF commands for every guided joint (simultaneous cues)."""
    return {j: cuff_command(j, e, tolerance_deg) for j, e in errors.items()}


def _ergotac_off(joint: JointId) -> ErgoTacCommand:
    return ErgoTacCommand(ErgoTacUnit(joint, Placement.FRONT), VibrationLevel.OFF)


class GuidancePolicy:
    """Per-tick cue computation for one device, with arbitration state."""

    def __init__(self, device: Device, config: DeviceConfig):
        self.device = device
        self.config = config
        self.active: JointId | None = None

    def cues(self, errors: dict[JointId, float]) -> dict[JointId, GuidanceCue]:
        if self.device is Device.CUFF:
            return cuff_schedule(errors, self.config.cuff_tolerance_deg)
        cmd = ergotac_schedule(errors, self.config.spot, self.active)
        self.active = cmd.unit.joint if cmd is not None else None
        out: dict[JointId, GuidanceCue] = {}
        for joint in errors:
            if cmd is not None and joint is cmd.unit.joint:
                out[joint] = cmd
            else:
                out[joint] = _ergotac_off(joint)
        return out


def _trial_loop(
    spec: TrialSpec,
    subject_params: SubjectParams,
    clock: SimClock,
    cue_source,
) -> TrialLog:
    targets = spec.targets.as_dict()
    guided = [j for j in JOINT_ORDER if j in targets]
    state = SubjectState(targets, spec.initial_pose.as_dict(), subject_params, clock.dt)
    samples: list[Sample] = []
    max_ticks = round(spec.timeout_s / clock.dt)
    outcome = None
    for tick in range(max_ticks + 1):
        t = clock.time_at(tick)
        angles = dict(state.angles)
        errors = {j: signed_error(angles[j], targets[j]) for j in guided}
        cues = cue_source(t, angles, errors)
        intents = {j: state.intents[j] for j in guided}
        if state.declare_done(guided):
            samples.append(Sample(t, angles, errors, cues, intents))
            outcome = TrialOutcome(success=True, reaching_time_s=t)
            break
        if tick == max_ticks:
            samples.append(Sample(t, angles, errors, cues, intents))
            outcome = TrialOutcome(success=False)
            break
        for joint in guided:
            state.perceive(cues[joint], t)
        state.step(clock.dt)
        samples.append(
            Sample(t, angles, errors, cues, {j: state.intents[j] for j in guided})
        )
    return TrialLog(spec, subject_params.seed, tuple(samples), outcome)


def run_trial(
    spec: TrialSpec,
    subject_params: SubjectParams,
    device_config: DeviceConfig | None = None,
    clock: SimClock | None = None,
    bus=None,
) -> TrialLog:
    """Execute one closed-loop trial and return its log.

    Timeout is an outcome, not an error. With ``bus`` given, joint states
    and device commands travel through the message bus (a processor node
    computes the cues from the published joint states); the resulting log is
    identical to the directly wired loop.
    """
    device_config = device_config or DeviceConfig()
    clock = clock or SimClock()
    if bus is not None:
        from . import busio

        return busio.run_trial_over_bus(spec, subject_params, device_config, clock, bus)
    policy = GuidancePolicy(spec.device, device_config)

    def cue_source(t, angles, errors):
        return policy.cues(errors)

    return _trial_loop(spec, subject_params, clock, cue_source)


def build_session(
    seed: int,
    timeout_s: float = DEFAULT_TIMEOUT_S,
    initial_pose: Pose = Pose(),
) -> SessionSpec:
    """Materialize the randomized protocol for one participant.

    Block order (devices), sub-block order within each block, and target
    order within each sub-block are permutations drawn from the seed. The
    multiset of trials is the same for every seed: 2 devices x 3 sub-blocks
    x 3 targets = 18 trials.
    """
    rng = random.Random(seed)
    devices = list(Device)
    rng.shuffle(devices)
    trials: list[TrialSpec] = []
    for device in devices:
        sub_blocks = list(SubBlock)
        rng.shuffle(sub_blocks)
        for sub_block in sub_blocks:
            targets = list(SUB_BLOCK_TARGETS[sub_block])
            rng.shuffle(targets)
            for pose in targets:
                trials.append(
                    TrialSpec(
                        device=device,
                        targets=pose,
                        timeout_s=timeout_s,
                        initial_pose=initial_pose,
                        sub_block=sub_block,
                        trial_index=len(trials),
                    )
                )
    return SessionSpec(seed=seed, trials=tuple(trials))


def run_session(
    session: SessionSpec,
    subject_params: SubjectParams,
    device_config: DeviceConfig | None = None,
    clock: SimClock | None = None,
    bus=None,
) -> list[TrialLog]:
    """Run every trial of a session in protocol order.

    Each trial gets its own subject randomness stream derived from the
    subject seed and the trial index, so any single trial can be re-run
    bit-exactly from its log's recorded seed.
    """
    logs = []
    for spec in session.trials:
        trial_params = replace(
            subject_params, seed=derive_seed(subject_params.seed, spec.trial_index or 0)
        )
        logs.append(run_trial(spec, trial_params, device_config, clock, bus=bus))
    return logs


# --- log (de)serialization -------------------------------------------------

_INTENT_NAMES = {i: i.value for i in Intent}


def log_to_dict(log: TrialLog) -> dict:
    """Plain-data form of a trial log, stable under JSON round-trips."""
    spec = log.spec
    return {
        "spec": {
            "device": spec.device.value,
            "targets": {j.value: a for j, a in spec.targets.items()},
            "timeout_s": spec.timeout_s,
            "initial_pose": {
                "shoulder_deg": spec.initial_pose.shoulder_deg,
                "knee_deg": spec.initial_pose.knee_deg,
            },
            "sub_block": spec.sub_block.value if spec.sub_block else None,
            "trial_index": spec.trial_index,
        },
        "subject_seed": log.subject_seed,
        "outcome": {
            "success": log.outcome.success,
            "reaching_time_s": log.outcome.reaching_time_s,
        },
        "samples": [
            {
                "t": s.t,
                "angles": {j.value: a for j, a in s.angles.items()},
                "errors": {j.value: e for j, e in s.errors.items()},
                "cues": {j.value: command_to_dict(c) for j, c in s.cues.items()},
                "intents": {j.value: i.value for j, i in s.intents.items()},
            }
            for s in log.samples
        ],
    }


def log_from_dict(data: dict) -> TrialLog:
    """Inverse of :func:`log_to_dict`."""
    spec_data = data["spec"]
    targets = spec_data["targets"]
    spec = TrialSpec(
        device=Device(spec_data["device"]),
        targets=TargetPose(
            shoulder_deg=targets.get("shoulder"), knee_deg=targets.get("knee")
        ),
        timeout_s=spec_data["timeout_s"],
        initial_pose=Pose(**spec_data["initial_pose"]),
        sub_block=SubBlock(spec_data["sub_block"]) if spec_data["sub_block"] else None,
        trial_index=spec_data["trial_index"],
    )
    samples = tuple(
        Sample(
            t=s["t"],
            angles={JointId(j): a for j, a in s["angles"].items()},
            errors={JointId(j): e for j, e in s["errors"].items()},
            cues={JointId(j): command_from_dict(c) for j, c in s["cues"].items()},
            intents={JointId(j): Intent(i) for j, i in s["intents"].items()},
        )
        for s in data["samples"]
    )
    outcome = TrialOutcome(
        success=data["outcome"]["success"],
        reaching_time_s=data["outcome"]["reaching_time_s"],
    )
    return TrialLog(spec, data["subject_seed"], samples, outcome)
