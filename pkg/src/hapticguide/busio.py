"""Runs the guidance pipeline over the message bus.

Instead of calling the device policy inline, each tick publishes the joint
angles; a processor node subscribed to them resolves the signed errors into
device commands and publishes those (plus the raw per-joint error, which is
carried on its own topic for logging). The trial loop consumes the
delivered commands for the simulated subject. In-process delivery is
synchronous, so the resulting trial log is identical to the directly wired
loop.
"""

from __future__ import annotations

from .bus import (
    Envelope,
    MessageBus,
    TOPIC_CUFF_CMD,
    TOPIC_ERGOTAC_CMD,
    TOPIC_GUIDANCE_ERROR,
    TOPIC_JOINT_STATES,
    register_standard_topics,
)
from .core import JOINT_ORDER, JointId, SimClock, signed_error
from .devices import GuidanceCue, command_from_dict, command_to_dict
from .engine import DeviceConfig, Device, GuidancePolicy, TrialLog, TrialSpec, _trial_loop
from .subject import SubjectParams


def _joint_states_payload(angles: dict[JointId, float]) -> dict:
    return {
        "shoulder_deg": angles[JointId.SHOULDER],
        "knee_deg": angles[JointId.KNEE],
    }


def _error_payload(errors: dict[JointId, float]) -> dict:
    return {
        "shoulder_deg": errors.get(JointId.SHOULDER),
        "knee_deg": errors.get(JointId.KNEE),
    }


def attach_guidance_processor(
    bus: MessageBus,
    spec: TrialSpec,
    device_config: DeviceConfig,
) -> None:
    """Subscribe the error-to-command processor for one trial.

    On every joint-state message it computes the guided joints' errors,
    publishes them on the error topic, and publishes one resolved command
    per guided joint on the device's command topic.
    """
    policy = GuidancePolicy(spec.device, device_config)
    targets = spec.targets.as_dict()
    cmd_topic = TOPIC_ERGOTAC_CMD if spec.device is Device.ERGOTAC else TOPIC_CUFF_CMD

    def on_joint_states(envelope: Envelope) -> None:
        angles = {
            JointId.SHOULDER: envelope.payload["shoulder_deg"],
            JointId.KNEE: envelope.payload["knee_deg"],
        }
        errors = {j: signed_error(angles[j], targets[j]) for j in JOINT_ORDER if j in targets}
        bus.publish(TOPIC_GUIDANCE_ERROR, _error_payload(errors), envelope.stamp)
        for joint, cue in policy.cues(errors).items():
            bus.publish(cmd_topic, command_to_dict(cue), envelope.stamp)

    bus.subscribe(TOPIC_JOINT_STATES, callback=on_joint_states, retain=False)


def run_trial_over_bus(
    spec: TrialSpec,
    subject_params: SubjectParams,
    device_config: DeviceConfig,
    clock: SimClock,
    bus: MessageBus,
) -> TrialLog:
    """Execute one trial with all sensor/feedback traffic on the bus."""
    register_standard_topics(bus)
    attach_guidance_processor(bus, spec, device_config)
    received: dict[JointId, GuidanceCue] = {}
    cmd_topic = TOPIC_ERGOTAC_CMD if spec.device is Device.ERGOTAC else TOPIC_CUFF_CMD

    def on_command(envelope: Envelope) -> None:
        cue = command_from_dict(envelope.payload)
        received[cue.joint] = cue

    bus.subscribe(cmd_topic, callback=on_command, retain=False)

    def cue_source(t, angles, errors):
        bus.publish(TOPIC_JOINT_STATES, _joint_states_payload(angles), t)
        # synchronous delivery: the processor has already answered
        return {j: received[j] for j in JOINT_ORDER if j in errors}

    return _trial_loop(spec, subject_params, clock, cue_source)
