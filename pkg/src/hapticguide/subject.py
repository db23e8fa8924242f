"""Simulated human responding to haptic guidance cues.

The model is deliberately simple: cues are perceived after a reaction
delay, the cued joint moves at constant angular speed toward the indicated
direction and settles on the goal, and the goal is "declared" after the
joint has rested inside the declare band for a hold time. A seeded per-cue
misread probability occasionally inverts the perceived direction, which is
what produces nonzero confusion in the metrics.

Cue perception is transition-based: a new pending intent (and a fresh
misread draw) is created only when the perceivable content of a joint's cue
changes (vibration placement/level for ErgoTac, slide direction for the
CUFF). The continuously varying squeeze force does not count as a change,
so a misread persists until the next perceivable transition.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from enum import Enum

from .core import InvalidInputError, JOINT_ORDER, JointId, clamp_to_joint_range
from .devices import CuffCommand, ErgoTacCommand, GuidanceCue, VibrationLevel


class Intent(Enum):
    """What the subject is currently trying to do with a joint."""

    MOVE_UP = "move_up"
    MOVE_DOWN = "move_down"
    HOLD = "hold"


_INTENT_BY_DIRECTION = {1: Intent.MOVE_UP, -1: Intent.MOVE_DOWN, 0: Intent.HOLD}


@dataclass(frozen=True)
class SubjectParams:
    """Behavioral parameters of the simulated subject."""

    reaction_delay_s: float = 0.3
    angular_speed_dps: float = 30.0
    misread_prob: float = 0.05
    declare_tolerance_deg: float = 5.0
    hold_time_s: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.reaction_delay_s < 0 or self.hold_time_s < 0 or self.declare_tolerance_deg < 0:
            raise InvalidInputError("subject time/tolerance parameters must be nonnegative")
        if not self.angular_speed_dps > 0:
            raise InvalidInputError("angular speed must be positive")
        if not 0.0 <= self.misread_prob <= 1.0:
            raise InvalidInputError("misread probability must lie in [0, 1]")


def cue_direction(cue: GuidanceCue) -> int:
    """Movement direction a cue asks for: +1 up/forward, -1 down, 0 hold.

    ErgoTac cues are repulsive: vibration on the BACK unit pushes the limb
    forward (+1). CUFF slides point in the direction of the correction.
    """
    if isinstance(cue, ErgoTacCommand):
        if cue.level is VibrationLevel.OFF:
            return 0
        return 1 if cue.unit.placement.value == "back" else -1
    if isinstance(cue, CuffCommand):
        return cue.slide.sign
    raise InvalidInputError(f"unknown cue type {type(cue).__name__}")


def _cue_signature(cue: GuidanceCue) -> tuple:
    # Perceivable content only; OFF hides the placement.
    if isinstance(cue, ErgoTacCommand):
        if cue.level is VibrationLevel.OFF:
            return ("ergotac", "off")
        return ("ergotac", cue.unit.placement.value, cue.level.name)
    return ("cuff", cue.slide.value)


class SubjectState:
    """Mutable per-trial state of the simulated subject.

    Owned by a single trial execution; trials run in parallel only with
    independent states and seeds.
    """

    def __init__(
        self,
        targets: dict[JointId, float],
        initial_angles: dict[JointId, float],
        params: SubjectParams,
        dt: float,
    ) -> None:
        if not targets:
            raise InvalidInputError("at least one joint must have a target")
        if not (math.isfinite(dt) and dt > 0):
            raise InvalidInputError(f"dt must be positive and finite, got {dt!r}")
        self.params = params
        self.dt = dt
        self.targets = dict(targets)
        self.angles: dict[JointId, float] = {
            j: clamp_to_joint_range(j, initial_angles[j]) for j in JOINT_ORDER
        }
        self.intents: dict[JointId, Intent] = {j: Intent.HOLD for j in JOINT_ORDER}
        self._in_tol_ticks: dict[JointId, int] = {j: 0 for j in JOINT_ORDER}
        self._pending: dict[JointId, list[tuple[float, Intent]]] = {j: [] for j in JOINT_ORDER}
        self._last_signature: dict[JointId, tuple | None] = {j: None for j in JOINT_ORDER}
        self._rng = random.Random(params.seed)
        self._ticks = 0
        self._hold_ticks = max(0, math.ceil(params.hold_time_s / dt - 1e-9))

    @property
    def t(self) -> float:
        """Current subject time, seconds (microsecond grid)."""
        return round(self._ticks * self.dt, 6)

    def time_in_tolerance_s(self, joint: JointId) -> float:
        return round(self._in_tol_ticks[joint] * self.dt, 6)

    def perceive(self, cue: GuidanceCue, t_s: float) -> None:
        """Register a cue seen at time ``t_s``.

        Becomes the joint's intent one reaction delay later. A directional
        cue transition may be misread (direction inverted) with the seeded
        per-transition probability.
        """
        joint = cue.joint
        if joint not in self.targets:
            raise InvalidInputError(f"cue addressed to unguided joint {joint.value}")
        signature = _cue_signature(cue)
        if signature == self._last_signature[joint]:
            return
        self._last_signature[joint] = signature
        direction = cue_direction(cue)
        if direction != 0 and self._rng.random() < self.params.misread_prob:
            direction = -direction
        self._pending[joint].append(
            (t_s + self.params.reaction_delay_s, _INTENT_BY_DIRECTION[direction])
        )

    def step(self, dt: float) -> None:
        """Advance one tick: apply due intents, move joints, track hold time.

        A moving joint settles exactly on its target when a full step would
        cross it; the hold clock runs only while the joint rests inside the
        declare band and resets when it leaves the band.
        """
        now = self.t
        speed = self.params.angular_speed_dps
        tol = self.params.declare_tolerance_deg
        for joint in JOINT_ORDER:
            queue = self._pending[joint]
            while queue and queue[0][0] <= now + 1e-9:
                self.intents[joint] = queue.pop(0)[1]
            old = self.angles[joint]
            intent = self.intents[joint]
            target = self.targets.get(joint)
            if intent is Intent.HOLD:
                new = old
            else:
                delta = speed * dt if intent is Intent.MOVE_UP else -speed * dt
                new = old + delta
                if target is not None and (old - target) * (new - target) <= 0:
                    new = target  # settle on the goal instead of pacing past it
                new = clamp_to_joint_range(joint, new)
            self.angles[joint] = new
            if target is None:
                continue
            if abs(new - target) <= tol + 1e-9:
                if new == old:
                    self._in_tol_ticks[joint] += 1
                # moving inside the band pauses the hold clock without reset
            else:
                self._in_tol_ticks[joint] = 0
        self._ticks += 1

    def declare_done(self, joints: tuple[JointId, ...] | list[JointId] | None = None) -> bool:
        """True when every listed joint has rested in its band for the hold time."""
        selected = tuple(joints) if joints is not None else tuple(self.targets)
        for joint in selected:
            if joint not in self.targets:
                raise InvalidInputError(f"joint {joint.value} has no target")
        return all(self._in_tol_ticks[j] >= self._hold_ticks for j in selected)
