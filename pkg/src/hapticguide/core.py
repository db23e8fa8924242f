"""Shared domain types for sagittal-plane joint guidance.

Joint angles are scalar degrees on the sagittal plane. Errors follow one
convention throughout the package: positive error means the joint must
increase its angle (move forward/up). Every device mapping and subject
response is stated relative to that convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum


class GuidanceError(Exception):
    """Base class for errors raised by this package."""


class InvalidInputError(GuidanceError):
    """An operation received a value outside its declared domain."""


class JointId(Enum):
    """The guided joints. Per-joint tables must cover both members."""

    SHOULDER = "shoulder"
    KNEE = "knee"


# Canonical iteration order for per-joint maps; keeps randomized draws and
# log layouts deterministic.
JOINT_ORDER: tuple[JointId, ...] = (JointId.SHOULDER, JointId.KNEE)

# Hard angle limits per joint, degrees. Chosen to contain every protocol
# target with margin; the subject model clamps against these.
JOINT_RANGES: dict[JointId, tuple[float, float]] = {
    JointId.SHOULDER: (-30.0, 180.0),
    JointId.KNEE: (0.0, 150.0),
}


def signed_error(current_deg: float, target_deg: float) -> float:
    """Signed angular error, degrees: ``target - current``.

    Positive means the joint must increase its angle (flex forward/up).
    """
    if not (math.isfinite(current_deg) and math.isfinite(target_deg)):
        raise InvalidInputError(
            f"angles must be finite, got current={current_deg!r} target={target_deg!r}"
        )
    return target_deg - current_deg


def clamp_to_joint_range(joint: JointId, angle_deg: float) -> float:
    """Clamp an angle into the joint's hard range. Idempotent."""
    lo, hi = JOINT_RANGES[joint]
    return min(max(angle_deg, lo), hi)


@dataclass(frozen=True)
class TargetPose:
    """Per-joint target angles; only guided joints carry a value."""

    shoulder_deg: float | None = None
    knee_deg: float | None = None

    def __post_init__(self) -> None:
        if self.shoulder_deg is None and self.knee_deg is None:
            raise InvalidInputError("a target pose needs at least one joint target")
        for joint, value in self.items():
            if not math.isfinite(value):
                raise InvalidInputError(f"non-finite target for {joint.value}")

    def items(self) -> list[tuple[JointId, float]]:
        out = []
        if self.shoulder_deg is not None:
            out.append((JointId.SHOULDER, self.shoulder_deg))
        if self.knee_deg is not None:
            out.append((JointId.KNEE, self.knee_deg))
        return out

    def joints(self) -> tuple[JointId, ...]:
        return tuple(j for j, _ in self.items())

    def get(self, joint: JointId) -> float | None:
        return self.shoulder_deg if joint is JointId.SHOULDER else self.knee_deg

    def as_dict(self) -> dict[JointId, float]:
        return dict(self.items())


@dataclass(frozen=True)
class Pose:
    """A full posture: one angle per joint."""

    shoulder_deg: float = 0.0
    knee_deg: float = 60.0

    def as_dict(self) -> dict[JointId, float]:
        return {JointId.SHOULDER: self.shoulder_deg, JointId.KNEE: self.knee_deg}


@dataclass(frozen=True)
class SimClock:
    """Fixed-step simulation clock.

    Time is defined as ``tick * dt`` snapped to a microsecond grid, so
    ``time_at(n)`` is exact for any tick count and matches the precision of
    recorded message stamps. Steps finer than 1 us are unsupported.
    """

    dt: float = 0.01

    def __post_init__(self) -> None:
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise InvalidInputError(f"dt must be positive and finite, got {self.dt!r}")

    def time_at(self, tick: int) -> float:
        return round(tick * self.dt, 6)


SEED_MASK = (1 << 64) - 1


def derive_seed(base: int, *parts: int) -> int:
    """Mix a base seed with integer labels into a new 64-bit seed.

    FNV-1a over the parts; deterministic across runs and platforms, so the
    same (seed, subject, trial) labels always address the same stream.
    """
    h = 0xCBF29CE484222325
    for part in (base, *parts):
        for _ in range(9):  # consume up to 64 bits, 8 at a time
            h ^= part & 0xFF
            h = (h * 0x100000001B3) & SEED_MASK
            part >>= 8
    return h
