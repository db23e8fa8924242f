"""Feedback-law models for the two haptic devices.

Both devices map a signed joint error (positive = move forward/up) to a
wearable stimulus:

* ErgoTac: a pair of vibrotactile units per joint (front/back). The unit
  opposite the required movement vibrates (repulsive cue) and the amplitude
  level encodes the error magnitude. Carrier frequency is fixed.
* CUFF: a motorized fabric band. Common-mode motor motion slides the band
  (direction cue), differential motion squeezes it with a force that grows
  linearly with the error magnitude.

All operations are pure functions; calibration is an explicit argument.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .core import GuidanceError, InvalidInputError, JointId

# Vibration carrier frequency, Hz. The hardware never varies it; only the
# amplitude level changes.
VIBRATION_FREQUENCY_HZ = 121.0

# Default on/off pulse period of the vibrotactile units, seconds (50% duty).
DEFAULT_PULSE_PERIOD_S = 0.8

# Squeeze force limits, newtons: resting contact force at zero error and the
# saturation force reached at CUFF_SATURATION_ERROR_DEG.
CUFF_MIN_FORCE_N = 3.0
CUFF_MAX_FORCE_N = 20.0
CUFF_SATURATION_ERROR_DEG = 90.0


class CalibrationRequiredError(GuidanceError):
    """A CUFF motor command was requested before calibration."""


class Placement(Enum):
    """Where a vibrotactile unit sits on the limb segment."""

    FRONT = "front"
    BACK = "back"


class VibrationLevel(Enum):
    """Vibration amplitude levels; the value is the duty amplitude percent."""

    OFF = 0
    LOW = 30
    MEDIUM = 60
    HIGH = 100

    @property
    def amplitude_pct(self) -> float:
        return float(self.value)


class Slide(Enum):
    """CUFF band slide direction (common-mode motor motion)."""

    FORWARD = "forward"
    BACKWARD = "backward"
    NONE = "none"

    @property
    def sign(self) -> int:
        if self is Slide.FORWARD:
            return 1
        if self is Slide.BACKWARD:
            return -1
        return 0


@dataclass(frozen=True)
class ErgoTacUnit:
    """One vibrotactile module: a joint and its front/back placement."""

    joint: JointId
    placement: Placement


@dataclass(frozen=True)
class ErgoTacCommand:
    """Addressed vibration command.

    ``level`` OFF silences the whole pair at ``unit.joint``; the placement of
    an OFF command carries no information (FRONT by convention).
    """

    unit: ErgoTacUnit
    level: VibrationLevel

    @property
    def joint(self) -> JointId:
        return self.unit.joint


@dataclass(frozen=True)
class CuffCommand:
    """Slide direction plus squeeze force for one CUFF."""

    joint: JointId
    slide: Slide
    squeeze_force_n: float

    def __post_init__(self) -> None:
        if not (CUFF_MIN_FORCE_N - 1e-9 <= self.squeeze_force_n <= CUFF_MAX_FORCE_N + 1e-9):
            raise InvalidInputError(
                f"squeeze force {self.squeeze_force_n!r} N outside "
                f"[{CUFF_MIN_FORCE_N}, {CUFF_MAX_FORCE_N}]"
            )


@dataclass(frozen=True)
class MotorPositions:
    """Setpoints for the two CUFF DC motors, encoder degrees."""

    gamma1_deg: float
    gamma2_deg: float

    def slide_offset_deg(self, calibration: "CuffCalibration") -> float:
        """Common-mode component relative to the contact baseline."""
        return (self.gamma1_deg + self.gamma2_deg) / 2.0 - calibration.gamma0_deg

    def squeeze_offset_deg(self) -> float:
        """Differential component (half the motor disagreement)."""
        return (self.gamma1_deg - self.gamma2_deg) / 2.0


@dataclass(frozen=True)
class CuffCalibration:
    """Motor-space calibration: contact baseline and linear gains."""

    gamma0_deg: float
    k_force_deg_per_n: float
    k_slide_deg: float

    def __post_init__(self) -> None:
        if not (self.k_force_deg_per_n > 0 and self.k_slide_deg > 0):
            raise InvalidInputError("calibration gains must be positive")


@dataclass(frozen=True)
class SpotThresholds:
    """Error bands for the repulsive vibration levels, degrees.

    ``tolerance_deg`` is the goal band (no cue). Above it the level climbs
    LOW -> MEDIUM -> HIGH as |error| crosses ``low_band_deg`` and
    ``medium_band_deg``.
    """

    tolerance_deg: float = 5.0
    low_band_deg: float = 15.0
    medium_band_deg: float = 45.0

    def __post_init__(self) -> None:
        if not (0 < self.tolerance_deg < self.low_band_deg < self.medium_band_deg):
            raise InvalidInputError(
                "thresholds must satisfy 0 < tolerance < low band < medium band"
            )


def ergotac_spot(joint: JointId, error_deg: float, thresholds: SpotThresholds) -> ErgoTacCommand:
    """Repulsive vibration command for one joint.

    The active unit sits opposite the required movement: a positive error
    (move forward/up) activates the BACK unit and vice versa. The level
    encodes |error| through the threshold bands; inside the goal band the
    pair is silenced.
    """
    magnitude = abs(error_deg)
    if magnitude <= thresholds.tolerance_deg:
        return ErgoTacCommand(ErgoTacUnit(joint, Placement.FRONT), VibrationLevel.OFF)
    placement = Placement.BACK if error_deg > 0 else Placement.FRONT
    if magnitude <= thresholds.low_band_deg:
        level = VibrationLevel.LOW
    elif magnitude <= thresholds.medium_band_deg:
        level = VibrationLevel.MEDIUM
    else:
        level = VibrationLevel.HIGH
    return ErgoTacCommand(ErgoTacUnit(joint, placement), level)


def ergotac_pulse(
    level: VibrationLevel, t_s: float, period_s: float = DEFAULT_PULSE_PERIOD_S
) -> float:
    """Instantaneous vibration amplitude percent of the pulsed drive.

    Square pulse train at 50% duty: the level's amplitude during the first
    half of each period, silence during the second half.
    """
    if t_s < 0:
        raise InvalidInputError(f"time must be nonnegative, got {t_s!r}")
    if period_s <= 0:
        raise InvalidInputError(f"pulse period must be positive, got {period_s!r}")
    if level is VibrationLevel.OFF:
        return 0.0
    phase = math.fmod(t_s, period_s)
    return level.amplitude_pct if phase < period_s / 2.0 else 0.0


def cuff_squeeze_force(abs_error_deg: float) -> float:
    """Squeeze force, newtons, for an absolute error in degrees.

    Affine ramp from the resting 3 N at zero error to 20 N at 90 deg,
    saturating beyond. Continuous and monotone.
    """
    if abs_error_deg < 0:
        raise InvalidInputError(f"absolute error must be nonnegative, got {abs_error_deg!r}")
    span = CUFF_MAX_FORCE_N - CUFF_MIN_FORCE_N
    ramp = min(abs_error_deg, CUFF_SATURATION_ERROR_DEG) / CUFF_SATURATION_ERROR_DEG
    return CUFF_MIN_FORCE_N + span * ramp


def cuff_command(joint: JointId, error_deg: float, tolerance_deg: float) -> CuffCommand:
    """Slide-and-squeeze command for one joint.

    Slide points in the direction of the required correction; the squeeze
    force carries the error magnitude. Inside the goal band the band stops
    sliding but keeps the resting contact force.
    """
    if tolerance_deg <= 0:
        raise InvalidInputError(f"tolerance must be positive, got {tolerance_deg!r}")
    if error_deg > tolerance_deg:
        slide = Slide.FORWARD
    elif error_deg < -tolerance_deg:
        slide = Slide.BACKWARD
    else:
        slide = Slide.NONE
    return CuffCommand(joint, slide, cuff_squeeze_force(abs(error_deg)))


def cuff_calibrate(
    gamma0_deg: float, k_force_deg_per_n: float, k_slide_deg: float
) -> CuffCalibration:
    """Build a motor calibration from a measured contact baseline and gains."""
    if not all(map(math.isfinite, (gamma0_deg, k_force_deg_per_n, k_slide_deg))):
        raise InvalidInputError("calibration parameters must be finite")
    return CuffCalibration(gamma0_deg, k_force_deg_per_n, k_slide_deg)


def cuff_motor_positions(cmd: CuffCommand, calibration: CuffCalibration | None) -> MotorPositions:
    """Resolve a CUFF command into the two DC motor setpoints.

    Differential part sigma = k_force * (force - resting force) squeezes;
    common-mode part delta = k_slide * slide sign slides. gamma1 = gamma0 +
    sigma + delta, gamma2 = gamma0 - sigma + delta.
    """
    if calibration is None:
        raise CalibrationRequiredError("CUFF not calibrated; call cuff_calibrate first")
    sigma = calibration.k_force_deg_per_n * (cmd.squeeze_force_n - CUFF_MIN_FORCE_N)
    delta = calibration.k_slide_deg * cmd.slide.sign
    return MotorPositions(
        gamma1_deg=calibration.gamma0_deg + sigma + delta,
        gamma2_deg=calibration.gamma0_deg - sigma + delta,
    )


GuidanceCue = ErgoTacCommand | CuffCommand


def command_to_dict(cmd: GuidanceCue) -> dict:
    """Serialize a device command to plain data (stable field names)."""
    if isinstance(cmd, ErgoTacCommand):
        return {
            "type": "ergotac",
            "joint": cmd.unit.joint.value,
            "unit_placement": cmd.unit.placement.value,
            "level": cmd.level.name.lower(),
        }
    return {
        "type": "cuff",
        "joint": cmd.joint.value,
        "slide": cmd.slide.value,
        "squeeze_force_n": cmd.squeeze_force_n,
    }


def command_from_dict(data: dict) -> GuidanceCue:
    """Inverse of :func:`command_to_dict`."""
    kind = data.get("type")
    if kind == "ergotac":
        return ErgoTacCommand(
            ErgoTacUnit(JointId(data["joint"]), Placement(data["unit_placement"])),
            VibrationLevel[data["level"].upper()],
        )
    if kind == "cuff":
        return CuffCommand(JointId(data["joint"]), Slide(data["slide"]), data["squeeze_force_n"])
    raise InvalidInputError(f"unknown command type {kind!r}")
