"""Session configuration: defaults, YAML loading, strict validation.

Device and subject parameters live in a config file rather than flags;
flags cover only paths, seeds, and subcommand selection. Unknown keys are
rejected and every value is validated before any trial runs, with the
offending dotted field path in the error message.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import yaml

from .core import GuidanceError, InvalidInputError, Pose, derive_seed
from .devices import CuffCalibration, SpotThresholds
from .engine import DEFAULT_TIMEOUT_S, DeviceConfig
from .subject import SubjectParams

DEFAULT_SUBJECT_COUNT = 12


class ConfigError(GuidanceError):
    """Invalid session configuration; carries the dotted field path."""

    def __init__(self, path: str, reason: str):
        super().__init__(f"config error at {path}: {reason}")
        self.path = path


@dataclass(frozen=True)
class SessionConfig:
    """Everything a simulated session needs besides the output paths."""

    seed: int = 12345
    subjects: tuple[SubjectParams, ...] = ()
    devices: DeviceConfig = DeviceConfig()
    cuff_calibration: CuffCalibration = CuffCalibration(0.0, 2.0, 10.0)
    timeout_s: float = DEFAULT_TIMEOUT_S
    initial_pose: Pose = Pose()
    dt_s: float = 0.01
    out_dir: str = "results"

    def subject_ids(self) -> list[str]:
        return [f"s{i + 1:02d}" for i in range(len(self.subjects))]


def _expect_mapping(value, path: str) -> dict:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError(path, f"expected a mapping, got {type(value).__name__}")
    return value


def _reject_unknown(mapping: dict, allowed: set[str], path: str) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(path, f"unknown keys {sorted(unknown)}")


def _number(mapping: dict, key: str, default, path: str) -> float:
    value = mapping.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}.{key}", f"expected a number, got {value!r}")
    return float(value)


def _integer(mapping: dict, key: str, default, path: str) -> int:
    value = mapping.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}.{key}", f"expected an integer, got {value!r}")
    return value


_SUBJECT_KEYS = {
    "reaction_delay_s",
    "angular_speed_dps",
    "misread_prob",
    "declare_tolerance_deg",
    "hold_time_s",
    "seed",
}


def _subject_params(mapping: dict, defaults: SubjectParams, path: str) -> SubjectParams:
    _reject_unknown(mapping, _SUBJECT_KEYS, path)
    try:
        return SubjectParams(
            reaction_delay_s=_number(mapping, "reaction_delay_s", defaults.reaction_delay_s, path),
            angular_speed_dps=_number(
                mapping, "angular_speed_dps", defaults.angular_speed_dps, path
            ),
            misread_prob=_number(mapping, "misread_prob", defaults.misread_prob, path),
            declare_tolerance_deg=_number(
                mapping, "declare_tolerance_deg", defaults.declare_tolerance_deg, path
            ),
            hold_time_s=_number(mapping, "hold_time_s", defaults.hold_time_s, path),
            seed=_integer(mapping, "seed", defaults.seed, path),
        )
    except InvalidInputError as exc:
        raise ConfigError(path, str(exc)) from None


def parse_config(data: dict | None, source: str = "<config>") -> SessionConfig:
    """Build a validated SessionConfig from parsed YAML data."""
    data = _expect_mapping(data, source)
    _reject_unknown(
        data,
        {"seed", "subjects", "subject", "devices", "trial", "sim", "out_dir"},
        source,
    )
    seed = _integer(data, "seed", 12345, source)

    devices_map = _expect_mapping(data.get("devices"), "devices")
    _reject_unknown(devices_map, {"spot", "pulse_period_s", "cuff"}, "devices")
    spot_map = _expect_mapping(devices_map.get("spot"), "devices.spot")
    _reject_unknown(
        spot_map, {"tolerance_deg", "low_band_deg", "medium_band_deg"}, "devices.spot"
    )
    cuff_map = _expect_mapping(devices_map.get("cuff"), "devices.cuff")
    _reject_unknown(
        cuff_map,
        {"tolerance_deg", "gamma0_deg", "k_force_deg_per_n", "k_slide_deg"},
        "devices.cuff",
    )
    try:
        spot = SpotThresholds(
            tolerance_deg=_number(spot_map, "tolerance_deg", 5.0, "devices.spot"),
            low_band_deg=_number(spot_map, "low_band_deg", 15.0, "devices.spot"),
            medium_band_deg=_number(spot_map, "medium_band_deg", 45.0, "devices.spot"),
        )
        device_config = DeviceConfig(
            spot=spot,
            pulse_period_s=_number(devices_map, "pulse_period_s", 0.8, "devices"),
            cuff_tolerance_deg=_number(cuff_map, "tolerance_deg", 5.0, "devices.cuff"),
        )
        calibration = CuffCalibration(
            gamma0_deg=_number(cuff_map, "gamma0_deg", 0.0, "devices.cuff"),
            k_force_deg_per_n=_number(cuff_map, "k_force_deg_per_n", 2.0, "devices.cuff"),
            k_slide_deg=_number(cuff_map, "k_slide_deg", 10.0, "devices.cuff"),
        )
    except InvalidInputError as exc:
        raise ConfigError("devices", str(exc)) from None

    trial_map = _expect_mapping(data.get("trial"), "trial")
    _reject_unknown(
        trial_map, {"timeout_s", "initial_shoulder_deg", "initial_knee_deg"}, "trial"
    )
    timeout_s = _number(trial_map, "timeout_s", DEFAULT_TIMEOUT_S, "trial")
    if timeout_s <= 0:
        raise ConfigError("trial.timeout_s", "must be positive")
    initial_pose = Pose(
        shoulder_deg=_number(trial_map, "initial_shoulder_deg", 0.0, "trial"),
        knee_deg=_number(trial_map, "initial_knee_deg", 60.0, "trial"),
    )

    sim_map = _expect_mapping(data.get("sim"), "sim")
    _reject_unknown(sim_map, {"dt_s"}, "sim")
    dt_s = _number(sim_map, "dt_s", 0.01, "sim")
    if dt_s <= 0:
        raise ConfigError("sim.dt_s", "must be positive")

    template = _subject_params(_expect_mapping(data.get("subject"), "subject"),
                               SubjectParams(), "subject")
    subjects_value = data.get("subjects", DEFAULT_SUBJECT_COUNT)
    subjects: list[SubjectParams] = []
    if isinstance(subjects_value, bool):
        raise ConfigError("subjects", "expected a count or a list of mappings")
    if isinstance(subjects_value, int):
        if subjects_value < 1:
            raise ConfigError("subjects", "subject count must be at least 1")
        for i in range(subjects_value):
            subjects.append(_derive_subject(template, seed, i))
    elif isinstance(subjects_value, list):
        if not subjects_value:
            raise ConfigError("subjects", "subject list must not be empty")
        for i, entry in enumerate(subjects_value):
            entry = _expect_mapping(entry, f"subjects[{i}]")
            params = _subject_params(entry, template, f"subjects[{i}]")
            if "seed" not in entry:
                params = _derive_subject(params, seed, i)
            subjects.append(params)
    else:
        raise ConfigError("subjects", "expected a count or a list of mappings")

    out_dir = data.get("out_dir", "results")
    if not isinstance(out_dir, str) or not out_dir:
        raise ConfigError("out_dir", "expected a nonempty string")

    return SessionConfig(
        seed=seed,
        subjects=tuple(subjects),
        devices=device_config,
        cuff_calibration=calibration,
        timeout_s=timeout_s,
        initial_pose=initial_pose,
        dt_s=dt_s,
        out_dir=out_dir,
    )


def _derive_subject(template: SubjectParams, seed: int, index: int) -> SubjectParams:
    from dataclasses import replace

    return replace(template, seed=derive_seed(seed, 1000 + index))


def load_config(path: str) -> SessionConfig:
    """Load and validate a YAML config file."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = yaml.safe_load(handle)
    except OSError as exc:
        raise ConfigError(path, f"cannot read file: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(path, f"invalid YAML: {exc}") from None
    return parse_config(data, source=path)


def default_config() -> SessionConfig:
    """The built-in configuration: 12 subjects, reference device settings."""
    return parse_config({})
