"""Closed-loop simulator and evaluation harness for multi-joint haptic
postural guidance: device feedback laws, a simulated subject, the
randomized trial protocol, performance indices, paired statistics, and a
pub/sub integration bus with record/replay."""

from .core import (
    GuidanceError,
    InvalidInputError,
    JointId,
    Pose,
    SimClock,
    TargetPose,
    clamp_to_joint_range,
    derive_seed,
    signed_error,
)
from .devices import (
    CuffCalibration,
    CuffCommand,
    ErgoTacCommand,
    ErgoTacUnit,
    MotorPositions,
    Placement,
    Slide,
    SpotThresholds,
    VibrationLevel,
    cuff_calibrate,
    cuff_command,
    cuff_motor_positions,
    cuff_squeeze_force,
    ergotac_pulse,
    ergotac_spot,
)
from .subject import Intent, SubjectParams, SubjectState
from .engine import (
    Device,
    DeviceConfig,
    SessionSpec,
    SubBlock,
    TrialLog,
    TrialOutcome,
    TrialSpec,
    build_session,
    cuff_schedule,
    ergotac_schedule,
    run_session,
    run_trial,
)
from .metrics import (
    ConditionSummary,
    MetricsRow,
    TrialMetrics,
    aggregate,
    compute_metrics,
    confusion_index,
)
from .stats import (
    PairedSample,
    WilcoxonResult,
    compare_conditions,
    significance_stars,
    wilcoxon_from_diffs,
    wilcoxon_signed_rank,
)
from .bus import Envelope, MessageBus, replay

__version__ = "0.1.0"
