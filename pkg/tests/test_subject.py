import pytest

from hapticguide.core import InvalidInputError, JointId
from hapticguide.devices import SpotThresholds, cuff_command, ergotac_spot
from hapticguide.subject import Intent, SubjectParams, SubjectState, cue_direction

DT = 0.01
SPOT = SpotThresholds()


def make_state(targets, angles, **kwargs):
    params = SubjectParams(**{"misread_prob": 0.0, "seed": 1, **kwargs})
    full = {JointId.SHOULDER: 0.0, JointId.KNEE: 60.0}
    full.update(angles)
    return SubjectState(targets, full, params, DT), params


def drive(state, joint, target, n_ticks, tolerance=5.0):
    """Close the loop with CUFF cues for n ticks."""
    for _ in range(n_ticks):
        error = target - state.angles[joint]
        state.perceive(cuff_command(joint, error, tolerance), state.t)
        state.step(DT)


def test_cue_direction_mapping():
    back_cue = ergotac_spot(JointId.SHOULDER, 90.0, SPOT)
    front_cue = ergotac_spot(JointId.SHOULDER, -90.0, SPOT)
    off_cue = ergotac_spot(JointId.SHOULDER, 0.0, SPOT)
    assert cue_direction(back_cue) == 1
    assert cue_direction(front_cue) == -1
    assert cue_direction(off_cue) == 0
    assert cue_direction(cuff_command(JointId.KNEE, 50.0, 5.0)) == 1
    assert cue_direction(cuff_command(JointId.KNEE, -50.0, 5.0)) == -1
    assert cue_direction(cuff_command(JointId.KNEE, 0.0, 5.0)) == 0


def test_perceive_applies_intent_after_reaction_delay():
    state, params = make_state({JointId.SHOULDER: 90.0}, {JointId.SHOULDER: 0.0})
    state.perceive(ergotac_spot(JointId.SHOULDER, 90.0, SPOT), 0.0)
    delay_ticks = round(params.reaction_delay_s / DT)
    for _ in range(delay_ticks):
        assert state.intents[JointId.SHOULDER] is Intent.HOLD
        state.step(DT)
    state.step(DT)
    assert state.intents[JointId.SHOULDER] is Intent.MOVE_UP
    assert state.angles[JointId.SHOULDER] > 0.0


def test_perceive_misread_inverts_direction():
    state, _ = make_state(
        {JointId.SHOULDER: 90.0}, {JointId.SHOULDER: 0.0}, misread_prob=1.0
    )
    state.perceive(cuff_command(JointId.SHOULDER, 90.0, 5.0), 0.0)
    for _ in range(31):
        state.step(DT)
    assert state.intents[JointId.SHOULDER] is Intent.MOVE_DOWN


def test_perceive_off_cue_means_hold():
    state, _ = make_state({JointId.SHOULDER: 0.0}, {JointId.SHOULDER: 0.0})
    state.perceive(ergotac_spot(JointId.SHOULDER, 0.0, SPOT), 0.0)
    for _ in range(40):
        state.step(DT)
    assert state.intents[JointId.SHOULDER] is Intent.HOLD
    assert state.angles[JointId.SHOULDER] == 0.0


def test_perceive_rejects_unguided_joint():
    state, _ = make_state({JointId.SHOULDER: 90.0}, {JointId.SHOULDER: 0.0})
    with pytest.raises(InvalidInputError):
        state.perceive(cuff_command(JointId.KNEE, 10.0, 5.0), 0.0)


def test_step_moves_at_constant_speed():
    state, _ = make_state(
        {JointId.SHOULDER: 90.0}, {JointId.SHOULDER: 0.0}, reaction_delay_s=0.0
    )
    state.perceive(cuff_command(JointId.SHOULDER, 90.0, 5.0), 0.0)
    state.step(DT)
    assert state.angles[JointId.SHOULDER] == pytest.approx(0.3)


def test_step_clamps_at_range_limit():
    state, _ = make_state(
        {JointId.KNEE: 115.0}, {JointId.KNEE: 150.0},
        reaction_delay_s=0.0, misread_prob=1.0,
    )
    # misread sends the subject up against the knee's upper limit
    state.perceive(cuff_command(JointId.KNEE, -35.0, 5.0), 0.0)
    for _ in range(50):
        state.step(DT)
    assert state.angles[JointId.KNEE] == 150.0


def test_step_hold_leaves_angle_unchanged():
    state, _ = make_state({JointId.KNEE: 80.0}, {JointId.KNEE: 60.0})
    for _ in range(10):
        state.step(DT)
    assert state.angles[JointId.KNEE] == 60.0


def test_subject_settles_on_target_not_past_it():
    state, _ = make_state(
        {JointId.SHOULDER: 10.0}, {JointId.SHOULDER: 0.0}, reaction_delay_s=0.0
    )
    state.perceive(cuff_command(JointId.SHOULDER, 10.0, 5.0), 0.0)
    for _ in range(100):
        state.step(DT)
    assert state.angles[JointId.SHOULDER] == 10.0


def test_declare_done_requires_hold_time_on_every_joint():
    targets = {JointId.SHOULDER: 0.0, JointId.KNEE: 72.0}
    state, _ = make_state(targets, {JointId.SHOULDER: 0.0, JointId.KNEE: 60.0},
                          reaction_delay_s=0.0, hold_time_s=1.0)
    # shoulder rests on target from the start; knee arrives after 0.4 s
    for _ in range(120):
        error = targets[JointId.KNEE] - state.angles[JointId.KNEE]
        state.perceive(cuff_command(JointId.KNEE, error, 5.0), state.t)
        state.step(DT)
    assert state.time_in_tolerance_s(JointId.SHOULDER) == pytest.approx(1.2)
    assert not state.declare_done()  # knee held < hold_time
    for _ in range(120):
        state.step(DT)
    assert state.declare_done()


def test_declare_done_boundary_is_inclusive():
    state, _ = make_state({JointId.KNEE: 60.0}, {JointId.KNEE: 60.0}, hold_time_s=1.0)
    for _ in range(99):
        state.step(DT)
    assert not state.declare_done()
    state.step(DT)  # exactly hold_time in tolerance
    assert state.declare_done()


def test_declare_done_rejects_untargeted_joint():
    state, _ = make_state({JointId.KNEE: 60.0}, {JointId.KNEE: 60.0})
    with pytest.raises(InvalidInputError):
        state.declare_done([JointId.SHOULDER])


def test_deterministic_trajectory_for_same_seed():
    def run(seed):
        state, _ = make_state(
            {JointId.SHOULDER: 90.0}, {JointId.SHOULDER: -10.0},
            misread_prob=0.5, seed=seed,
        )
        drive(state, JointId.SHOULDER, 90.0, 600)
        return [state.angles[JointId.SHOULDER], state.t]

    assert run(123) == run(123)
    assert run(123) != run(124)


def test_misread_zero_monotone_approach_and_bounded_declare_time():
    state, params = make_state({JointId.SHOULDER: 90.0}, {JointId.SHOULDER: -10.0})
    previous = state.angles[JointId.SHOULDER]
    ticks = 0
    while not state.declare_done() and ticks < 2000:
        error = 90.0 - state.angles[JointId.SHOULDER]
        state.perceive(cuff_command(JointId.SHOULDER, error, 5.0), state.t)
        state.step(DT)
        assert state.angles[JointId.SHOULDER] >= previous  # monotone approach
        previous = state.angles[JointId.SHOULDER]
        ticks += 1
    bound = (
        100.0 / params.angular_speed_dps
        + params.reaction_delay_s
        + params.hold_time_s
    )
    assert state.declare_done()
    assert state.t <= bound + 2 * DT


def test_misread_one_flees_and_pins_at_range_limit():
    state, _ = make_state(
        {JointId.SHOULDER: 90.0}, {JointId.SHOULDER: 0.0}, misread_prob=1.0
    )
    drive(state, JointId.SHOULDER, 90.0, 800)
    assert state.angles[JointId.SHOULDER] == -30.0  # lower range limit
    assert not state.declare_done()
