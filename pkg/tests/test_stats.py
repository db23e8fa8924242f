import math
import random

import pytest

import oracles
from hapticguide.core import InvalidInputError
from hapticguide.engine import Device, SubBlock
from hapticguide.metrics import MetricsRow, TrialMetrics
from hapticguide.stats import (
    ComparisonPair,
    DegenerateSampleError,
    Method,
    PairedSample,
    compare_conditions,
    default_plan,
    significance_stars,
    wilcoxon_from_diffs,
    wilcoxon_signed_rank,
)


def test_wilcoxon_all_positive_diffs():
    result = wilcoxon_from_diffs([1.0, 2.0, 3.0, 4.0, 5.0])
    assert result.w_statistic == 0.0
    assert result.n_effective == 5
    assert result.method is Method.EXACT
    assert result.p_value == 0.0625
    assert type(result.w_statistic) is float  # plain float, stays clean in CSV


def test_wilcoxon_tied_magnitudes_midranks():
    result = wilcoxon_from_diffs([1.0, -1.0])
    assert result.w_statistic == 1.5
    assert result.p_value == 1.0


def test_wilcoxon_sign_flip_symmetry():
    diffs = [0.4, -1.2, 2.5, 3.3, -0.7, 1.9]
    a = wilcoxon_from_diffs(diffs)
    b = wilcoxon_from_diffs([-d for d in diffs])
    assert a.w_statistic == b.w_statistic
    assert a.p_value == b.p_value


def test_wilcoxon_drops_zero_differences():
    result = wilcoxon_from_diffs([0.0, 1.0, 2.0, 0.0, 3.0])
    assert result.n_effective == 3


def test_wilcoxon_degenerate_when_all_zero():
    with pytest.raises(DegenerateSampleError):
        wilcoxon_from_diffs([0.0, 0.0, 0.0])


def test_wilcoxon_exact_matches_brute_force_enumeration():
    rng = random.Random(2718)
    for _ in range(100):
        n = rng.randint(2, 10)
        diffs = []
        while not any(d != 0 for d in diffs):
            diffs = [round(rng.uniform(-5, 5), 1) for _ in range(n)]
        result = wilcoxon_from_diffs(diffs)
        w_ref, p_ref = oracles.brute_force_wilcoxon(diffs)
        assert result.w_statistic == pytest.approx(w_ref, abs=1e-12)
        assert result.p_value == p_ref


def test_wilcoxon_p_invariant_under_positive_rescaling():
    diffs = [0.5, -1.5, 2.0, 3.5, -0.25]
    reference = wilcoxon_from_diffs(diffs)
    for scale in (0.1, 7.0, 1234.5):
        scaled = wilcoxon_from_diffs([scale * d for d in diffs])
        assert scaled.w_statistic == reference.w_statistic
        assert scaled.p_value == reference.p_value


def test_wilcoxon_w_invariant_under_monotone_magnitude_transform():
    diffs = [0.5, -1.5, 2.0, 3.5, -0.25, 1.0]
    reference = wilcoxon_from_diffs(diffs)
    transformed = [math.copysign(math.exp(abs(d)), d) for d in diffs]
    assert wilcoxon_from_diffs(transformed).w_statistic == reference.w_statistic


def test_wilcoxon_normal_approximation_close_to_exact_at_n15():
    rng = random.Random(57)
    worst = 0.0
    for _ in range(100):
        diffs = []
        while len({abs(d) for d in diffs}) != 15:  # tie-free
            diffs = [rng.uniform(-10, 10) for _ in range(15)]
        exact = wilcoxon_from_diffs(diffs, exact_limit=20)
        approx = wilcoxon_from_diffs(diffs, exact_limit=10)
        assert exact.method is Method.EXACT
        assert approx.method is Method.NORMAL_APPROX
        worst = max(worst, abs(exact.p_value - approx.p_value))
    assert worst <= 0.02


def test_wilcoxon_method_switch_at_limit():
    rng = random.Random(3)
    diffs = [rng.uniform(-1, 1) for _ in range(21)]
    assert wilcoxon_from_diffs(diffs).method is Method.NORMAL_APPROX
    assert wilcoxon_from_diffs(diffs[:20]).method is Method.EXACT


def test_paired_sample_interface():
    sample = PairedSample(((3.0, 1.0), (4.0, 2.0)), "cuff", "ergotac")
    assert sample.differences() == [2.0, 2.0]
    result = wilcoxon_signed_rank(sample)
    assert result.n_effective == 2
    with pytest.raises(InvalidInputError):
        PairedSample(())


def test_significance_stars_thresholds():
    assert significance_stars(0.0625) == "ns"
    assert significance_stars(0.05) == "ns"
    assert significance_stars(0.049) == "*"
    assert significance_stars(0.03) == "*"
    assert significance_stars(0.009) == "**"
    assert significance_stars(0.0005) == "***"


def test_significance_stars_rejects_out_of_range():
    with pytest.raises(InvalidInputError):
        significance_stars(0.0)
    with pytest.raises(InvalidInputError):
        significance_stars(1.5)


# --- planned comparisons -----------------------------------------------------


def _row(subject, device, sub_block, trial_index, rt):
    return MetricsRow(
        subject_id=subject,
        device=device,
        sub_block=sub_block,
        trial_index=trial_index,
        target_shoulder_deg=45.0,
        target_knee_deg=None,
        metrics=TrialMetrics(5.0, True, rt, 2 * rt, 50.0 / rt, None),
    )


def _synthetic_rows(n_subjects=12, offset=0.0):
    rng = random.Random(99)
    rows = []
    index = 0
    for i in range(n_subjects):
        subject = f"s{i + 1:02d}"
        for device in Device:
            for sub_block in SubBlock:
                base = 2.0 + rng.random() + (offset if device is Device.CUFF else 0.0)
                rows.append(_row(subject, device, sub_block, index, base))
                index += 1
    return rows


def test_compare_conditions_row_count_is_indices_times_pairs():
    rows = _synthetic_rows()
    table = compare_conditions(rows)
    assert len(table) == 6 * 7  # indices x planned pairs


def test_compare_conditions_pairs_every_subject():
    rows = _synthetic_rows(offset=0.5)
    table = compare_conditions(rows)
    tested = [r for r in table if r.index == "reaching_time_s"]
    assert all(r.n == 12 for r in tested if r.method == "exact")
    assert any(r.method == "exact" for r in tested)


def test_compare_conditions_flags_degenerate_pairs():
    rows = _synthetic_rows(offset=0.0)
    # identical per-subject values in both conditions of each device pair
    table = compare_conditions(
        rows,
        plan=[
            ComparisonPair(
                "self", (Device.CUFF, SubBlock.SHOULDER_ONLY), (Device.CUFF, SubBlock.SHOULDER_ONLY)
            )
        ],
    )
    # all-success data also leaves final error untestable
    assert all(r.method in ("degenerate", "untestable") for r in table)
    assert sum(r.method == "degenerate" for r in table) == 5


def test_compare_conditions_reports_missing_condition_as_untestable():
    rows = [r for r in _synthetic_rows() if r.device is Device.CUFF]
    table = compare_conditions(rows)
    device_pairs = [r for r in table if r.pair.startswith("cuff_vs_ergotac")]
    assert all(r.method == "untestable" and r.stars == "na" for r in device_pairs)


def test_default_plan_shape():
    plan = default_plan()
    assert len(plan) == 7
    labels = {p.label for p in plan}
    assert "cuff_vs_ergotac:SH" in labels
    assert "SH_vs_multi:ergotac" in labels
