"""Paired nonparametric comparison of guidance conditions.

Wilcoxon signed-rank test with exact two-sided p-values for small samples:
zero differences are dropped, absolute differences are mid-ranked, and the
statistic is the smaller signed rank sum. For n <= 20 the p-value is exact,
computed from the full sign-assignment distribution; larger samples use the
normal approximation with continuity and tie corrections.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from scipy.stats import rankdata

from .core import GuidanceError, InvalidInputError
from .metrics import INDEX_NAMES, MetricsRow, subject_value
from .engine import Device, SubBlock

EXACT_N_LIMIT = 20


class DegenerateSampleError(GuidanceError):
    """Every paired difference is zero; the test is undefined."""


class Method(Enum):
    EXACT = "exact"
    NORMAL_APPROX = "normal_approx"


@dataclass(frozen=True)
class PairedSample:
    """Paired per-subject values of two conditions."""

    pairs: tuple[tuple[float, float], ...]
    label_a: str = "a"
    label_b: str = "b"

    def __post_init__(self) -> None:
        if not self.pairs:
            raise InvalidInputError("a paired sample needs at least one pair")

    def differences(self) -> list[float]:
        return [a - b for a, b in self.pairs]


@dataclass(frozen=True)
class WilcoxonResult:
    w_statistic: float
    n_effective: int
    p_value: float
    method: Method


def _exact_p(doubled_ranks: list[int], w2: int) -> float:
    """P(min rank sum <= observed) over all 2^n sign assignments.

    Works on doubled ranks so mid-ranks stay integral. The distribution of
    the doubled positive rank sum is built by dynamic programming; the two
    tails are counted without double-counting the center.
    """
    total_sum = sum(doubled_ranks)
    counts = [0] * (total_sum + 1)
    counts[0] = 1
    for rank in doubled_ranks:
        for value in range(total_sum, rank - 1, -1):
            counts[value] += counts[value - rank]
    low = sum(counts[: w2 + 1])
    high = sum(counts[total_sum - w2 :])
    overlap = counts[w2] if 2 * w2 == total_sum else 0
    return (low + high - overlap) / float(2 ** len(doubled_ranks))


def _normal_p(w: float, ranks: list[float], n: int) -> float:
    mean = n * (n + 1) / 4.0
    variance = n * (n + 1) * (2 * n + 1) / 24.0
    # tie correction over groups of equal |difference|
    groups: dict[float, int] = {}
    for rank in ranks:
        groups[rank] = groups.get(rank, 0) + 1
    for size in groups.values():
        if size > 1:
            variance -= (size**3 - size) / 48.0
    if variance <= 0:
        raise DegenerateSampleError("zero variance after tie correction")
    z = (w - mean + 0.5) / math.sqrt(variance)  # W is the smaller sum: left tail
    p = 2.0 * 0.5 * math.erfc(-z / math.sqrt(2.0))
    return min(p, 1.0)


def wilcoxon_from_diffs(diffs: list[float], exact_limit: int = EXACT_N_LIMIT) -> WilcoxonResult:
    """Signed-rank test of the differences against a zero median."""
    nonzero = [d for d in diffs if d != 0.0]
    if not nonzero:
        raise DegenerateSampleError("all paired differences are zero")
    n = len(nonzero)
    ranks = [float(r) for r in rankdata([abs(d) for d in nonzero])]
    w_plus = sum(r for r, d in zip(ranks, nonzero) if d > 0)
    w_minus = sum(r for r, d in zip(ranks, nonzero) if d < 0)
    w = min(w_plus, w_minus)
    if n <= exact_limit:
        doubled = [int(round(2 * r)) for r in ranks]
        p = _exact_p(doubled, int(round(2 * w)))
        method = Method.EXACT
    else:
        p = _normal_p(w, ranks, n)
        method = Method.NORMAL_APPROX
    return WilcoxonResult(w_statistic=w, n_effective=n, p_value=p, method=method)


def wilcoxon_signed_rank(sample: PairedSample, exact_limit: int = EXACT_N_LIMIT) -> WilcoxonResult:
    """Two-sided Wilcoxon signed-rank test on a paired sample."""
    return wilcoxon_from_diffs(sample.differences(), exact_limit)


def significance_stars(p: float) -> str:
    """Star notation: *** below 0.001, ** below 0.01, * below 0.05, else ns."""
    if not 0.0 < p <= 1.0:
        raise InvalidInputError(f"p-value must lie in (0, 1], got {p!r}")
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return "ns"


# --- planned condition comparisons -------------------------------------------

Condition = tuple[Device, SubBlock]


@dataclass(frozen=True)
class ComparisonPair:
    label: str
    condition_a: Condition
    condition_b: Condition


def default_plan() -> list[ComparisonPair]:
    """CUFF vs ErgoTac per sub-block, and single- vs multi-joint per device."""
    plan = [
        ComparisonPair(
            f"cuff_vs_ergotac:{sb.value}",
            (Device.CUFF, sb),
            (Device.ERGOTAC, sb),
        )
        for sb in SubBlock
    ]
    for device in Device:
        for single in (SubBlock.SHOULDER_ONLY, SubBlock.KNEE_ONLY):
            plan.append(
                ComparisonPair(
                    f"{single.value}_vs_multi:{device.value}",
                    (device, single),
                    (device, SubBlock.MULTI_JOINT),
                )
            )
    return plan


@dataclass(frozen=True)
class ComparisonRow:
    """One tested (index, pair); untestable pairs carry a status instead of p."""

    index: str
    pair: str
    n: int
    w_statistic: float | None
    p_value: float | None
    method: str
    stars: str


def compare_conditions(
    rows: list[MetricsRow], plan: list[ComparisonPair] | None = None
) -> list[ComparisonRow]:
    """Run every planned comparison for every index.

    Pairs are built per subject: each subject contributes its per-condition
    value of the index (mean over applicable trials). Subjects missing the
    index in either condition are dropped; pairs that end up empty are
    reported as untestable and all-zero differences as degenerate, never as
    a crash.
    """
    if plan is None:
        plan = default_plan()
    subjects = sorted({r.subject_id for r in rows})
    by_condition: dict[Condition, list[MetricsRow]] = {}
    for row in rows:
        by_condition.setdefault((row.device, row.sub_block), []).append(row)
    out = []
    for index in INDEX_NAMES:
        for pair in plan:
            group_a = by_condition.get(pair.condition_a, [])
            group_b = by_condition.get(pair.condition_b, [])
            pairs = []
            for subject in subjects:
                value_a = subject_value(group_a, subject, index)
                value_b = subject_value(group_b, subject, index)
                if value_a is not None and value_b is not None:
                    pairs.append((value_a, value_b))
            if not pairs:
                out.append(
                    ComparisonRow(index, pair.label, 0, None, None, "untestable", "na")
                )
                continue
            try:
                result = wilcoxon_signed_rank(PairedSample(tuple(pairs)))
            except DegenerateSampleError:
                out.append(
                    ComparisonRow(
                        index, pair.label, len(pairs), None, None, "degenerate", "na"
                    )
                )
                continue
            out.append(
                ComparisonRow(
                    index=index,
                    pair=pair.label,
                    n=result.n_effective,
                    w_statistic=result.w_statistic,
                    p_value=result.p_value,
                    method=result.method.value,
                    stars=significance_stars(result.p_value),
                )
            )
    return out
