"""Independent reference implementations used to cross-check the package.

Deliberately separate code paths: the metric oracles are numpy-vectorized
where the package loops, the rank/enumeration helpers avoid scipy, and the
Wilcoxon oracle enumerates all sign assignments directly.
"""

from itertools import product

import numpy as np

from hapticguide.devices import CuffCommand, ErgoTacCommand, Slide, VibrationLevel


def _cue_active(cue) -> bool:
    if isinstance(cue, ErgoTacCommand):
        return cue.level is not VibrationLevel.OFF
    if isinstance(cue, CuffCommand):
        return cue.slide is not Slide.NONE
    return False


def oracle_confusion(log, tolerance_deg=5.0, deadband_deg=0.01):
    per_joint = []
    for joint in log.spec.guided_joints():
        angles = np.array([s.angles[joint] for s in log.samples])
        errors = np.array([s.errors[joint] for s in log.samples])
        cue_on = np.array([_cue_active(s.cues.get(joint)) for s in log.samples])
        active = (cue_on & (np.abs(errors) > tolerance_deg))[:-1]
        deltas = np.diff(angles)
        opposite = active & (np.abs(deltas) > deadband_deg) & (
            np.sign(deltas) == -np.sign(errors[:-1])
        )
        n_active = int(active.sum())
        per_joint.append(100.0 * float(opposite.sum()) / n_active if n_active else 0.0)
    return float(np.mean(per_joint))


def oracle_success(log):
    return bool(log.outcome.success)


def oracle_reaching_time(log):
    assert log.outcome.success
    return float(log.samples[-1].t) - float(log.samples[0].t)


def oracle_angular_distance(log):
    assert log.outcome.success
    total = 0.0
    for joint in log.spec.guided_joints():
        angles = np.array([s.angles[joint] for s in log.samples])
        total += float(np.abs(np.diff(angles)).sum())
    return total


def oracle_reaching_velocity(log):
    assert log.outcome.success
    duration = oracle_reaching_time(log)
    net = sum(
        abs(target - log.samples[0].angles[joint])
        for joint, target in log.spec.targets.items()
    )
    return 0.0 if duration == 0.0 else net / duration


def oracle_final_error(log):
    assert not log.outcome.success
    remaining = sum(
        abs(log.samples[-1].angles[j] - t) for j, t in log.spec.targets.items()
    )
    required = sum(
        abs(log.samples[0].angles[j] - t) for j, t in log.spec.targets.items()
    )
    if required == 0.0:
        return 0.0 if remaining == 0.0 else 100.0
    return 100.0 * remaining / required


def midranks(values):
    """Average ranks of ties, 1-based; no scipy."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        average = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = average
        i = j + 1
    return ranks


def brute_force_wilcoxon(diffs):
    """(W, exact two-sided p) by enumerating every sign assignment."""
    nonzero = [d for d in diffs if d != 0.0]
    n = len(nonzero)
    ranks = midranks([abs(d) for d in nonzero])
    total = sum(ranks)
    w_plus = sum(r for r, d in zip(ranks, nonzero) if d > 0)
    w_observed = min(w_plus, total - w_plus)
    hits = 0
    for signs in product((1, -1), repeat=n):
        wp = sum(r for r, s in zip(ranks, signs) if s > 0)
        if min(wp, total - wp) <= w_observed + 1e-12:
            hits += 1
    return w_observed, hits / float(2**n)
