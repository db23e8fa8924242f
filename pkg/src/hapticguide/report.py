"""Static boxplot reports from a per-trial metrics table.

One SVG per index, boxes grouped by sub-block with the two devices side by
side, each box built from per-subject condition means. Star annotations
from a comparison table mark the device pairs. Output is deterministic:
no dates or hashes end up in the SVG.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "hapticguide"  # deterministic element ids
import matplotlib.pyplot as plt

from .engine import Device, SubBlock
from .metrics import INDEX_NAMES, MetricsRow, subject_value
from .stats import ComparisonRow
from .tables import TableSchemaError

INDEX_LABELS = {
    "confusion_pct": ("Confusion index", "%"),
    "success_ratio_pct": ("Success ratio", "%"),
    "reaching_time_s": ("Reaching time", "s"),
    "angular_distance_deg": ("Angular distance", "deg"),
    "reaching_velocity_dps": ("Reaching velocity", "deg/s"),
    "final_error_pct": ("Final error", "%"),
}

_DEVICE_COLORS = {Device.CUFF: "#7aa6c2", Device.ERGOTAC: "#c2897a"}


def _per_subject_values(rows: list[MetricsRow], index: str) -> dict[tuple[Device, SubBlock], list[float]]:
    subjects = sorted({r.subject_id for r in rows})
    out: dict[tuple[Device, SubBlock], list[float]] = {}
    for device in Device:
        for sub_block in SubBlock:
            group = [r for r in rows if r.device is device and r.sub_block is sub_block]
            values = [
                v for s in subjects if (v := subject_value(group, s, index)) is not None
            ]
            out[(device, sub_block)] = values
    return out


def generate_reports(
    rows: list[MetricsRow],
    out_dir: str,
    comparisons: list[ComparisonRow] | None = None,
) -> list[str]:
    """Write one boxplot SVG per index; returns the file paths."""
    if not rows:
        raise TableSchemaError("no metrics rows to plot")
    os.makedirs(out_dir, exist_ok=True)
    stars_by_pair = {}
    for comparison in comparisons or []:
        stars_by_pair[(comparison.index, comparison.pair)] = comparison.stars
    paths = []
    for index in INDEX_NAMES:
        values = _per_subject_values(rows, index)
        fig, ax = plt.subplots(figsize=(6.0, 3.6))
        positions, data, colors, labels = [], [], [], []
        for block_i, sub_block in enumerate(SubBlock):
            for dev_i, device in enumerate(Device):
                series = values[(device, sub_block)]
                if not series:
                    continue
                positions.append(block_i * 2.5 + dev_i)
                data.append(series)
                colors.append(_DEVICE_COLORS[device])
                labels.append(f"{sub_block.value}\n{device.value}")
        if data:
            boxes = ax.boxplot(data, positions=positions, widths=0.8, patch_artist=True)
            for patch, color in zip(boxes["boxes"], colors):
                patch.set_facecolor(color)
            ax.set_xticks(positions)
            ax.set_xticklabels(labels, fontsize=7)
            top = max(max(series) for series in data)
            bottom = min(min(series) for series in data)
            span = max(top - bottom, 1.0)
            for block_i, sub_block in enumerate(SubBlock):
                stars = stars_by_pair.get((index, f"cuff_vs_ergotac:{sub_block.value}"))
                if stars and stars not in ("na", "ns"):
                    ax.text(
                        block_i * 2.5 + 0.5,
                        top + 0.06 * span,
                        stars,
                        ha="center",
                        fontsize=10,
                    )
            ax.set_ylim(bottom - 0.12 * span, top + 0.2 * span)
        title, unit = INDEX_LABELS[index]
        ax.set_title(title)
        ax.set_ylabel(unit)
        fig.tight_layout()
        path = os.path.join(out_dir, f"{index}.svg")
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        paths.append(path)
    return paths
