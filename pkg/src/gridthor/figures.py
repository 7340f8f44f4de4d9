"""Figure rendering for the report path: all files, no interactive backends.

The metrics modules stay plot-free; the CLI calls into here to render the
time-spent box plot, the trust series and top-view trajectory frames next
to the delimited outputs.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .harness import SETTING_LABELS, RunReport  # noqa: E402

SETTING_COLORS = {"no_robot": "#888888", "frontier": "#1f77b4", "oracle": "#d62728",
                  "custom": "#2ca02c"}


def render_time_box(report: RunReport, path: Path) -> Path:
    """Box plot of seconds spent per trial, one box per setting."""
    data, labels = [], []
    for setting in report.settings:
        rows = report.valid_rows(setting)
        if not rows:
            continue
        data.append([r.elapsed_ticks * 0.25 for r in rows])
        labels.append(SETTING_LABELS.get(setting, setting))
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    ax.boxplot(data, labels=labels, showmeans=True)
    ax.set_ylabel("Time spent (s)")
    ax.set_title("Time to finish per setting")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_trust_series(report: RunReport, path: Path) -> Path:
    """Mean trust per trial index with a standard-error band per setting."""
    fig, ax = plt.subplots(figsize=(4.6, 3.2))
    drew = False
    for setting in report.settings:
        series = report.trust_series(setting)
        if not series:
            continue
        drew = True
        xs = [p["trial_index"] for p in series]
        means = np.array([p["mean"] for p in series])
        errs = np.array([p["stderr"] for p in series])
        color = SETTING_COLORS.get(setting, None)
        ax.plot(xs, means, marker="o", label=SETTING_LABELS.get(setting, setting),
                color=color)
        ax.fill_between(xs, means - errs, means + errs, alpha=0.2, color=color)
    ax.set_xlabel("Trial index")
    ax.set_ylabel("Trust score")
    ax.set_ylim(0.5, 7.5)
    if drew:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_topview(overlay: dict, path: Path) -> Path:
    """Top-down map with agent trajectories from a replay overlay."""
    rows = overlay["grid"]
    h, w = len(rows), len(rows[0])
    img = np.ones((h, w, 3))
    for y, row in enumerate(rows):
        for x, ch in enumerate(row):
            if ch == "#":
                img[y, x] = (0.25, 0.25, 0.3)
    fig, ax = plt.subplots(figsize=(max(4.0, w / 8), max(3.0, h / 8)))
    ax.imshow(img, origin="upper")
    palette = ["#d62728", "#1f77b4", "#2ca02c", "#ff7f0e"]
    for i, (aid, traj) in enumerate(sorted(overlay["trajectories"].items())):
        xs = [c[0] for c in traj]
        ys = [c[1] for c in traj]
        color = palette[i % len(palette)]
        ax.plot(xs, ys, "-", color=color, linewidth=1.6, label=aid)
        ax.plot(xs[:1], ys[:1], "o", color=color, markersize=5)
        ax.plot(xs[-1:], ys[-1:], "s", color=color, markersize=5)
    ax.legend(loc="upper right", fontsize=7)
    ax.set_title(f"{overlay['scene_id']}: {overlay['status']} after {overlay['ticks']} ticks")
    ax.set_xticks([])
    ax.set_yticks([])
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
