"""Figure rendering for evaluation reports.

The evaluate report path renders two PNG figures next to the JSON/CSV
output: per-clip metric bars and per-clip delta bars.  Rendering uses
the Agg backend and fixed styling so re-runs are byte-identical.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .transcript import ScoreReport

_DPI = 120


def _clip_axis(n_clips: int) -> float:
    return max(6.0, min(18.0, 0.9 * n_clips + 3.0))


def save_metric_figure(
    reports: Sequence[ScoreReport],
    aggregate: ScoreReport | None,
    path: str | Path,
) -> Path:
    """Grouped per-clip bars for CER/cpCER/saCER (percent)."""
    rows = sorted(reports, key=lambda r: r.clip_id)
    if aggregate is not None:
        rows = rows + [aggregate]
    labels = [r.clip_id for r in rows]
    series = [
        ("CER", [r.cer for r in rows]),
        ("cpCER", [r.cpcer for r in rows]),
        ("saCER", [r.sacer for r in rows]),
    ]
    series = [(name, vals) for name, vals in series if any(v is not None for v in vals)]

    fig, ax = plt.subplots(figsize=(_clip_axis(len(rows)), 4.0), dpi=_DPI)
    width = 0.8 / max(1, len(series))
    for k, (name, vals) in enumerate(series):
        xs = [i + k * width for i in range(len(rows))]
        ys = [0.0 if v is None else 100.0 * v for v in vals]
        ax.bar(xs, ys, width=width, label=name)
    ax.set_xticks([i + 0.4 - width / 2 for i in range(len(rows))])
    ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=8)
    ax.set_ylabel("error rate (%)")
    ax.legend(fontsize=8)
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, format="png")
    plt.close(fig)
    return path


def save_delta_figure(
    reports: Sequence[ScoreReport],
    aggregate: ScoreReport | None,
    path: str | Path,
) -> Path:
    """Per-clip bars for the attribution deltas (cpCER-CER, saCER-CER)."""
    rows = sorted(reports, key=lambda r: r.clip_id)
    if aggregate is not None:
        rows = rows + [aggregate]
    labels = [r.clip_id for r in rows]
    series = [
        ("cpCER - CER", [r.delta_cp for r in rows]),
        ("saCER - CER", [r.delta_sa for r in rows]),
    ]
    series = [(name, vals) for name, vals in series if any(v is not None for v in vals)]

    fig, ax = plt.subplots(figsize=(_clip_axis(len(rows)), 4.0), dpi=_DPI)
    width = 0.8 / max(1, len(series))
    for k, (name, vals) in enumerate(series):
        xs = [i + k * width for i in range(len(rows))]
        ys = [0.0 if v is None else 100.0 * v for v in vals]
        ax.bar(xs, ys, width=width, label=name)
    ax.axhline(0.0, color="black", linewidth=0.8)
    ax.set_xticks([i + 0.4 - width / 2 for i in range(len(rows))])
    ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=8)
    ax.set_ylabel("delta (% points)")
    ax.legend(fontsize=8)
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, format="png")
    plt.close(fig)
    return path
