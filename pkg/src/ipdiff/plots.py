"""Figure rendering for the report path (headless matplotlib)."""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def render_histogram(
    objectives: Sequence[float],
    path,
    oracle_objective: Optional[float] = None,
    title: str = "objective distribution of feasible samples",
) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    if objectives:
        ax.hist(objectives, bins=min(30, max(5, len(objectives) // 10)), color="#4878cf")
    if oracle_objective is not None:
        ax.axvline(oracle_objective, color="#d65f5f", linestyle="--", label="oracle optimum")
        ax.legend()
    ax.set_xlabel("objective value")
    ax.set_ylabel("count")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_loss_curve(curve: Sequence[float] | Sequence[dict], path, title: str = "training loss") -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    if curve and isinstance(curve[0], dict):
        keys = curve[0].keys()
        for key in keys:
            ax.plot([row[key] for row in curve], label=key)
        ax.legend()
    else:
        ax.plot(list(curve))
    ax.set_xlabel("epoch")
    ax.set_ylabel("loss")
    ax.set_title(title)
    ax.set_yscale("log")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_ablation_bars(rows: Sequence[dict], path, title: str = "ablation") -> None:
    """Grouped bars: feasible ratio per sampling variant."""
    rows = [row for row in rows if not row.get("absent")]
    labels = [row["variant"] for row in rows]
    ratios = [row["feasible_ratio"] for row in rows]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(range(len(labels)), ratios, color="#4878cf")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=20, ha="right")
    ax.set_ylim(0, 1)
    ax.set_ylabel("feasible ratio")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
