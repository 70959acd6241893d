"""Figure rendering for the report path.

Each report writer has a matching renderer that drops a PNG next to the
delimited output.  Figures are a convenience view of the same numbers; the
CSV remains the authoritative artifact.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .core import EstimateBundle
from .evaluation import DetectionReport, PooledErrorReport, WinRateReport

__all__ = ["score_figure", "error_report_figure", "winrate_figure", "detection_figure"]


def _save(fig, path: str | Path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def score_figure(bundles: Sequence[EstimateBundle], path: str | Path) -> None:
    """Histograms of the entropy score and the observed class counts."""
    fig, (ax_h, ax_k) = plt.subplots(1, 2, figsize=(9, 3.5))
    entropies = [b.h_shade for b in bundles if b.h_shade is not None]
    if entropies:
        ax_h.hist(entropies, bins=min(30, max(5, len(entropies) // 5)), color="#4c72b0")
    ax_h.set_xlabel("entropy score (nats)")
    ax_h.set_ylabel("queries")
    ax_k.hist([b.k_obs for b in bundles], bins=range(1, max(b.k_obs for b in bundles) + 2),
              color="#55a868", align="left", rwidth=0.85)
    ax_k.set_xlabel("observed classes")
    ax_k.set_ylabel("queries")
    _save(fig, path)


def error_report_figure(report: PooledErrorReport, path: str | Path) -> None:
    """MAE (solid) and RMSE (dashed) per estimator across subsample sizes."""
    fig, ax = plt.subplots(figsize=(6.5, 4.2))
    for name in report.estimators:
        xs = list(report.n_values)
        color = ax.plot(xs, [report.mae(name, n) for n in xs], marker="o", label=name)[0].get_color()
        ax.plot(xs, [report.rmse(name, n) for n in xs], linestyle="--", alpha=0.5, color=color)
    ax.set_xlabel("subsample size n")
    ax.set_ylabel("error vs pool reference")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    _save(fig, path)


def winrate_figure(report: WinRateReport, path: str | Path) -> None:
    """Stacked win/tie/loss counts per baseline with the win rate annotated."""
    names = list(report.rows)
    fig, ax = plt.subplots(figsize=(6.5, 0.7 * len(names) + 1.8))
    wins = [report.rows[n].wins for n in names]
    ties = [report.rows[n].ties for n in names]
    losses = [report.rows[n].losses for n in names]
    ax.barh(names, wins, color="#55a868", label="wins")
    ax.barh(names, ties, left=wins, color="#c8c8c8", label="ties")
    ax.barh(names, losses, left=[w + t for w, t in zip(wins, ties)], color="#c44e52", label="losses")
    for i, name in enumerate(names):
        rate = report.rows[name].win_rate
        label = "n/a" if rate is None else f"{100 * rate:.1f}%"
        ax.text(report.rows[name].n_valid, i, " " + label, va="center", fontsize=8)
    ax.set_xlabel("comparisons")
    ax.legend(fontsize=8, loc="lower right")
    _save(fig, path)


def detection_figure(report: DetectionReport, path: str | Path) -> None:
    """Grouped per-dataset AUC bars (sequence + response) for each score."""
    fig, ax = plt.subplots(figsize=(7, 4))
    width = 0.8 / max(1, len(report.datasets) * 2)
    for d, ds in enumerate(report.datasets):
        for k, kind in enumerate(("s", "r")):
            offsets = [i + (2 * d + k) * width for i in range(len(report.scores))]
            values = [report.auc[(s, ds, kind)] or 0.0 for s in report.scores]
            ax.bar(offsets, values, width=width, label=f"{ds} AUC_{kind}")
    ax.set_xticks([i + 0.4 for i in range(len(report.scores))])
    ax.set_xticklabels(report.scores, rotation=30, ha="right", fontsize=8)
    ax.axhline(0.5, color="black", linewidth=0.8, linestyle=":")
    ax.set_ylabel("ROC AUC")
    ax.set_ylim(0.0, 1.0)
    ax.legend(fontsize=7)
    _save(fig, path)
