"""Figure rendering for the CLI report paths.

Every report command writes CSV first; these helpers render the same
data as PNG files next to it.  Rendering is headless (Agg).
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .core import EventType, MatchRecord

_RESULT_LABELS = {"home_win": "Home win", "draw": "Draw", "away_win": "Away win"}


def save_loglik_curves(
    minutes: Sequence[float],
    series: dict[str, Sequence[float]],
    baseline: str,
    path: Path,
    title: str,
) -> None:
    """Per-minute mean log-likelihood differences against a baseline model."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    base = np.asarray(series[baseline], float)
    for name, vals in series.items():
        ax.plot(minutes, np.asarray(vals, float) - base, marker="o", label=name)
    ax.set_xlabel("forecast minute")
    ax.set_ylabel(f"mean log-likelihood vs {baseline}")
    ax.set_title(title)
    ax.axhline(0.0, color="gray", lw=0.8)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_trajectory(points: Sequence, match: MatchRecord, path: Path, top_k: int = 5) -> None:
    """Result probabilities and leading exact scores along one match."""
    minutes = [p.minute for p in points]
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(8, 7), sharex=True)
    for key in ("home_win", "draw", "away_win"):
        ax1.plot(minutes, [p.result_probs[key] for p in points], label=_RESULT_LABELS[key])
    ax1.set_ylabel("probability")
    ax1.set_ylim(0, 1)
    ax1.legend(loc="upper left")
    ax1.set_title(f"{match.home_team} x {match.away_team} ({match.season})")

    # scores appearing in any top list, ranked by their best probability
    ranked: dict = {}
    for p in points:
        for score, prob in p.top_scores:
            ranked[score] = max(ranked.get(score, 0.0), prob)
    chosen = sorted(ranked, key=lambda s: -ranked[s])[:top_k]
    for score in chosen:
        ys = []
        for p in points:
            probs = dict(p.top_scores)
            ys.append(probs.get(score, np.nan))
        ax2.plot(minutes, ys, label=f"{score[0]}-{score[1]}")
    ax2.set_xlabel("scoreboard minute")
    ax2.set_ylabel("exact-score probability")
    ax2.set_ylim(0, 1)
    ax2.legend(loc="upper left")

    for ax in (ax1, ax2):
        for ev, clock in zip(match.events, match.event_clocks()):
            minute = clock if clock <= 45 else min(90.0, clock - match.stoppage1)
            style = "--" if ev.is_goal else ":"
            color = "black" if ev.event_type in (EventType.HOME_GOAL, EventType.HOME_RED) else "red"
            ax.axvline(minute, color=color, ls=style, lw=0.9, alpha=0.7)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_summary_figures(summary: dict, out_dir: Path, prefix: str = "summary") -> list[Path]:
    """Histograms of the dataset summary (rates per minute, stoppages, scores)."""
    out: list[Path] = []

    def _bar(ax, xs, ys, xlabel, ylabel):
        ax.bar(xs, ys, width=0.85, color="#4878a8")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)

    fig, ax = plt.subplots(figsize=(8, 4))
    _bar(ax, summary["minutes"], summary["goal_rate"], "minute", "goals per match")
    ax.set_title("Goal rate by minute (regular time)")
    p = out_dir / f"{prefix}_goal_rate.png"
    fig.tight_layout(); fig.savefig(p, dpi=130); plt.close(fig); out.append(p)

    fig, ax = plt.subplots(figsize=(8, 4))
    _bar(ax, summary["minutes"], summary["red_rate"], "minute", "red cards per match")
    ax.set_title("Red-card rate by minute (regular time)")
    p = out_dir / f"{prefix}_red_rate.png"
    fig.tight_layout(); fig.savefig(p, dpi=130); plt.close(fig); out.append(p)

    fig, axes = plt.subplots(1, 2, figsize=(9, 4), sharey=True)
    for ax, half in zip(axes, (1, 2)):
        hist = summary[f"stoppage{half}_hist"]
        _bar(ax, list(range(len(hist))), hist, f"half {half} stoppage (min)", "matches")
    p = out_dir / f"{prefix}_stoppage.png"
    fig.tight_layout(); fig.savefig(p, dpi=130); plt.close(fig); out.append(p)

    fig, ax = plt.subplots(figsize=(8, 4))
    scores = summary["score_hist"]
    labels = [f"{h}-{a}" for (h, a), _ in scores]
    ax.bar(labels, [c for _, c in scores], color="#4878a8")
    ax.set_xlabel("final score")
    ax.set_ylabel("share of matches")
    ax.set_title("Most common scores")
    p = out_dir / f"{prefix}_scores.png"
    fig.tight_layout(); fig.savefig(p, dpi=130); plt.close(fig); out.append(p)
    return out
