"""Figures written next to the CSV reports."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .evaluate import EvalReport  # noqa: E402
from .features import DayTypeProfiles  # noqa: E402

# fixed metadata keeps PNG bytes reproducible across runs
_PNG_META = {"Software": None}


def _finish(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_PNG_META)
    plt.close(fig)
    return path


def plot_horizon_scores(report: EvalReport, path) -> Path:
    """Accuracy and F1 against horizon, one line per method."""
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
    ks = report.horizons
    for method in report.methods:
        acc = [report.overall(method, k)[0] for k in ks]
        f1 = [report.overall(method, k)[1] for k in ks]
        axes[0].plot(ks, acc, marker="o", label=method)
        axes[1].plot(ks, f1, marker="o", label=method)
    for ax, name in zip(axes, ("accuracy", "F1 score")):
        ax.set_xlabel("steps ahead (k)")
        ax.set_ylabel(name)
        ax.set_xticks(ks)
        ax.grid(alpha=0.3)
    axes[0].legend(frameon=False)
    return _finish(fig, path)


def plot_charger_accuracy(report: EvalReport, method: str, path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for k in report.horizons:
        ys = [report.mean(method, c, k)[0] for c in report.chargers]
        ax.plot(range(len(ys)), ys, marker="o", label=f"k={k}")
    ax.set_xticks(range(len(report.chargers)), report.chargers, rotation=45, ha="right")
    ax.set_ylabel("accuracy")
    ax.legend(frameon=False, fontsize="small")
    return _finish(fig, path)


def plot_sweep(rows: list[tuple[str, float]], param: str, path) -> Path:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(range(len(rows)), [acc for _, acc in rows], marker="o")
    ax.set_xticks(range(len(rows)), [v for v, _ in rows])
    ax.set_xlabel(param)
    ax.set_ylabel("test accuracy")
    ax.grid(alpha=0.3)
    return _finish(fig, path)


def plot_profiles(profiles: DayTypeProfiles, path, title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(7, 3))
    hours = [s / 6 for s in range(len(profiles.weekday))]
    ax.step(hours, profiles.weekday, where="post", label="weekday")
    ax.step(hours, profiles.weekend, where="post", label="weekend")
    ax.set_xlabel("hour of day")
    ax.set_ylabel("occupancy rate")
    ax.set_ylim(0, 1)
    ax.set_title(title)
    ax.legend(frameon=False)
    return _finish(fig, path)
