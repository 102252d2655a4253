"""Loss curves and metric bar charts rendered with matplotlib."""

from __future__ import annotations

from pathlib import Path
from typing import Any

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402

from hrtse.artifacts import atomic_path  # noqa: E402
from hrtse.evaluation import METRIC_COLUMNS  # noqa: E402
from hrtse.training import TrainingLog  # noqa: E402


def _save(fig: Figure, path: str | Path) -> Path:
    path = Path(path)
    with atomic_path(path) as tmp:
        fig.savefig(tmp, format=path.suffix.lstrip(".") or "png", dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path


def loss_curve_figure(log: TrainingLog) -> Figure:
    epochs = [e.epoch for e in log.epochs]
    fig, (ax_loss, ax_lr) = plt.subplots(1, 2, figsize=(10, 3.5))
    ax_loss.plot(epochs, [e.train["total"] for e in log.epochs], marker="o", label="train")
    ax_loss.plot(epochs, [e.val["total"] for e in log.epochs], marker="o", label="val")
    if log.best_epoch is not None:
        ax_loss.axvline(log.best_epoch, color="gray", linestyle=":", label="best")
    ax_loss.set_xlabel("epoch")
    ax_loss.set_ylabel("total loss")
    ax_loss.set_title(f"mode={log.mode} seed={log.seed}")
    ax_loss.legend()
    ax_lr.step(epochs, log.lr_trace, where="post")
    ax_lr.set_yscale("log")
    ax_lr.set_xlabel("epoch")
    ax_lr.set_ylabel("learning rate")
    fig.tight_layout()
    return fig


def plot_loss_curves(log: TrainingLog, path: str | Path) -> Path:
    return _save(loss_curve_figure(log), path)


def metric_bars_figure(rows: dict[str, dict[str, float]]) -> Figure:
    """One panel per metric, one bar per system."""
    systems = list(rows)
    fig, axes = plt.subplots(1, len(METRIC_COLUMNS), figsize=(3 * len(METRIC_COLUMNS), 3.2))
    for ax, metric in zip(axes, METRIC_COLUMNS, strict=True):
        ax.bar(range(len(systems)), [rows[s][metric] for s in systems], color="tab:blue")
        ax.set_xticks(range(len(systems)))
        ax.set_xticklabels(systems, rotation=45, ha="right", fontsize=8)
        ax.set_title(metric)
    fig.tight_layout()
    return fig


def plot_metric_bars(ablation: dict[str, Any], path: str | Path) -> Path:
    """Bars from the JSON written by the ablation runner."""
    return _save(metric_bars_figure(ablation["rows"]), path)
