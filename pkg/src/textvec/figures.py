"""Plots rendered next to the text outputs.

Uses the Agg backend so rendering needs no display and writes the same
PNG bytes for the same inputs, which keeps figure files inside the
byte-reproducibility contract of deterministic runs.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def save_loss_curve(log, path) -> None:
    """Mean negative log-likelihood against epoch, from LossLogEntry rows."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot([e.epoch for e in log], [e.loss for e in log],
            marker="o", color="tab:blue")
    ax.set_xlabel("epoch")
    ax.set_ylabel("mean negative log-likelihood")
    ax.set_title("Training loss")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_accuracy_curve(log, path) -> None:
    """Loss and train accuracy against epoch, from AccuracyLogEntry rows."""
    fig, ax = plt.subplots(figsize=(6, 4))
    epochs = [e.epoch for e in log]
    ax.plot(epochs, [e.loss for e in log], marker="o", color="tab:blue",
            label="loss")
    ax.set_xlabel("epoch")
    ax.set_ylabel("mean cross-entropy")
    twin = ax.twinx()
    twin.plot(epochs, [e.accuracy for e in log], marker="s",
              color="tab:orange", label="accuracy")
    twin.set_ylabel("train accuracy")
    twin.set_ylim(0.0, 1.05)
    lines = ax.get_lines() + twin.get_lines()
    ax.legend(lines, [line.get_label() for line in lines], loc="center right")
    ax.set_title("Classifier training")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_metric_bars(report, path) -> None:
    """Bar chart of the four report metrics."""
    fig, ax = plt.subplots(figsize=(6, 4))
    names = ["BLEU-1", "BLEU-3", "BLEU-4", "CIDEr"]
    values = [report.bleu1, report.bleu3, report.bleu4, report.cider]
    bars = ax.bar(names, values, color=["tab:blue"] * 3 + ["tab:orange"])
    for bar, value in zip(bars, values):
        ax.annotate(f"{value:.3f}", (bar.get_x() + bar.get_width() / 2, value),
                    ha="center", va="bottom", fontsize=9)
    ax.set_ylabel("score")
    ax.set_title(f"Caption metrics over {report.record_count} records")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
