"""Figure rendering for CLI reports.

Each function draws one figure from an in-memory report and writes it next
to the delimited data export. Rendering is headless (Agg); figures are a
convenience view, the JSONL/TSV files remain the canonical outputs.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evaluation import EvalReport, RocReport
from .trainer import CvReport, TrainHistory


def plot_history(history: TrainHistory, path) -> None:
    fig, ax = plt.subplots(figsize=(7, 4))
    epochs = [r.epoch for r in history.records]
    ax.plot(epochs, history.losses(), lw=1.5, color="tab:blue", label="mean batch loss")
    switches = [
        r.epoch
        for prev, r in zip(history.records, history.records[1:])
        if prev.strategy != r.strategy
    ]
    for e in switches:
        ax.axvline(e - 0.5, color="tab:red", ls="--", lw=1, label="strategy switch")
    val = [(r.epoch, r.val_top1) for r in history.records if r.val_top1 is not None]
    if val:
        ax2 = ax.twinx()
        ax2.plot(*zip(*val), lw=1.5, color="tab:green", marker="o", ms=3, label="val top-1")
        ax2.set_ylabel("validation top-1")
        ax2.set_ylim(0, 1.05)
    ax.set_xlabel("epoch")
    ax.set_ylabel("mean batch loss")
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_topk(report: EvalReport, path) -> None:
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    ks = sorted(report.top_k)
    ax.bar([str(k) for k in ks], [report.top_k[k] for k in ks], color="tab:blue", width=0.6)
    for i, k in enumerate(ks):
        ax.text(i, report.top_k[k] + 0.01, f"{report.top_k[k]:.3f}", ha="center", fontsize=9)
    ax.set_xlabel("k")
    ax.set_ylabel("top-k accuracy")
    ax.set_ylim(0, 1.1)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_roc(report: RocReport, path) -> None:
    fig, ax = plt.subplots(figsize=(4.5, 4))
    fpr = [p[1] for p in report.points]
    tpr = [p[2] for p in report.points]
    ax.plot(fpr, tpr, lw=1.5, color="tab:blue", label=f"AUC = {report.auc:.3f}")
    ax.plot([0, 1], [0, 1], ls=":", lw=1, color="gray")
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    ax.set_xlim(-0.02, 1.02)
    ax.set_ylim(-0.02, 1.02)
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_cv(report: CvReport, path) -> None:
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    folds = [str(i + 1) for i in range(len(report.per_fold))]
    ax.bar(folds, report.per_fold, color="tab:blue", width=0.6)
    ax.axhline(report.mean, color="tab:red", ls="--", lw=1, label=f"mean = {report.mean:.3f}")
    ax.set_xlabel("fold")
    ax.set_ylabel("top-1 accuracy")
    ax.set_ylim(0, 1.1)
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
