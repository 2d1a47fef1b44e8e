"""Figure rendering for the CLI report path.

Reports stay plot-ready data; these helpers turn them into the standard
diagnostic plots (compression/quality frontier, pruning-ratio
distributions, entropy-vs-ratio scatter) written as PNG files next to
the delimited output.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evaluation import EvalReport


def _finite(values):
    return [v for v in values if v is not None and math.isfinite(v)]


def save_frontier(reports: Sequence[EvalReport], path) -> Path:
    """nDCG vs mean pruning ratio across a sweep, one marker per config."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    xs = [r.mean_pruning_ratio for r in reports]
    ys = [r.aggregate_ndcg for r in reports]
    ax.plot(xs, ys, marker="o", color="tab:blue")
    for report, x, y in zip(reports, xs, ys):
        ax.annotate(
            _param_label(report), (x, y), textcoords="offset points",
            xytext=(4, 4), fontsize=8,
        )
    ax.set_xlabel("mean pruning ratio")
    ax.set_ylabel("nDCG@k")
    ax.set_title(f"quality / compression frontier ({reports[0].method})")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_ratio_distribution(reports: Sequence[EvalReport], path) -> Path:
    """Per-document pruning-ratio spread for each swept configuration."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    data = [list(r.per_doc_ratio.values()) for r in reports]
    labels = [_param_label(r) for r in reports]
    ax.boxplot(data, tick_labels=labels, showfliers=False)
    ax.set_xlabel("configuration")
    ax.set_ylabel("per-document pruning ratio")
    ax.set_title(f"pruning-ratio distribution ({reports[0].method})")
    ax.grid(alpha=0.3, axis="y")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_run_diagnostics(report: EvalReport, path) -> Path:
    """Ratio histogram plus attention-entropy scatter for one run."""
    path = Path(path)
    fig, (ax_hist, ax_scatter) = plt.subplots(1, 2, figsize=(9.0, 4.0))

    ratios = list(report.per_doc_ratio.values())
    ax_hist.hist(ratios, bins=20, color="tab:blue", alpha=0.8)
    ax_hist.set_xlabel("pruning ratio")
    ax_hist.set_ylabel("documents")
    ax_hist.set_title("per-document pruning ratio")

    pairs = [
        (entropy, report.per_doc_ratio[doc_id])
        for doc_id, entropy in report.per_doc_entropy.items()
        if entropy is not None and math.isfinite(entropy)
    ]
    if pairs:
        ax_scatter.scatter(*zip(*pairs), s=12, alpha=0.6, color="tab:orange")
    ax_scatter.set_xlabel("attention entropy (nats)")
    ax_scatter.set_ylabel("pruning ratio")
    ax_scatter.set_title("entropy vs pruning ratio")

    fig.suptitle(f"{report.method} diagnostics")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_stats_histograms(
    entropies: Sequence[float], ratios: Sequence[float], path
) -> Path:
    """Corpus-level entropy and pruning-ratio histograms (stats command)."""
    path = Path(path)
    fig, (ax_entropy, ax_ratio) = plt.subplots(1, 2, figsize=(9.0, 4.0))
    ax_entropy.hist(_finite(entropies), bins=20, color="tab:green", alpha=0.8)
    ax_entropy.set_xlabel("attention entropy (nats)")
    ax_entropy.set_ylabel("documents")
    ax_ratio.hist(_finite(ratios), bins=20, color="tab:blue", alpha=0.8)
    ax_ratio.set_xlabel("pruning ratio")
    ax_ratio.set_ylabel("documents")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def _param_label(report: EvalReport) -> str:
    config = report.config
    if report.method in ("docpruner", "attn_plus_sim", "pivot_threshold"):
        return f"k={config['k']:g}"
    if report.method in ("random", "attention_ratio"):
        return f"r={config['ratio']:g}"
    if report.method == "attention_threshold":
        return f"t={config['fixed_threshold']:g}"
    if "factor" in config:
        return f"f={config['factor']}"
    return report.method
