"""Figures for the CLI report commands, rendered off-screen to files."""

from __future__ import annotations

from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from punc.oracle import CircuitDistribution  # noqa: E402


def plot_distribution(dist: CircuitDistribution, path: str, title: str = "") -> None:
    labels = ["".join(map(str, x)) if max(dist.cardinalities) <= 10 else ",".join(map(str, x)) for x, _ in dist.items()]
    fig, ax = plt.subplots(figsize=(max(4.0, 0.25 * len(labels)), 3.0))
    ax.bar(range(len(labels)), dist.table, color="tab:blue")
    if len(labels) <= 64:
        ax.set_xticks(range(len(labels)), labels, rotation=90, fontsize=7)
    ax.set_xlabel("assignment")
    ax.set_ylabel("probability")
    ax.set_title(title or f"mass {dist.mass:.6f}")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_timings(seconds: Sequence[float], path: str, title: str = "marginal query time") -> None:
    fig, ax = plt.subplots(figsize=(4.5, 3.0))
    ax.hist([1e3 * s for s in seconds], bins=min(30, max(5, len(seconds) // 3)), color="tab:orange")
    ax.set_xlabel("milliseconds")
    ax.set_ylabel("queries")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
