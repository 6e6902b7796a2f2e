"""CSV and figure rendering for evaluation reports."""

from __future__ import annotations

import csv
import logging
from pathlib import Path
from typing import Mapping

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .evaluation import DBReport

logger = logging.getLogger(__name__)


def write_db_csv(report: DBReport, path: str | Path) -> None:
    """One row per scored node: node_id, label, level, num_clusters, db."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node_id", "label", "level", "num_clusters", "db"])
        for e in sorted(report.entries, key=lambda e: e.node_id):
            writer.writerow([e.node_id, e.label, e.level, e.num_clusters, f"{e.db:.6f}"])


def plot_db_report(report: DBReport, path: str | Path, title: str = "Cluster quality") -> None:
    """Horizontal bars of the per-node index with the mean marked."""
    entries = sorted(report.entries, key=lambda e: e.node_id)
    fig, ax = plt.subplots(figsize=(7, max(2.0, 0.45 * len(entries) + 1.2)))
    if entries:
        labels = [f"{e.label} (L{e.level})" for e in entries]
        values = [e.db for e in entries]
        ax.barh(range(len(entries)), values, color="#4878d0")
        ax.set_yticks(range(len(entries)), labels)
        ax.invert_yaxis()
        if report.mean_db is not None:
            ax.axvline(report.mean_db, color="#d65f5f", linestyle="--",
                       label=f"mean = {report.mean_db:.3f}")
            ax.legend(loc="lower right")
    else:
        ax.text(0.5, 0.5, "no scorable nodes", ha="center", va="center",
                transform=ax.transAxes)
    ax.set_xlabel("Davies-Bouldin index (lower is better)")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    logger.info("wrote figure %s", path)


def write_ablation_csv(results: Mapping[str, DBReport], path: str | Path) -> None:
    """Per-node rows for every mode, plus one mean row per mode."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["mode", "node_id", "label", "level", "num_clusters", "db"])
        for mode, report in results.items():
            for e in sorted(report.entries, key=lambda e: e.node_id):
                writer.writerow([mode, e.node_id, e.label, e.level, e.num_clusters,
                                 f"{e.db:.6f}"])
            if report.mean_db is not None:
                writer.writerow([mode, "", "mean", "", "", f"{report.mean_db:.6f}"])


def plot_ablation(results: Mapping[str, DBReport], path: str | Path) -> None:
    """Mean index per mode as a bar chart."""
    modes = list(results)
    means = [results[m].mean_db for m in modes]
    fig, ax = plt.subplots(figsize=(5, 3.2))
    colors = ["#4878d0", "#ee854a", "#6acc64", "#d65f5f", "#956cb4"]
    bars = ax.bar(modes, [m if m is not None else 0.0 for m in means],
                  color=colors[: len(modes)])
    for bar, mean in zip(bars, means):
        if mean is not None:
            ax.annotate(f"{mean:.3f}", (bar.get_x() + bar.get_width() / 2, mean),
                        ha="center", va="bottom", fontsize=9)
    ax.set_ylabel("mean Davies-Bouldin index")
    ax.set_title("Cluster quality by mode (lower is better)")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    logger.info("wrote figure %s", path)
