"""Write the benchmark summary table and figures."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def format_row(row: dict) -> dict[str, str]:
    rel = row["rel_time"]
    return {
        "agent": row["agent"],
        "success": f"{row['success']:.1f}",
        "avg_rank": f"{row['avg_rank']:.2f}",
        "rel_time": "N/A" if rel is None else f"{rel:.2f}",
    }


def write_summary_csv(rows: Sequence[dict], path: Path) -> Path:
    with open(path, "w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=["agent", "success", "avg_rank", "rel_time"])
        writer.writeheader()
        for row in rows:
            writer.writerow(format_row(row))
    return path


def _bar(ax, labels, values, title, ylabel, color):
    positions = range(len(labels))
    ax.bar(positions, values, color=color)
    ax.set_xticks(list(positions))
    ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=8)
    ax.set_title(title)
    ax.set_ylabel(ylabel)
    ax.grid(axis="y", alpha=0.3)


def plot_summary(rows: Sequence[dict], out_dir: Path) -> list[Path]:
    labels = [row["agent"] for row in rows]
    written = []

    fig, axes = plt.subplots(1, 2, figsize=(12, 4.5))
    _bar(axes[0], labels, [row["success"] for row in rows], "Success rate", "% of dataset runs", "#4c72b0")
    _bar(axes[1], labels, [row["avg_rank"] for row in rows], "Average rank (lower is better)", "rank", "#dd8452")
    fig.tight_layout()
    path = out_dir / "success_and_rank.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    timed = [row for row in rows if row["rel_time"] is not None]
    if timed:
        fig, ax = plt.subplots(figsize=(9, 5))
        ax.scatter([r["rel_time"] for r in timed], [r["avg_rank"] for r in timed], color="#55a868")
        for r in timed:
            ax.annotate(r["agent"], (r["rel_time"], r["avg_rank"]), fontsize=8, xytext=(4, 2), textcoords="offset points")
        ax.set_xscale("log")
        ax.invert_yaxis()
        ax.set_xlabel("relative time (log scale)")
        ax.set_ylabel("average rank")
        ax.set_title("Rank versus time")
        ax.grid(alpha=0.3)
        fig.tight_layout()
        path = out_dir / "rank_vs_time.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    return written


def write_report(rows: Sequence[dict], out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return [write_summary_csv(rows, out / "summary.csv"), *plot_summary(rows, out)]


def render_text_table(rows: Sequence[dict]) -> str:
    lines = ["agent,success,avg_rank,rel_time"]
    for row in rows:
        f = format_row(row)
        lines.append(",".join([f["agent"], f["success"], f["avg_rank"], f["rel_time"]]))
    return "\n".join(lines)
