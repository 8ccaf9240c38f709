#!/usr/bin/env python3
"""Generate charts from bench_sampling results.

Produces SVGs in benchmarks/results/ with light + dark variants:
  - sampling_{mode}_summary_{light,dark}.svg
  - sampling_{mode}_sweep_{light,dark}.svg

Usage:
    uv run python benchmarks/_generate_charts.py
"""

import json
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402, I001

RESULTS_DIR = Path(__file__).resolve().parent / "results"

METRICS = ["accuracy", "local_fidelity", "global_fidelity"]
METRIC_LABELS = {
    "accuracy": "Accuracy",
    "local_fidelity": "Local fidelity",
    "global_fidelity": "Global fidelity",
}


@dataclass
class Theme:
    name: str
    text: str
    text_dim: str
    grid: tuple[float, float, float, float]
    palette: list[str]


LIGHT = Theme(
    name="light",
    text="#24292f",
    text_dim="#656d76",
    grid=(0.5, 0.5, 0.5, 0.25),
    palette=["#4f46e5", "#d97706", "#059669", "#db2777", "#0891b2"],
)

DARK = Theme(
    name="dark",
    text="#e6edf3",
    text_dim="#8b949e",
    grid=(0.5, 0.5, 0.5, 0.25),
    palette=["#818cf8", "#fbbf24", "#34d399", "#f472b6", "#22d3ee"],
)


def _apply_theme(theme: Theme) -> None:
    plt.rcdefaults()
    plt.rcParams.update(
        {
            "figure.facecolor": "none",
            "axes.facecolor": "none",
            "savefig.facecolor": "none",
            "axes.edgecolor": theme.text_dim,
            "axes.labelcolor": theme.text,
            "axes.titlecolor": theme.text,
            "text.color": theme.text,
            "xtick.color": theme.text_dim,
            "ytick.color": theme.text_dim,
            "legend.facecolor": "none",
            "legend.edgecolor": "none",
            "legend.labelcolor": theme.text,
            "grid.color": theme.grid,
            "grid.alpha": 1.0,
            "font.size": 11,
            "axes.titlesize": 13,
            "svg.fonttype": "none",
        }
    )


def _style_ax(ax: plt.Axes) -> None:
    ax.spines["top"].set_visible(False)
    ax.spines["right"].set_visible(False)
    ax.grid(axis="y", linewidth=0.5)
    ax.tick_params(length=0)


def _save(fig: plt.Figure, name: str) -> None:
    fig.savefig(RESULTS_DIR / name, format="svg", bbox_inches="tight", transparent=True)
    plt.close(fig)
    print(f"  {name}")


def chart_summary(data: dict, theme: Theme) -> None:
    rows = data["summary"]
    fig, ax = plt.subplots(figsize=(9, 5))
    bar_width = 0.8 / len(METRICS)
    x_positions = range(len(rows))

    for i, metric in enumerate(METRICS):
        values = [row[metric] or 0.0 for row in rows]
        offsets = [x + i * bar_width for x in x_positions]
        ax.bar(offsets, values, bar_width, label=METRIC_LABELS[metric], color=theme.palette[i])
        for x, v in zip(offsets, values, strict=True):
            ax.text(x, v + 0.01, f"{v:.2f}", ha="center", va="bottom", fontsize=8)

    center = bar_width * (len(METRICS) - 1) / 2
    ax.set_xticks([x + center for x in x_positions])
    ax.set_xticklabels([row["sampling"] for row in rows])
    ax.set_ylabel("Mean over queries")
    ax.set_title(f"Sampling strategies  ({data['mode']} mode, m = {data['features']})", pad=10)
    ax.legend(ncol=3, loc="upper center", bbox_to_anchor=(0.5, -0.1), frameon=False)
    ax.set_ylim(bottom=min(0.0, *(row["local_fidelity"] or 0.0 for row in rows)), top=1.1)
    _style_ax(ax)
    fig.tight_layout()
    _save(fig, f"sampling_{data['mode']}_summary_{theme.name}.svg")


def chart_sweep(data: dict, theme: Theme) -> None:
    sweep = data["sweep"]
    samplings = list(dict.fromkeys(row["sampling"] for row in sweep))
    fig, axes = plt.subplots(1, len(METRICS), figsize=(14, 4.5), sharex=True)

    for ax, metric in zip(axes, METRICS, strict=True):
        for color, sampling in zip(theme.palette, samplings, strict=False):
            points = [(r["features"], r[metric]) for r in sweep if r["sampling"] == sampling]
            xs, ys = zip(*points, strict=True)
            ax.plot(xs, ys, marker="o", markersize=4, label=sampling, color=color, linewidth=2)
        ax.set_xscale("log")
        ax.set_xlabel("Sampled pairs (m)")
        ax.set_title(METRIC_LABELS[metric])
        _style_ax(ax)

    axes[0].legend(loc="lower right", frameon=False)
    fig.suptitle(f"Feature-count sweep  ({data['mode']} mode)")
    fig.tight_layout()
    _save(fig, f"sampling_{data['mode']}_sweep_{theme.name}.svg")


def main() -> None:
    paths = sorted(RESULTS_DIR.glob("bench_sampling_*.json"))
    if not paths:
        print("No results found; run benchmarks/bench_sampling.py first.")
        return

    for path in paths:
        data = json.loads(path.read_text())
        print(f"{path.name}: {data['mode']} mode, {data['topics']} topics")
        for theme in (LIGHT, DARK):
            _apply_theme(theme)
            chart_summary(data, theme)
            if data["sweep"]:
                chart_sweep(data, theme)

    print("\nDone!")


if __name__ == "__main__":
    main()
