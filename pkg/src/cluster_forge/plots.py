"""Matplotlib figures rendered alongside the delimited reports.

Only data plots are produced here (deviation scatter, stability lines);
drawing maps is out of scope.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .metrics import DeviationReport, StabilityRecord


def render_deviation_figure(
    reports: list[tuple[str, DeviationReport]], path: str
) -> None:
    """Scatter of per-cluster population deviations, one column per option,
    with the option's mean absolute deviation marked."""
    fig, ax = plt.subplots(figsize=(max(4.0, 1.6 * len(reports) + 2.0), 4.5))
    for i, (label, report) in enumerate(reports):
        ys = [e.deviation_percent for e in report.entries]
        ax.scatter([i] * len(ys), ys, s=18, alpha=0.65, zorder=3)
        ax.scatter(
            [i],
            [report.average_absolute],
            marker="_",
            s=600,
            color="black",
            zorder=4,
            label="mean |deviation|" if i == 0 else None,
        )
    ax.axhline(0.0, color="gray", lw=0.8, zorder=1)
    ax.set_xticks(range(len(reports)))
    ax.set_xticklabels([label for label, _ in reports])
    ax.set_xlabel("clustering option")
    ax.set_ylabel("population deviation from ideal (%)")
    ax.set_title("Per-cluster population deviation by option")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_stability_figure(records: list[StabilityRecord], path: str) -> None:
    """Line plot of DC, VI and VI/APC across consecutive transitions."""
    xs = range(len(records))
    labels = [f"{r.from_label}→{r.to_label}" for r in records]
    fig, ax = plt.subplots(figsize=(max(6.0, 1.1 * len(records) + 2.0), 4.5))
    ax.plot(xs, [r.dc_percent for r in records], "o-", color="black", label="DC (%)")
    ax.set_ylabel("different clusters (%)")
    ax.set_xlabel("transition")
    ax.set_xticks(list(xs))
    ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=7)
    ax2 = ax.twinx()
    ax2.plot(
        xs,
        [r.vi_bits_per_county for r in records],
        "s--",
        color="tab:blue",
        label="VI (bits/county)",
    )
    ax2.plot(
        xs,
        [r.vi_over_apc if r.vi_over_apc is not None else float("nan") for r in records],
        "^:",
        color="tab:red",
        label="VI/APC (bits/%)",
    )
    ax2.set_ylabel("VI, VI/APC")
    lines1, labels1 = ax.get_legend_handles_labels()
    lines2, labels2 = ax2.get_legend_handles_labels()
    ax.legend(lines1 + lines2, labels1 + labels2, loc="best", fontsize=8)
    ax.set_title("Clustering stability across population updates")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
