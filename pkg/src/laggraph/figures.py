"""Render the analysis tables to matplotlib figures, one PNG per analysis.

Monthly sections become time-series plots (distributions as a median line
with a shaded interquartile band, like the usual presentation of such
data); categorical sections become grouped bar charts.
"""

from __future__ import annotations

import re
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

_MONTH_RE = re.compile(r"^\d{4}-\d{2}$")

_DIST_METRICS = ("p25_days", "median_days", "mean_days", "p75_days")


def _by_section(rows):
    sections = defaultdict(list)
    for r in rows:
        sections[r.section].append(r)
    return sections


def _is_distribution(rows) -> bool:
    metrics = {r.metric for r in rows}
    return metrics <= set(_DIST_METRICS)


def _plot_series(ax, rows) -> None:
    by_metric = defaultdict(dict)
    for r in rows:
        by_metric[r.metric][r.group] = r.value
    groups = sorted({r.group for r in rows})
    xs = range(len(groups))
    for metric in sorted(by_metric):
        ys = [by_metric[metric].get(g) for g in groups]
        ax.plot(xs, ys, marker="o", markersize=2.5, linewidth=1, label=metric)
    _month_axis(ax, groups)
    ax.set_ylabel("proportion")
    ax.legend(fontsize=7)


def _plot_distribution(ax, rows) -> None:
    table = defaultdict(dict)
    for r in rows:
        table[r.group][r.metric] = r.value
    groups = sorted(table)
    if groups and _MONTH_RE.match(groups[0]):
        xs = range(len(groups))
        med = [table[g]["median_days"] for g in groups]
        p25 = [table[g]["p25_days"] for g in groups]
        p75 = [table[g]["p75_days"] for g in groups]
        mean = [table[g]["mean_days"] for g in groups]
        ax.fill_between(xs, p25, p75, alpha=0.3, label="p25-p75")
        ax.plot(xs, med, linewidth=1.2, label="median")
        ax.plot(xs, mean, linewidth=1, linestyle="--", label="mean")
        _month_axis(ax, groups)
    else:
        xs = range(len(groups))
        ax.bar(xs, [table[g]["median_days"] for g in groups],
               yerr=[
                   [table[g]["median_days"] - table[g]["p25_days"]
                    for g in groups],
                   [table[g]["p75_days"] - table[g]["median_days"]
                    for g in groups],
               ],
               capsize=3)
        ax.set_xticks(list(xs))
        ax.set_xticklabels(groups, rotation=45, ha="right", fontsize=7)
    ax.set_ylabel("days")
    if ax.get_legend_handles_labels()[1]:
        ax.legend(fontsize=7)


def _plot_categorical(ax, rows) -> None:
    groups = sorted({r.group for r in rows})
    metrics = sorted({r.metric for r in rows})
    width = 0.8 / max(1, len(metrics))
    for i, metric in enumerate(metrics):
        vals = {r.group: r.value for r in rows if r.metric == metric}
        xs = [j + i * width for j in range(len(groups))]
        ax.bar(xs, [vals.get(g, 0.0) for g in groups], width=width,
               label=metric)
    ax.set_xticks([j + 0.4 - width / 2 for j in range(len(groups))])
    ax.set_xticklabels(groups, fontsize=8)
    ax.set_ylabel("proportion")
    ax.legend(fontsize=7)


def _month_axis(ax, groups) -> None:
    step = max(1, len(groups) // 12)
    ticks = list(range(0, len(groups), step))
    ax.set_xticks(ticks)
    ax.set_xticklabels([groups[i] for i in ticks], rotation=45,
                       ha="right", fontsize=7)


def render_analysis(name: str, rows, outdir) -> Path:
    sections = _by_section(rows)
    n = max(1, len(sections))
    fig, axes = plt.subplots(n, 1, figsize=(8, 3.2 * n), squeeze=False)
    for ax, (section, srows) in zip(axes.flat, sorted(sections.items())):
        groups = sorted({r.group for r in srows})
        if _is_distribution(srows):
            _plot_distribution(ax, srows)
        elif groups and _MONTH_RE.match(groups[0]):
            _plot_series(ax, srows)
        else:
            _plot_categorical(ax, srows)
        ax.set_title(f"{name}: {section}", fontsize=9)
    fig.tight_layout()
    path = Path(outdir) / f"{name}.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_all(results: dict, outdir) -> list[Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    return [render_analysis(name, rows, outdir)
            for name, rows in sorted(results.items()) if rows]
