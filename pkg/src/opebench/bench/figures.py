"""Render benchmark reports as matplotlib figures.

The delimited report stays the contract; figures are a convenience view of
the same rows, written next to the report when ``--plot`` is given.  Bands
show the bootstrap 5th-95th percentile range.
"""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from ..errors import IoFailure
from .report import BenchRow

_COLORS = {"BIS": "tab:blue", "NIS": "tab:orange", "EA": "tab:green"}


def _by_estimator(rows, metric):
    grouped = defaultdict(list)
    for r in rows:
        if r.metric == metric:
            grouped[r.estimator].append(r)
    return grouped


def _plot_figure1(rows, ax):
    for name, series in sorted(_by_estimator(rows, "mse").items()):
        series.sort(key=lambda r: r.param_value)
        x = [r.param_value for r in series]
        color = _COLORS.get(name)
        ax.plot(x, [r.value for r in series], marker="o", ms=3, label=name, color=color)
        ax.fill_between(
            x, [r.p5 for r in series], [r.p95 for r in series], alpha=0.2, color=color
        )
    ax.set_xlabel("signal fraction p")
    ax.set_ylabel("MSE")
    ax.set_yscale("log")
    ax.legend()


def _plot_multi_policy(rows, ax):
    series = [r for r in rows if r.metric == "rmse"]
    x = range(len(series))
    ax.bar(x, [r.value for r in series], color="tab:blue", alpha=0.7)
    ax.errorbar(
        x,
        [r.p50 for r in series],
        yerr=[
            [r.p50 - r.p5 for r in series],
            [r.p95 - r.p50 for r in series],
        ],
        fmt="none",
        ecolor="black",
        capsize=3,
    )
    ax.set_xticks(list(x), [r.estimator for r in series], rotation=45)
    ax.set_ylabel("RMSE")
    ax.set_yscale("log")


def _plot_ea_bias(rows, ax):
    wanted = [("EA", "mean"), ("EA", "analytic_mean"), ("IS", "mean"), ("TRUE", "mean")]
    series = [r for key in wanted for r in rows if (r.estimator, r.metric) == key]
    labels = [f"{r.estimator}\n{r.metric}" for r in series]
    x = range(len(series))
    ax.bar(x, [r.value for r in series], color="tab:purple", alpha=0.7)
    ax.errorbar(
        x,
        [r.p50 for r in series],
        yerr=[
            [r.p50 - r.p5 for r in series],
            [r.p95 - r.p50 for r in series],
        ],
        fmt="none",
        ecolor="black",
        capsize=3,
    )
    ax.set_xticks(list(x), labels)
    ax.set_ylabel("estimate")


def _plot_dominance(rows, ax):
    analytic = {r.param_value: r.value for r in rows if r.metric == "analytic_gap"}
    empirical = {r.param_value: r.value for r in rows if r.metric == "empirical_gap"}
    common = sorted(set(analytic) & set(empirical))
    xs = [analytic[i] for i in common]
    ys = [empirical[i] for i in common]
    ax.scatter(xs, ys, s=14)
    lim = max(max(xs, default=1.0), max(ys, default=1.0))
    ax.plot([0, lim], [0, lim], ls="--", c="gray", lw=1)
    ax.set_xlabel("analytic variance gap")
    ax.set_ylabel("empirical variance gap")


_PLOTTERS = {
    "figure1": _plot_figure1,
    "multi_policy": _plot_multi_policy,
    "ea_bias": _plot_ea_bias,
    "dominance_scan": _plot_dominance,
}


def render_figure(rows: list[BenchRow], kind: str, path: str | Path) -> None:
    """Draw the standard figure for one experiment's rows and save it."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2), layout="constrained")
    try:
        _PLOTTERS[kind](rows, ax)
        ax.set_title(kind.replace("_", " "))
        try:
            fig.savefig(path, dpi=150)
        except OSError as exc:
            raise IoFailure(f"cannot write figure to {path}: {exc}") from exc
    finally:
        plt.close(fig)
