"""Figure rendering: log-log scaling fits and cumulative cost traces."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .summary import (
    SchemaError,
    load_benchmarks,
    load_summary,
    load_trace,
    sibling_trials_path,
)

FIGSIZE = (6.4, 4.8)
DPI = 120


def fit_slope(xs, ys) -> float:
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise SchemaError("log-log fit needs positive values")
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def plot_scaling(summary_csv: str, out_image: str) -> float:
    """Log-log regret scatter with error bars and a fitted slope.

    Draws one series per algorithm, annotates the fitted slope of the first
    series and a 2/3-slope reference guide. Returns the fitted slope.
    Requires at least 3 sweep points.
    """
    rows = load_summary(summary_csv)
    by_algo: dict = {}
    for row in rows:
        by_algo.setdefault(row["algo"], []).append(row)
    first_algo = rows[0]["algo"]
    if len(by_algo[first_algo]) < 3:
        raise SchemaError("scaling plot needs at least 3 sweep points")

    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    slope = math.nan
    for algo, series in sorted(by_algo.items()):
        xs = np.array([r["value"] for r in series])
        ys = np.array([max(r["mean_regret"], 1e-12) for r in series])
        es = np.array([r["stderr_regret"] for r in series])
        order = np.argsort(xs)
        xs, ys, es = xs[order], ys[order], es[order]
        ax.errorbar(xs, ys, yerr=es, marker="o", capsize=3, label=algo)
        if algo == first_algo:
            slope = fit_slope(xs, ys)
            guide = ys[0] * (xs / xs[0]) ** (2 / 3)
            ax.plot(xs, guide, "k--", linewidth=1, label="slope 2/3 guide")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("sweep value")
    ax.set_ylabel("mean regret")
    ax.set_title(f"regret scaling, fitted slope = {slope:.3f}")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_image, metadata={"Software": "mtscomb-plots"})
    plt.close(fig)
    return slope


def plot_trace(per_trial_csv: str, out_image: str, trials_csv: str = None):
    """Cumulative cost of the algorithm vs the benchmarks over time.

    The benchmark curves come from the companion trials file (mean best
    heuristic opt0 and offline optimum, ramped linearly over the horizon).
    Returns the list of curve labels drawn.
    """
    steps = load_trace(per_trial_csv)
    trials_csv = trials_csv or sibling_trials_path(per_trial_csv)
    opt0, off = load_benchmarks(trials_csv)
    ts = np.array([r["t"] for r in steps])
    cum = np.array([r["cum_cost"] for r in steps])
    horizon = ts[-1]

    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    labels = ["algorithm", "best heuristic", "offline optimum"]
    ax.plot(ts, cum, label=labels[0])
    ax.plot(ts, opt0 * ts / horizon, "--", label=labels[1])
    if not math.isnan(off):
        ax.plot(ts, off * ts / horizon, ":", label=labels[2])
    else:
        labels = labels[:2]
    ax.set_xlabel("step")
    ax.set_ylabel("cumulative cost")
    ax.set_title("cumulative cost vs benchmarks")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_image, metadata={"Software": "mtscomb-plots"})
    plt.close(fig)
    return labels
