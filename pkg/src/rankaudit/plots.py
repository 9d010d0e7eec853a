"""SVG figure rendering for audit reports and synthetic studies.

All figures are written as self-contained SVG files through the
non-interactive matplotlib SVG backend; no external assets are referenced.
Creation dates are stripped from the SVG metadata so repeated runs produce
stable files.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("svg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .errors import InputError

__all__ = [
    "plot_mpc_by_rule",
    "plot_ndcg_by_rule",
    "plot_mpc_vs_ndcg",
    "plot_curves",
]

matplotlib.rcParams["svg.hashsalt"] = "rankaudit"

RULE_ORDER = ("baseline", "boosted", "demoted", "calibrated")
RULE_COLORS = {
    "baseline": "tab:red",
    "boosted": "tab:blue",
    "demoted": "tab:green",
    "calibrated": "tab:purple",
}


def _save(fig, path: str | Path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None}, bbox_inches="tight")
    plt.close(fig)


def _interval_err(row: Mapping) -> tuple[list[float], list[float]]:
    point = row["point"]
    lo, hi = row["interval"]
    return [point - lo], [hi - point]


def _grouped_interval_plot(
    rows: Sequence[Mapping], metric: str, ylabel: str, path: str | Path
) -> None:
    if not rows:
        raise InputError("no rows to plot")
    groups = sorted({r["group"] for r in rows})
    rules = [r for r in RULE_ORDER if any(row["rule"] == r for row in rows)]
    fig, ax = plt.subplots(figsize=(max(6.0, 1.2 * len(groups) + 2), 4.0))
    width = 0.8 / max(len(rules), 1)
    for ri, rule in enumerate(rules):
        xs, ys, lo_err, hi_err = [], [], [], []
        for gi, group in enumerate(groups):
            for row in rows:
                if row["group"] == group and row["rule"] == rule:
                    xs.append(gi + (ri - (len(rules) - 1) / 2) * width)
                    ys.append(row[metric]["point"])
                    e_lo, e_hi = _interval_err(row[metric])
                    lo_err.extend(e_lo)
                    hi_err.extend(e_hi)
        if xs:
            ax.errorbar(
                xs, ys, yerr=[lo_err, hi_err], fmt="o", capsize=3,
                color=RULE_COLORS.get(rule, "black"), label=rule,
            )
    ax.axhline(0.0, color="gray", lw=0.8, ls=":")
    ax.set_xticks(range(len(groups)))
    ax.set_xticklabels(groups, rotation=45, ha="right")
    ax.set_ylabel(ylabel)
    ax.legend()
    _save(fig, path)


def plot_mpc_by_rule(rows: Sequence[Mapping], path: str | Path) -> None:
    """Grouped interval plot of MPC per group, one series per scoring rule."""
    _grouped_interval_plot(rows, "mpc", "matched-pair calibration", path)


def plot_ndcg_by_rule(rows: Sequence[Mapping], path: str | Path) -> None:
    """Grouped interval plot of mean NDCG per group and scoring rule."""
    _grouped_interval_plot(rows, "ndcg", "mean NDCG", path)


def plot_mpc_vs_ndcg(rows: Sequence[Mapping], path: str | Path) -> None:
    """Scatter of mean NDCG against absolute MPC, one point per (group, rule)."""
    if not rows:
        raise InputError("no rows to plot")
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    for row in rows:
        ax.scatter(
            abs(row["mpc"]["point"]),
            row["ndcg"]["point"],
            color=RULE_COLORS.get(row["rule"], "black"),
            label=row["rule"],
        )
        ax.annotate(
            row["group"],
            (abs(row["mpc"]["point"]), row["ndcg"]["point"]),
            fontsize=7,
            xytext=(3, 3),
            textcoords="offset points",
        )
    handles, labels = ax.get_legend_handles_labels()
    seen: dict[str, object] = {}
    for h, l in zip(handles, labels):
        seen.setdefault(l, h)
    ax.legend(seen.values(), seen.keys())
    ax.set_xlabel("|matched-pair calibration|")
    ax.set_ylabel("mean NDCG")
    _save(fig, path)


def plot_curves(
    curves: Mapping[str, tuple[Sequence[float], Sequence[float]]],
    path: str | Path,
    xlabel: str = "score",
    ylabel: str = "mean outcome",
    identity: bool = True,
) -> None:
    """Line plot of named (x, y) curves, optionally with the identity line."""
    if not curves:
        raise InputError("no curves to plot")
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    if identity:
        ax.plot([0, 1], [0, 1], color="gray", lw=0.8, ls=":", label="identity")
    for name in sorted(curves):
        xs, ys = curves[name]
        ax.plot(xs, ys, marker="o", ms=3, label=name)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend()
    _save(fig, path)
