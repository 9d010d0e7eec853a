"""Audit metrics: matched-pair calibration, NDCG, binned calibration curves.

The matched-pair calibration (MPC) statistic is the mean outcome difference
Y(group item) - Y(non-group item) over a matched pair set.  Under a fair
scoring rule the near-tied items should be equally valuable on average, so an
MPC significantly above zero says the group is systematically undervalued
(and below zero, overvalued) exactly where ranking decisions are sensitive.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Item, PositionWeights, RankedSlate, objective_value
from .errors import InputError, UndefinedMetricError
from .matching import MatchedPairSet

__all__ = [
    "MpcEstimate",
    "CalibrationCurve",
    "mpc",
    "mpc_position_weighted",
    "ndcg",
    "calibration_curve",
    "binned_mean_curve",
]


@dataclass(frozen=True)
class MpcEstimate:
    """A matched-pair calibration point estimate plus optional uncertainty.

    ``variance`` and ``interval`` are left unset by the metric itself and are
    filled in by the inference module.  ``interval`` is a (lo, hi) pair at
    level ``confidence``; ``method`` records how it was obtained.
    """

    group: str
    point: float
    n_pairs: int
    epsilon: float
    variant: str
    variance: float | None = None
    interval: tuple[float, float] | None = None
    confidence: float | None = None
    method: str | None = None

    def __post_init__(self) -> None:
        if self.n_pairs < 1:
            raise UndefinedMetricError("an MPC estimate requires at least one pair")
        if self.interval is not None:
            lo, hi = self.interval
            if not lo <= self.point <= hi:
                raise InputError(
                    f"interval ({lo}, {hi}) does not contain the point {self.point}"
                )


@dataclass(frozen=True)
class CalibrationCurve:
    """Binned mean outcome against score for one side of a group partition.

    ``edges`` has ``len(counts) + 1`` entries and partitions the observed
    score range into equal-width bins; ``mean_outcome`` is NaN for empty
    bins and counts sum to the number of items on this side.
    """

    group: str
    in_group: bool
    edges: tuple[float, ...]
    mean_outcome: tuple[float, ...]
    counts: tuple[int, ...]

    @property
    def midpoints(self) -> tuple[float, ...]:
        return tuple(
            0.5 * (a + b) for a, b in zip(self.edges[:-1], self.edges[1:])
        )


def mpc(pairs: MatchedPairSet) -> MpcEstimate:
    """Mean per-pair outcome difference over a matched pair set.

    Raises :class:`UndefinedMetricError` on an empty set: an audit with no
    near-ties is undefined, not zero.
    """
    if len(pairs) == 0:
        raise UndefinedMetricError(
            f"MPC is undefined on an empty pair set (group {pairs.group!r})"
        )
    diffs = pairs.outcome_diffs()
    return MpcEstimate(
        group=pairs.group,
        point=float(sum(diffs) / len(diffs)),
        n_pairs=len(diffs),
        epsilon=pairs.epsilon,
        variant=pairs.variant,
    )


def mpc_position_weighted(
    pairs: MatchedPairSet, weights: PositionWeights
) -> MpcEstimate:
    """MPC computed per position bucket and re-averaged with position weights.

    Pairs are bucketed by the position of their higher-ranked member, since
    that slot's exposure is what a swap would reallocate.  Bucket MPCs are
    combined with weights proportional to the bucket position's weight,
    normalized over occupied buckets only.
    """
    if len(pairs) == 0:
        raise UndefinedMetricError("position-weighted MPC is undefined on an empty set")
    buckets: dict[int, list[float]] = {}
    for p in pairs.pairs:
        buckets.setdefault(p.top_position, []).append(p.outcome_diff)
    total_w = 0.0
    acc = 0.0
    for position, diffs in buckets.items():
        w = weights.weight_at(position)
        total_w += w
        acc += w * (sum(diffs) / len(diffs))
    return MpcEstimate(
        group=pairs.group,
        point=acc / total_w,
        n_pairs=len(pairs),
        epsilon=pairs.epsilon,
        variant=pairs.variant,
        method="position_weighted",
    )


def ndcg(slate: RankedSlate, weights: PositionWeights) -> float:
    """Discounted cumulative gain normalized by the outcome-ideal ordering.

    Gain is the raw outcome and the discount is the position weight, so the
    numerator is exactly the plug-in objective.  When every outcome is zero
    any order is ideal and the value is defined as 1.0.
    """
    realized = objective_value(slate, weights)
    ideal_items = tuple(
        sorted(slate.items, key=lambda it: (-it.outcome, it.id))
    )
    ideal = sum(w * it.outcome for w, it in zip(weights.values, ideal_items))
    if ideal == 0.0:
        return 1.0
    return realized / ideal


def binned_mean_curve(
    scores: np.ndarray, outcomes: np.ndarray, bins: int, lo: float, hi: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Equal-width binned means of ``outcomes`` over ``scores`` in [lo, hi].

    Returns (edges, mean_outcome, counts); the final edge is inclusive so
    counts always sum to the sample size.  Empty bins get NaN means.
    """
    if bins < 1:
        raise InputError(f"bins must be at least 1, got {bins}")
    if hi <= lo:  # degenerate range: a single bin around the common score
        edges = np.array([lo - 0.5, lo + 0.5])
        bins = 1
    else:
        edges = np.linspace(lo, hi, bins + 1)
    idx = np.clip(np.searchsorted(edges, scores, side="right") - 1, 0, bins - 1)
    counts = np.bincount(idx, minlength=bins)
    sums = np.bincount(idx, weights=outcomes, minlength=bins)
    with np.errstate(invalid="ignore"):
        means = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    return edges, means, counts


def calibration_curve(
    items: Sequence[Item], group: str, bins: int = 10
) -> tuple[CalibrationCurve, CalibrationCurve]:
    """Binned calibration curves for group members and non-members.

    Both curves share equal-width bins over the pooled observed score range,
    so they can be compared bin by bin.  Returns (member curve, non-member
    curve).
    """
    if not items:
        raise UndefinedMetricError("calibration curve is undefined on empty input")
    scores = np.array([it.score for it in items], dtype=float)
    outcomes = np.array([it.outcome for it in items], dtype=float)
    member = np.array([group in it.groups for it in items], dtype=bool)
    lo, hi = float(scores.min()), float(scores.max())

    curves = []
    for side in (True, False):
        mask = member == side
        edges, means, counts = binned_mean_curve(
            scores[mask], outcomes[mask], bins, lo, hi
        )
        curves.append(
            CalibrationCurve(
                group=group,
                in_group=side,
                edges=tuple(float(e) for e in edges),
                mean_outcome=tuple(float(m) for m in means),
                counts=tuple(int(c) for c in counts),
            )
        )
    return curves[0], curves[1]
