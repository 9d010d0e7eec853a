"""Isotonic (monotone non-decreasing) score calibration via pool-adjacent-violators.

Calibrated scores replace a raw score with the monotone least-squares fit of
outcomes on scores, computed separately for members and non-members of the
audited group.  Fitting on the evaluation data itself is intentional: it is
the best calibration any post-hoc method could achieve on that data, so any
matched-pair gap that survives it cannot be blamed on marginal
miscalibration.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .core import Item, RankedSlate, rank_by_score
from .errors import InputError, UndefinedMetricError

__all__ = ["IsotonicFit", "pava_fit", "calibrate_scores", "calibrate_slates"]


@dataclass(frozen=True)
class IsotonicFit:
    """A fitted monotone step function.

    ``breakpoints`` are strictly ascending score knots (each block's leftmost
    training score); ``values`` are the non-decreasing block means and
    ``weights`` the total weight pooled into each block.  Evaluation is
    right-continuous between knots and clamps to the end blocks outside the
    training range.
    """

    breakpoints: tuple[float, ...]
    values: tuple[float, ...]
    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.breakpoints:
            raise UndefinedMetricError("isotonic fit requires at least one block")
        if any(later <= earlier for earlier, later in zip(self.breakpoints, self.breakpoints[1:])):
            raise InputError("breakpoints must be strictly ascending")
        if any(v2 < v1 for v1, v2 in zip(self.values, self.values[1:])):
            raise InputError("fitted values must be non-decreasing")

    def predict(self, scores: Iterable[float]) -> np.ndarray:
        """Evaluate the step function, clamping outside the knot range."""
        xs = np.asarray(list(scores) if not isinstance(scores, np.ndarray) else scores,
                        dtype=float)
        idx = np.searchsorted(self.breakpoints, xs, side="right") - 1
        idx = np.clip(idx, 0, len(self.values) - 1)
        return np.asarray(self.values, dtype=float)[idx]

    def predict_one(self, score: float) -> float:
        return float(self.predict(np.array([score]))[0])


def pava_fit(points: Sequence[tuple[float, float, float]]) -> IsotonicFit:
    """Weighted least-squares monotone regression of outcome on score.

    ``points`` are (score, outcome, weight) triples.  Equal scores are pooled
    by weighted mean first; pool-adjacent-violators then merges any block
    whose mean drops below its predecessor's until the sequence is
    non-decreasing, which yields the unique weighted least-squares monotone
    fit.
    """
    if not points:
        raise UndefinedMetricError("cannot fit isotonic regression to no points")
    for s, y, w in points:
        if not (math.isfinite(s) and math.isfinite(y) and math.isfinite(w)):
            raise InputError(f"non-finite training point ({s}, {y}, {w})")
        if w <= 0:
            raise InputError(f"weights must be positive, got {w}")

    ordered = sorted(points, key=lambda p: p[0])
    # Pre-pool exact score ties into single points.
    pooled: list[list[float]] = []  # [score, value, weight]
    for s, y, w in ordered:
        if pooled and pooled[-1][0] == s:
            _, v0, w0 = pooled[-1]
            pooled[-1][1] = (v0 * w0 + y * w) / (w0 + w)
            pooled[-1][2] = w0 + w
        else:
            pooled.append([s, y, w])

    # Stack-based PAVA: merge backwards while monotonicity is violated.
    blocks: list[list[float]] = []  # [leftmost score, value, weight]
    for s, v, w in pooled:
        blocks.append([s, v, w])
        while len(blocks) > 1 and blocks[-1][1] < blocks[-2][1]:
            s2, v2, w2 = blocks.pop()
            s1, v1, w1 = blocks.pop()
            blocks.append([s1, (v1 * w1 + v2 * w2) / (w1 + w2), w1 + w2])
    return IsotonicFit(
        breakpoints=tuple(b[0] for b in blocks),
        values=tuple(b[1] for b in blocks),
        weights=tuple(b[2] for b in blocks),
    )


def _fit_side(items: Sequence[Item]) -> IsotonicFit:
    return pava_fit([(it.score, it.outcome, 1.0) for it in items])


def calibrate_scores(items: Sequence[Item], group: str) -> tuple[Item, ...]:
    """Replace scores with per-partition isotonic fits of outcome on score.

    The partition is binary: members of ``group`` are calibrated with the fit
    trained on members, everything else with the fit trained on non-members.
    A side with no training points falls back to a fit on all items (with a
    warning) rather than failing the audit.
    """
    if not items:
        raise UndefinedMetricError("cannot calibrate an empty item collection")
    members = [it for it in items if group in it.groups]
    others = [it for it in items if group not in it.groups]
    global_fit: IsotonicFit | None = None
    if not members or not others:
        warnings.warn(
            f"group {group!r} partition has an empty side; falling back to a "
            "global isotonic fit for it",
            stacklevel=2,
        )
        global_fit = _fit_side(items)
    member_fit = _fit_side(members) if members else global_fit
    other_fit = _fit_side(others) if others else global_fit

    new_scores = np.empty(len(items), dtype=float)
    is_member = np.array([group in it.groups for it in items], dtype=bool)
    raw = np.array([it.score for it in items], dtype=float)
    if is_member.any():
        new_scores[is_member] = member_fit.predict(raw[is_member])
    if (~is_member).any():
        new_scores[~is_member] = other_fit.predict(raw[~is_member])
    return tuple(
        replace(it, score=float(s)) for it, s in zip(items, new_scores)
    )


def calibrate_slates(slates: Sequence[RankedSlate], group: str) -> list[RankedSlate]:
    """Calibrate every slate's scores with fits pooled across all slates.

    The member and non-member isotonic fits are trained on the items of all
    slates together (the per-group oracle-calibration setup); each slate is
    then re-ranked under its calibrated scores.
    """
    pooled = [it for s in slates for it in s.items]
    calibrated = calibrate_scores(pooled, group)
    out = []
    cursor = 0
    for s in slates:
        chunk = calibrated[cursor : cursor + len(s)]
        cursor += len(s)
        out.append(rank_by_score(chunk, query_id=s.query_id))
    return out
