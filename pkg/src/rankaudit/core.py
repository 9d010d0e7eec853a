"""Core domain types: items, ranked slates, position weights, score boosts.

A ranker assigns each item a scalar score; sorting by score induces the
slate order.  The decision maker's objective is the position-weighted sum of
item outcomes, with strictly decreasing weights so that higher slots are
worth more.  A :class:`ScoreModifier` with boost ``alpha`` uniformly shifts
the scores of one group; :func:`delta_alpha` measures how much the objective
would change if the ranking were rebuilt under the shifted scores.

All types are immutable and all operations are pure, so slates can be
processed concurrently without shared state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from .errors import InputError

__all__ = [
    "Item",
    "RankedSlate",
    "PositionWeights",
    "ScoreModifier",
    "rank_by_score",
    "objective_value",
    "apply_modifier",
    "delta_alpha",
    "rerank_with_modifier",
]


@dataclass(frozen=True, slots=True)
class Item:
    """One rankable item: an id, a ranking score, group labels, an outcome.

    An item may carry several group labels; each label is audited as its own
    binary membership.  ``outcome`` is the single realized value observed for
    the item ({0, 1} for binary tasks, a star rating for recommenders).
    """

    id: str
    score: float
    groups: frozenset[str] = field(default_factory=frozenset)
    outcome: float = 0.0

    def __post_init__(self) -> None:
        if not isinstance(self.groups, frozenset):
            object.__setattr__(self, "groups", frozenset(self.groups))
        if not math.isfinite(self.score):
            raise InputError(f"item {self.id!r} has non-finite score {self.score!r}")
        if not math.isfinite(self.outcome):
            raise InputError(f"item {self.id!r} has non-finite outcome {self.outcome!r}")

    def in_group(self, group: str) -> bool:
        return group in self.groups


@dataclass(frozen=True)
class RankedSlate:
    """One query's items in ranked order.

    The item at index ``j`` occupies position ``j + 1``; positions therefore
    cover 1..n with no gaps.  Construction enforces the canonical order:
    strictly non-increasing score, ties broken by ascending item id.  Use
    :func:`rank_by_score` to build a slate from unordered items.
    """

    query_id: str
    items: tuple[Item, ...]

    def __post_init__(self) -> None:
        if not isinstance(self.items, tuple):
            object.__setattr__(self, "items", tuple(self.items))
        prev: Item | None = None
        for it in self.items:
            if prev is not None:
                if it.score > prev.score or (it.score == prev.score and it.id <= prev.id):
                    raise InputError(
                        f"slate {self.query_id!r} violates ranked order at item {it.id!r}"
                    )
            prev = it
        if len({it.id for it in self.items}) != len(self.items):
            raise InputError(f"slate {self.query_id!r} has duplicate item ids")

    def __len__(self) -> int:
        return len(self.items)

    @property
    def positions(self) -> dict[str, int]:
        """Map item id -> 1-based position.  Rebuilt on each access."""
        return {it.id: j + 1 for j, it in enumerate(self.items)}


@dataclass(frozen=True)
class PositionWeights:
    """Strictly decreasing positive weights, one per slate position."""

    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if not isinstance(self.values, tuple):
            object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if not self.values:
            raise InputError("position weights must be nonempty")
        prev = math.inf
        for v in self.values:
            if not math.isfinite(v) or v <= 0.0:
                raise InputError(f"position weight {v!r} is not a positive finite real")
            if v >= prev:
                raise InputError("position weights must be strictly decreasing")
            prev = v

    @classmethod
    def log_discount(cls, n: int) -> "PositionWeights":
        """The default discount w_j = 1 / log2(j + 1), j = 1..n."""
        if n < 1:
            raise InputError("need at least one position")
        return cls(tuple(1.0 / math.log2(j + 1) for j in range(1, n + 1)))

    def weight_at(self, position: int) -> float:
        """Weight of a 1-based position."""
        if not 1 <= position <= len(self.values):
            raise InputError(f"position {position} outside weight range 1..{len(self.values)}")
        return self.values[position - 1]

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class ScoreModifier:
    """Additive boost ``alpha`` applied to every item of ``group``.

    Demotion is the same operation with negative ``alpha``.
    """

    group: str
    alpha: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.alpha):
            raise InputError(f"alpha must be finite, got {self.alpha!r}")


def rank_by_score(items: Iterable[Item], query_id: str = "") -> RankedSlate:
    """Sort items by descending score into a slate.

    Equal scores are ordered by ascending item id so that ranking is
    deterministic and idempotent.  Items with non-finite scores are rejected
    at construction time.
    """
    ordered = sorted(items, key=lambda it: (-it.score, it.id))
    return RankedSlate(query_id=query_id, items=tuple(ordered))


def objective_value(slate: RankedSlate, weights: PositionWeights) -> float:
    """Position-weighted sum of realized outcomes, the plug-in objective."""
    if len(weights) < len(slate):
        raise InputError(
            f"weights cover {len(weights)} positions but slate has {len(slate)} items"
        )
    return sum(w * it.outcome for w, it in zip(weights.values, slate.items))


def apply_modifier(items: Sequence[Item], mod: ScoreModifier) -> tuple[Item, ...]:
    """Return copies of ``items`` with the group boost applied to scores.

    Outcomes and group labels are untouched; items outside ``mod.group`` are
    returned unchanged.
    """
    return tuple(
        replace(it, score=it.score + mod.alpha) if mod.group in it.groups else it
        for it in items
    )


def delta_alpha(slate: RankedSlate, mod: ScoreModifier, weights: PositionWeights) -> float:
    """Objective change from re-ranking the slate under boosted scores.

    Positive values mean the decision maker would gain by uniformly boosting
    ``mod.group``, i.e. the group is currently undervalued by the ranker.
    """
    boosted = rank_by_score(apply_modifier(slate.items, mod), slate.query_id)
    return objective_value(boosted, weights) - objective_value(slate, weights)


def rerank_with_modifier(
    slates: Sequence[RankedSlate], mod: ScoreModifier
) -> list[RankedSlate]:
    """Apply a boost to every slate and re-rank each one."""
    return [
        rank_by_score(apply_modifier(s.items, mod), s.query_id) for s in slates
    ]
