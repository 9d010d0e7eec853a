"""Construction of matched pair sets: near-tied cross-group item pairs.

A matched pair joins an audited-group item to a non-group item from the same
query whose score is at most ``epsilon`` higher.  Because the ranker is
nearly indifferent between the two, any systematic outcome gap over many such
pairs is evidence that the group is being misvalued at the margin.

Three selection variants are supported: a fixed gap threshold, the K pairs
with the smallest gaps pooled across queries, and a filter restricting the
set to pairs occupying adjacent slate positions.  Pairs sharing an item are
deliberately retained; the induced correlation is handled by the inference
module, not by deduplication here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .core import Item, RankedSlate
from .errors import ConfigurationError, InputError, UndefinedMetricError

__all__ = [
    "MatchedPair",
    "MatchedPairSet",
    "PairConfig",
    "build_pairs_epsilon",
    "epsilon_from_percentile",
    "build_pairs_k_smallest",
    "filter_adjacent",
    "pool_across_queries",
    "build_pair_set",
]

#: Allowed values of MatchedPairSet.variant.
VARIANTS = ("epsilon", "k_smallest", "adjacent")


@dataclass(frozen=True)
class MatchedPair:
    """One cross-group near-tie within a query.

    ``score_gap`` is score(non-group item) - score(group item); it is
    non-negative for directional sets and may be negative only for adjacent
    pairs admitted with the group item ranked first.
    """

    query_id: str
    item_g: Item
    item_notg: Item
    score_gap: float
    position_g: int
    position_notg: int
    adjacent: bool

    @property
    def outcome_diff(self) -> float:
        """Y(group item) - Y(non-group item); the per-pair audit signal."""
        return self.item_g.outcome - self.item_notg.outcome

    @property
    def top_position(self) -> int:
        """Position of the higher-ranked member (smaller index)."""
        return min(self.position_g, self.position_notg)


def _sort_key(pair: MatchedPair) -> tuple:
    return (pair.score_gap, pair.query_id, pair.item_g.id, pair.item_notg.id)


@dataclass(frozen=True)
class MatchedPairSet:
    """A collection of matched pairs for one audited group.

    Pairs are kept in ascending score-gap order (ties broken by query and
    item ids) so that identical inputs always produce identical sets.
    """

    group: str
    epsilon: float
    pairs: tuple[MatchedPair, ...]
    variant: str = "epsilon"

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ConfigurationError(f"unknown pair-set variant {self.variant!r}")
        if not isinstance(self.pairs, tuple):
            object.__setattr__(self, "pairs", tuple(self.pairs))
        gaps = [p.score_gap for p in self.pairs]
        if any(g2 < g1 for g1, g2 in zip(gaps, gaps[1:])):
            object.__setattr__(self, "pairs", tuple(sorted(self.pairs, key=_sort_key)))

    def __len__(self) -> int:
        return len(self.pairs)

    def outcome_diffs(self) -> list[float]:
        return [p.outcome_diff for p in self.pairs]


def _cross_pairs(slate: RankedSlate, group: str) -> Iterable[tuple[Item, int, Item, int]]:
    """Yield (group item, position, non-group item, position) combinations."""
    members: list[tuple[Item, int]] = []
    others: list[tuple[Item, int]] = []
    for j, it in enumerate(slate.items, start=1):
        (members if group in it.groups else others).append((it, j))
    for ig, pg in members:
        for ino, pn in others:
            yield ig, pg, ino, pn


def build_pairs_epsilon(slate: RankedSlate, group: str, epsilon: float) -> MatchedPairSet:
    """All cross-group pairs with the group item scored lower by at most epsilon.

    Pairs that share an item with another pair are all retained.
    """
    if math.isnan(epsilon) or epsilon < 0:
        raise InputError(f"epsilon must be a non-negative real, got {epsilon!r}")
    pairs = []
    for ig, pg, ino, pn in _cross_pairs(slate, group):
        gap = ino.score - ig.score
        if 0.0 <= gap <= epsilon:
            pairs.append(
                MatchedPair(
                    query_id=slate.query_id,
                    item_g=ig,
                    item_notg=ino,
                    score_gap=gap,
                    position_g=pg,
                    position_notg=pn,
                    adjacent=abs(pg - pn) == 1,
                )
            )
    pairs.sort(key=_sort_key)
    return MatchedPairSet(group=group, epsilon=epsilon, pairs=tuple(pairs), variant="epsilon")


def _pooled_gaps(slates: Iterable[RankedSlate], group: str) -> list[float]:
    gaps = []
    for slate in slates:
        for ig, _, ino, _ in _cross_pairs(slate, group):
            gap = ino.score - ig.score
            if gap >= 0.0:
                gaps.append(gap)
    return gaps


def epsilon_from_percentile(
    slates: Sequence[RankedSlate], group: str, percentile: float = 1.0
) -> float:
    """Nearest-rank percentile of the pooled non-negative cross-group gaps.

    The default (first percentile) yields a tight threshold that still keeps
    roughly one percent of all candidate pairs.
    """
    if not 0.0 < percentile <= 100.0:
        raise InputError(f"percentile must be in (0, 100], got {percentile!r}")
    gaps = _pooled_gaps(slates, group)
    if not gaps:
        raise UndefinedMetricError(
            f"no eligible cross-group score gaps for group {group!r}"
        )
    gaps.sort()
    rank = math.ceil(percentile / 100.0 * len(gaps))  # nearest-rank, 1-based
    return gaps[rank - 1]


def build_pairs_k_smallest(
    slates: Sequence[RankedSlate], group: str, k: int
) -> MatchedPairSet:
    """The k eligible pairs with the smallest score gaps, pooled over queries.

    Ties at the k-th gap are broken by (query id, item ids) ascending; if
    fewer than k eligible pairs exist, all of them are returned.  The set's
    ``epsilon`` records the largest admitted gap.
    """
    if k < 1:
        raise InputError(f"k must be at least 1, got {k}")
    candidates = []
    for slate in slates:
        for ig, pg, ino, pn in _cross_pairs(slate, group):
            gap = ino.score - ig.score
            if gap >= 0.0:
                candidates.append(
                    MatchedPair(
                        query_id=slate.query_id,
                        item_g=ig,
                        item_notg=ino,
                        score_gap=gap,
                        position_g=pg,
                        position_notg=pn,
                        adjacent=abs(pg - pn) == 1,
                    )
                )
    candidates.sort(key=_sort_key)
    chosen = tuple(candidates[:k])
    epsilon = chosen[-1].score_gap if chosen else 0.0
    return MatchedPairSet(group=group, epsilon=epsilon, pairs=chosen, variant="k_smallest")


def filter_adjacent(
    pairs: MatchedPairSet,
    slates: Sequence[RankedSlate],
    include_both_orientations: bool = False,
) -> MatchedPairSet:
    """Restrict a pair set to pairs occupying adjacent slate positions.

    With ``include_both_orientations`` the set also admits adjacent near-ties
    where the audited-group item is ranked first; those pairs carry a
    negative ``score_gap`` (its magnitude still within the set's epsilon) as
    the explicit orientation flag.
    """
    kept = [p for p in pairs.pairs if p.adjacent]
    if include_both_orientations:
        for slate in slates:
            for j in range(len(slate) - 1):
                upper, lower = slate.items[j], slate.items[j + 1]
                if pairs.group in upper.groups and pairs.group not in lower.groups:
                    gap = lower.score - upper.score  # <= 0 by slate order
                    if gap < 0.0 and -gap <= pairs.epsilon:
                        kept.append(
                            MatchedPair(
                                query_id=slate.query_id,
                                item_g=upper,
                                item_notg=lower,
                                score_gap=gap,
                                position_g=j + 1,
                                position_notg=j + 2,
                                adjacent=True,
                            )
                        )
    kept.sort(key=_sort_key)
    return MatchedPairSet(
        group=pairs.group, epsilon=pairs.epsilon, pairs=tuple(kept), variant="adjacent"
    )


def pool_across_queries(per_query_sets: Sequence[MatchedPairSet]) -> MatchedPairSet:
    """Union of per-query pair sets, re-sorted by score gap."""
    if not per_query_sets:
        raise ConfigurationError("cannot pool an empty collection of pair sets")
    groups = {s.group for s in per_query_sets}
    variants = {s.variant for s in per_query_sets}
    if len(groups) > 1 or len(variants) > 1:
        raise ConfigurationError(
            f"cannot pool pair sets with mixed groups {groups} or variants {variants}"
        )
    pairs = [p for s in per_query_sets for p in s.pairs]
    pairs.sort(key=_sort_key)
    return MatchedPairSet(
        group=per_query_sets[0].group,
        epsilon=max(s.epsilon for s in per_query_sets),
        pairs=tuple(pairs),
        variant=per_query_sets[0].variant,
    )


@dataclass(frozen=True)
class PairConfig:
    """How to build a matched pair set from a collection of slates.

    Exactly one of ``epsilon`` / ``k`` selects the base set; ``adjacent``
    optionally restricts it to adjacent positions afterwards.  Threshold
    selection by percentile happens before a PairConfig is formed (see
    :func:`epsilon_from_percentile`), so a config is always concrete and a
    bootstrap trial can rebuild pairs without re-deriving thresholds.
    """

    epsilon: float | None = None
    k: int | None = None
    adjacent: bool = False
    include_both_orientations: bool = False

    def __post_init__(self) -> None:
        if (self.epsilon is None) == (self.k is None):
            raise ConfigurationError("exactly one of epsilon and k must be set")
        if self.include_both_orientations and not self.adjacent:
            raise ConfigurationError(
                "include_both_orientations requires the adjacent filter"
            )


def build_pair_set(
    slates: Sequence[RankedSlate], group: str, config: PairConfig
) -> MatchedPairSet:
    """Build the pooled matched pair set described by ``config``."""
    if config.k is not None:
        pooled = build_pairs_k_smallest(slates, group, config.k)
    else:
        per_query = [build_pairs_epsilon(s, group, config.epsilon) for s in slates]
        pooled = pool_across_queries(per_query) if per_query else MatchedPairSet(
            group=group, epsilon=config.epsilon, pairs=(), variant="epsilon"
        )
    if config.adjacent:
        pooled = filter_adjacent(pooled, slates, config.include_both_orientations)
    return pooled
