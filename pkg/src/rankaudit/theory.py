"""Exhaustive small-instance verification of the boost/swap identity.

Re-ranking a slate after boosting one group's scores by ``alpha >= 0`` can be
realized as a sequence of adjacent swaps, each exchanging a group item with a
non-group item scored at most ``alpha`` higher.  Each swap moves the group
item into the better slot, so its objective contribution is (weight gap) x
(outcome difference), and the contributions sum exactly to the objective
delta of the boost.  This module constructs that swap sequence explicitly and
checks every step, providing an independent oracle for the boost delta.

Everything here is O(n^2) or worse by design; it is verification machinery
for small slates, not a production audit path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    Item,
    PositionWeights,
    RankedSlate,
    ScoreModifier,
    apply_modifier,
    rank_by_score,
)
from .errors import InputError, InvariantViolationError

__all__ = ["Swap", "SwapTrace", "count_misranked", "swap_decomposition", "decompose_by_position"]

#: Safety cap: the oracle refuses slates larger than this by default.
DEFAULT_MAX_ITEMS = 64


@dataclass(frozen=True)
class Swap:
    """One adjacent exchange in the decomposition.

    Before the swap the non-group item sits at ``position_above`` directly
    over the group item; ``w_plus > w_minus`` are their position weights and
    ``contribution = (w_plus - w_minus) * outcome_diff``.
    """

    item_g: Item
    item_notg: Item
    position_above: int
    position_below: int
    w_plus: float
    w_minus: float
    outcome_diff: float
    contribution: float


@dataclass(frozen=True)
class SwapTrace:
    """The full swap sequence turning the base ranking into the boosted one.

    ``ell`` holds, per group item in rank order, how many swaps it needed;
    ``prefix`` is the running total, so the trace has ``prefix[-1]`` swaps.
    """

    swaps: tuple[Swap, ...]
    ell: tuple[int, ...]
    prefix: tuple[int, ...]

    @property
    def k_total(self) -> int:
        return len(self.swaps)

    @property
    def total(self) -> float:
        return sum(s.contribution for s in self.swaps)


def _check_oracle_input(slate: RankedSlate, mod: ScoreModifier, max_items: int) -> None:
    if mod.alpha < 0:
        raise InputError("the swap oracle requires a non-negative boost")
    if len(slate) > max_items:
        raise InputError(
            f"oracle restricted to slates of at most {max_items} items, got {len(slate)}"
        )


def _flipped_pairs(
    slate: RankedSlate, mod: ScoreModifier
) -> tuple[RankedSlate, set[tuple[str, str]]]:
    """Boosted ranking plus the set of (group id, non-group id) flipped pairs."""
    boosted = rank_by_score(apply_modifier(slate.items, mod), slate.query_id)
    pos0 = slate.positions
    pos1 = boosted.positions
    flipped: set[tuple[str, str]] = set()
    for ig in slate.items:
        if mod.group not in ig.groups:
            continue
        for ino in slate.items:
            if mod.group in ino.groups:
                continue
            if (pos0[ig.id] > pos0[ino.id]) != (pos1[ig.id] > pos1[ino.id]):
                gap = ino.score - ig.score
                # The flip condition is evaluated on the rounded boosted score,
                # so the gap may exceed alpha by a rounding error of the sum.
                slack = 4.0 * np.spacing(max(abs(ig.score) + mod.alpha, abs(ino.score), 1.0))
                if not 0.0 <= gap <= mod.alpha + slack:
                    raise InvariantViolationError(
                        f"flipped pair ({ig.id}, {ino.id}) has gap {gap} "
                        f"outside [0, {mod.alpha}]"
                    )
                flipped.add((ig.id, ino.id))
    return boosted, flipped


def count_misranked(
    slate: RankedSlate, mod: ScoreModifier, max_items: int = DEFAULT_MAX_ITEMS
) -> int:
    """Number of cross-group pairs whose order differs after the boost.

    Every counted pair has the non-group item scored within ``alpha`` above
    the group item; anything further apart cannot be reordered by the boost.
    """
    _check_oracle_input(slate, mod, max_items)
    _, flipped = _flipped_pairs(slate, mod)
    return len(flipped)


def swap_decomposition(
    slate: RankedSlate,
    mod: ScoreModifier,
    weights: PositionWeights,
    max_items: int = DEFAULT_MAX_ITEMS,
) -> SwapTrace:
    """Construct and verify the adjacent-swap sequence realizing the boost.

    Group items are processed from the top of the base ranking down; each is
    bubbled up past exactly the non-group items it is misranked with, nearest
    first.  Every intermediate step is checked: the displaced item must be a
    flipped partner, and the final order must equal the boosted ranking.  Any
    violation raises :class:`InvariantViolationError`, signalling a bug in
    this machinery rather than a data problem.
    """
    _check_oracle_input(slate, mod, max_items)
    if len(weights) < len(slate):
        raise InputError("position weights must cover the slate")
    boosted, flipped = _flipped_pairs(slate, mod)

    order = list(slate.items)
    partners: dict[str, set[str]] = {}
    for gid, nid in flipped:
        partners.setdefault(gid, set()).add(nid)

    swaps: list[Swap] = []
    ell: list[int] = []
    prefix: list[int] = []
    for g_item in [it for it in slate.items if mod.group in it.groups]:
        todo = set(partners.get(g_item.id, ()))
        ell.append(len(todo))
        while todo:
            j = order.index(g_item)  # 0-based; item above sits at j - 1
            if j == 0:
                raise InvariantViolationError(
                    f"group item {g_item.id!r} reached the top with partners left"
                )
            above = order[j - 1]
            if above.id not in todo:
                raise InvariantViolationError(
                    f"item {above.id!r} blocks {g_item.id!r} but is not a "
                    "misranked partner"
                )
            w_plus = weights.weight_at(j)       # position j (1-based) above
            w_minus = weights.weight_at(j + 1)  # position j + 1 below
            diff = g_item.outcome - above.outcome
            swaps.append(
                Swap(
                    item_g=g_item,
                    item_notg=above,
                    position_above=j,
                    position_below=j + 1,
                    w_plus=w_plus,
                    w_minus=w_minus,
                    outcome_diff=diff,
                    contribution=(w_plus - w_minus) * diff,
                )
            )
            order[j - 1], order[j] = order[j], order[j - 1]
            todo.remove(above.id)
        prefix.append(len(swaps))

    if [it.id for it in order] != [it.id for it in boosted.items]:
        raise InvariantViolationError("swap sequence did not reach the boosted ranking")
    if len(swaps) != len(flipped):
        raise InvariantViolationError(
            f"executed {len(swaps)} swaps for {len(flipped)} misranked pairs"
        )
    return SwapTrace(swaps=tuple(swaps), ell=tuple(ell), prefix=tuple(prefix))


def decompose_by_position(
    slate: RankedSlate,
    mod: ScoreModifier,
    weights: PositionWeights,
    max_items: int = DEFAULT_MAX_ITEMS,
) -> np.ndarray:
    """Per-position objective changes induced by the boost.

    Entry ``j`` (0-based for position ``j + 1``) is the position weight times
    the outcome change of the item occupying that slot; entries are nonzero
    only where the boost actually changed the occupant, and the entries sum
    to the boost's objective delta.
    """
    _check_oracle_input(slate, mod, max_items)
    if len(weights) < len(slate):
        raise InputError("position weights must cover the slate")
    boosted = rank_by_score(apply_modifier(slate.items, mod), slate.query_id)
    out = np.zeros(len(slate))
    for j, (before, after) in enumerate(zip(slate.items, boosted.items)):
        out[j] = weights.values[j] * (after.outcome - before.outcome)
    return out
