"""Walkthrough: why near-tie outcome gaps predict the value of a boost.

Re-ranking after a group boost can be decomposed into adjacent swaps, each
exchanging a boosted item with a non-group item scored at most alpha higher.
Every swap contributes (weight gap) x (outcome difference) to the ranking
objective, and the contributions add up exactly to the objective change of
the boost.  This is the mechanism that ties the matched-pair audit metric to
decision-maker value: if near-tied group items systematically out-earn their
counterparts, every swap has positive expected value, so boosting the group
must improve the objective.

Run:  python demos/02_swap_identity.py
"""

import numpy as np

from rankaudit import (
    Item,
    PositionWeights,
    ScoreModifier,
    count_misranked,
    delta_alpha,
    decompose_by_position,
    rank_by_score,
    swap_decomposition,
)

weights = PositionWeights.log_discount(6)
items = [
    Item("doc-a", score=0.71, groups={"docs"}, outcome=1.0),
    Item("doc-b", score=0.64, groups={"docs"}, outcome=1.0),
    Item("vid-x", score=0.75, outcome=0.0),
    Item("vid-y", score=0.73, outcome=1.0),
    Item("vid-z", score=0.66, outcome=0.0),
    Item("vid-w", score=0.20, outcome=0.0),
]
slate = rank_by_score(items, "q0")
mod = ScoreModifier("docs", alpha=0.05)

print("base ranking:")
for pos, it in enumerate(slate.items, start=1):
    tag = "docs" if "docs" in it.groups else "    "
    print(f"  {pos}. {it.id:6s} [{tag}] score={it.score:.2f} outcome={it.outcome:.0f}")

print(f"\nboosting 'docs' by alpha={mod.alpha} flips "
      f"{count_misranked(slate, mod)} cross-group pairs")

trace = swap_decomposition(slate, mod, weights)
print("\nswap sequence (each is one adjacent exchange):")
for k, swap in enumerate(trace.swaps, start=1):
    print(
        f"  swap {k}: {swap.item_g.id} overtakes {swap.item_notg.id} "
        f"at positions {swap.position_above}<->{swap.position_below}; "
        f"(w+ - w-) * d = ({swap.w_plus:.4f} - {swap.w_minus:.4f}) * "
        f"{swap.outcome_diff:+.0f} = {swap.contribution:+.4f}"
    )
print(f"swaps per group item (top down): {trace.ell}")

delta = delta_alpha(slate, mod, weights)
print(f"\nsum of swap contributions: {trace.total:+.6f}")
print(f"objective delta of the boost: {delta:+.6f}")
print(f"identical: {abs(trace.total - delta) < 1e-12}")

per_position = decompose_by_position(slate, mod, weights)
print("\nper-position view (weight x occupant outcome change):")
for pos, contribution in enumerate(per_position, start=1):
    marker = " <- changed" if contribution != 0 else ""
    print(f"  position {pos}: {contribution:+.4f}{marker}")
print(f"sum: {per_position.sum():+.6f}")

print("\nstress test: 2,000 random slates ...")
rng = np.random.default_rng(0)
worst = 0.0
for trial in range(2_000):
    n = int(rng.integers(1, 9))
    rand_items = [
        Item(
            f"i{j}",
            float(np.round(rng.random(), 6)),
            groups={"docs"} if rng.random() < 0.5 else frozenset(),
            outcome=float(rng.random()),
        )
        for j in range(n)
    ]
    rand_slate = rank_by_score(rand_items, f"q{trial}")
    rand_mod = ScoreModifier("docs", float(rng.random()) * 0.5)
    w8 = PositionWeights.log_discount(8)
    want = delta_alpha(rand_slate, rand_mod, w8)
    got = swap_decomposition(rand_slate, rand_mod, w8).total
    worst = max(worst, abs(got - want))
print(f"max |swap total - objective delta| = {worst:.2e}")
