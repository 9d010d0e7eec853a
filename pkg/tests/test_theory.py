"""Tests for the swap-decomposition oracle and positional decomposition."""

from __future__ import annotations

import math

import numpy as np
import pytest

from rankaudit import (
    InputError,
    Item,
    PositionWeights,
    ScoreModifier,
    count_misranked,
    decompose_by_position,
    delta_alpha,
    rank_by_score,
    swap_decomposition,
)
from conftest import random_slate

W2 = PositionWeights((1.0, 1.0 / math.log2(3.0)))


def two_item_slate():
    return rank_by_score(
        [Item("g1", 0.50, groups={"g"}, outcome=1.0), Item("n1", 0.52, outcome=0.0)],
        "q",
    )


class TestCountMisranked:
    def test_alpha_below_min_gap(self):
        assert count_misranked(two_item_slate(), ScoreModifier("g", 0.01)) == 0

    def test_shared_item_double_flip(self):
        slate = rank_by_score(
            [Item("z", 0.73, groups={"g"}), Item("y", 0.74), Item("x", 0.75)], "q"
        )
        assert count_misranked(slate, ScoreModifier("g", 0.05)) == 2

    def test_all_items_in_group(self):
        slate = rank_by_score(
            [Item("a", 0.5, groups={"g"}), Item("b", 0.4, groups={"g"})], "q"
        )
        assert count_misranked(slate, ScoreModifier("g", 10.0)) == 0

    def test_negative_alpha_rejected(self):
        with pytest.raises(InputError):
            count_misranked(two_item_slate(), ScoreModifier("g", -0.1))

    def test_size_cap(self):
        items = [Item(f"i{k:03d}", float(k)) for k in range(70)]
        with pytest.raises(InputError):
            count_misranked(rank_by_score(items, "q"), ScoreModifier("g", 0.1))


class TestSwapDecomposition:
    def test_no_flips_empty_trace(self):
        trace = swap_decomposition(two_item_slate(), ScoreModifier("g", 0.01), W2)
        assert trace.k_total == 0
        assert trace.total == 0.0

    def test_two_item_single_swap(self):
        trace = swap_decomposition(two_item_slate(), ScoreModifier("g", 0.1), W2)
        assert trace.k_total == 1
        swap = trace.swaps[0]
        assert swap.item_g.id == "g1" and swap.item_notg.id == "n1"
        assert swap.w_plus == 1.0 and swap.w_minus == pytest.approx(0.63093, abs=1e-5)
        assert swap.outcome_diff == 1.0
        assert trace.total == pytest.approx(0.36907, abs=1e-5)

    def test_trace_counts_partition_swaps(self, rng):
        for _ in range(50):
            slate = random_slate(rng, 8, binary_outcomes=True)
            mod = ScoreModifier("g", float(rng.random()) * 0.5)
            trace = swap_decomposition(slate, mod, PositionWeights.log_discount(8))
            assert sum(trace.ell) == trace.k_total
            assert list(trace.prefix) == list(np.cumsum(trace.ell))
            assert trace.k_total == count_misranked(slate, mod)

    def test_every_swap_obeys_gap_and_weight_bounds(self, rng):
        weights = PositionWeights.log_discount(8)
        for _ in range(100):
            slate = random_slate(rng, 8)
            alpha = float(rng.random()) * 0.4
            trace = swap_decomposition(slate, ScoreModifier("g", alpha), weights)
            for swap in trace.swaps:
                gap = swap.item_notg.score - swap.item_g.score
                assert 0.0 <= gap <= alpha + 1e-12  # ulp slack at the boundary
                assert swap.w_plus > swap.w_minus

    def test_swap_total_matches_delta_on_random_slates(self, rng):
        weights = PositionWeights.log_discount(8)
        for _ in range(300):
            n = int(rng.integers(1, 9))
            slate = random_slate(rng, n)
            mod = ScoreModifier("g", float(rng.random()) * 0.6)
            want = delta_alpha(slate, mod, weights)
            assert abs(swap_decomposition(slate, mod, weights).total - want) < 1e-12

    def test_exact_tie_boundary_cases(self):
        # gap exactly alpha, both tie-break directions
        for g_id, n_id in (("a", "z"), ("z", "a")):
            slate = rank_by_score(
                [Item(g_id, 0.5, groups={"g"}, outcome=1.0), Item(n_id, 0.55, outcome=0.0)],
                "q",
            )
            mod = ScoreModifier("g", 0.05)
            trace = swap_decomposition(slate, mod, W2)
            assert trace.total == pytest.approx(delta_alpha(slate, mod, W2), abs=1e-15)


def test_positive_mpc_across_gap_grid_implies_positive_mean_delta():
    """On the confounded world, uniformly positive near-tie gaps below alpha
    must translate into a positive average objective gain from the boost."""
    from rankaudit import (
        BootstrapConfig,
        PairConfig,
        SyntheticWorld,
        bootstrap_ci,
        generate,
        test_mpc_zero,
    )

    world = SyntheticWorld(seed=77)
    slates = list(generate(world, 20_000).slates)
    alpha = 0.05
    for eps in (0.01, 0.02, 0.03, 0.04, 0.05):
        est = bootstrap_ci(
            slates, "type1", PairConfig(epsilon=eps),
            BootstrapConfig(trials=101, seed=int(eps * 1000)),
        )
        assert est.point > 0 and test_mpc_zero(est).reject  # precondition holds
    weights = PositionWeights.log_discount(world.n)
    mod = ScoreModifier("type1", alpha)
    mean_delta = float(np.mean([delta_alpha(s, mod, weights) for s in slates]))
    assert mean_delta > 0


class TestDecomposeByPosition:
    def test_no_reordering_all_zero(self):
        out = decompose_by_position(two_item_slate(), ScoreModifier("g", 0.01), W2)
        assert np.all(out == 0.0)

    def test_two_item_swap_contributions(self):
        out = decompose_by_position(two_item_slate(), ScoreModifier("g", 0.1), W2)
        assert out[0] == pytest.approx(1.0 * (1.0 - 0.0))
        assert out[1] == pytest.approx(0.6309297535714575 * (0.0 - 1.0))

    def test_sums_to_delta_on_random_slates(self, rng):
        weights = PositionWeights.log_discount(8)
        for _ in range(300):
            n = int(rng.integers(1, 9))
            slate = random_slate(rng, n)
            mod = ScoreModifier("g", float(rng.random()) * 0.6)
            want = delta_alpha(slate, mod, weights)
            assert abs(decompose_by_position(slate, mod, weights).sum() - want) < 1e-12
