"""Tests for pool-adjacent-violators and per-group score calibration."""

from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rankaudit import Item, UndefinedMetricError, calibrate_scores, pava_fit
from rankaudit.calibration import calibrate_slates
from rankaudit.metrics import binned_mean_curve
from rankaudit import rank_by_score


def monotone_ls_oracle(scores, outcomes, weights):
    """Independent monotone least-squares via the max-min interval formula.

    fit[i] = max over a <= i of min over b >= i of the weighted mean of
    outcomes[a..b]; a classical closed form for isotonic regression that
    shares no code with the pool-adjacent-violators implementation.
    """
    order = np.argsort(scores, kind="stable")
    y = np.asarray(outcomes, float)[order]
    w = np.asarray(weights, float)[order]
    n = len(y)
    fit = np.empty(n)
    for i in range(n):
        best = -np.inf
        for a in range(i + 1):
            worst = np.inf
            for b in range(i, n):
                seg_w = w[a : b + 1]
                worst = min(worst, float(np.dot(seg_w, y[a : b + 1]) / seg_w.sum()))
            best = max(best, worst)
        fit[i] = best
    out = np.empty(n)
    out[order] = fit
    return out


class TestPavaFit:
    def test_monotone_data_passes_through(self):
        fit = pava_fit([(0.1, 1.0, 1.0), (0.2, 2.0, 1.0), (0.3, 3.0, 1.0)])
        assert fit.breakpoints == (0.1, 0.2, 0.3)
        assert fit.values == (1.0, 2.0, 3.0)
        assert list(fit.predict([0.1, 0.2, 0.3])) == [1.0, 2.0, 3.0]

    def test_violator_pair_pools_to_mean(self):
        fit = pava_fit([(0.1, 3.0, 1.0), (0.2, 1.0, 1.0)])
        assert fit.values == (2.0,)
        assert list(fit.predict([0.1, 0.2])) == [2.0, 2.0]

    def test_violator_pair_matches_fine_grid_search(self):
        # exhaustive minimization of the squared error over monotone pairs
        grid = np.linspace(0.0, 4.0, 401)
        best, best_err = None, np.inf
        for v1 in grid:
            for v2 in grid[grid >= v1 - 1e-12]:
                err = (v1 - 3.0) ** 2 + (v2 - 1.0) ** 2
                if err < best_err:
                    best, best_err = (v1, v2), err
        fit = pava_fit([(0.1, 3.0, 1.0), (0.2, 1.0, 1.0)])
        predictions = fit.predict([0.1, 0.2])
        assert predictions[0] == pytest.approx(best[0], abs=0.011)
        assert predictions[1] == pytest.approx(best[1], abs=0.011)

    def test_single_point_is_constant(self):
        fit = pava_fit([(0.7, 0.4, 2.0)])
        assert list(fit.predict([-10.0, 0.7, 10.0])) == [0.4, 0.4, 0.4]

    def test_equal_scores_pre_pooled(self):
        fit = pava_fit([(0.5, 0.0, 1.0), (0.5, 1.0, 3.0)])
        assert fit.breakpoints == (0.5,)
        assert fit.values[0] == pytest.approx(0.75)

    def test_extrapolation_clamps_and_steps_are_right_continuous(self):
        fit = pava_fit([(0.0, 0.0, 1.0), (1.0, 1.0, 1.0)])
        assert list(fit.predict([-5.0, 0.0, 0.999, 1.0, 5.0])) == [0.0, 0.0, 0.0, 1.0, 1.0]

    def test_empty_input_rejected(self):
        with pytest.raises(UndefinedMetricError):
            pava_fit([])

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=40, deadline=None)
    def test_matches_oracle_on_random_instances(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 9))
        scores = rng.random(n)
        outcomes = rng.random(n) * 4.0
        weights = rng.uniform(0.5, 2.0, n)
        fit = pava_fit(list(zip(scores, outcomes, weights)))
        assert np.allclose(
            fit.predict(scores), monotone_ls_oracle(scores, outcomes, weights),
            atol=1e-6,
        )

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=40, deadline=None)
    def test_values_always_non_decreasing(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 30))
        scores = np.round(rng.random(n), 2)  # provoke duplicate scores
        fit = pava_fit([(s, float(rng.random()), 1.0) for s in scores])
        assert all(a <= b for a, b in zip(fit.values, fit.values[1:]))
        assert all(a < b for a, b in zip(fit.breakpoints, fit.breakpoints[1:]))


def random_items(rng, n):
    return [
        Item(
            f"i{k}",
            float(rng.random()),
            groups={"g"} if rng.random() < 0.5 else frozenset(),
            outcome=float(rng.random()),
        )
        for k in range(n)
    ]


class TestCalibrateScores:
    def test_constant_outcomes_per_partition(self):
        items = [
            Item("a", 0.1, groups={"g"}, outcome=0.8),
            Item("b", 0.9, groups={"g"}, outcome=0.8),
            Item("c", 0.2, outcome=0.3),
            Item("d", 0.7, outcome=0.3),
        ]
        out = calibrate_scores(items, "g")
        assert [it.score for it in out] == pytest.approx([0.8, 0.8, 0.3, 0.3])

    def test_idempotent(self, rng):
        items = random_items(rng, 60)
        once = calibrate_scores(items, "g")
        twice = calibrate_scores(once, "g")
        assert [it.score for it in twice] == pytest.approx(
            [it.score for it in once], abs=1e-12
        )

    def test_preserves_within_partition_weak_order(self, rng):
        items = random_items(rng, 80)
        out = calibrate_scores(items, "g")
        for side in (True, False):
            raw = [(it.score, o.score) for it, o in zip(items, out)
                   if ("g" in it.groups) == side]
            for (s1, c1), (s2, c2) in itertools.combinations(raw, 2):
                if s1 < s2:
                    assert c1 <= c2

    def test_empty_side_falls_back_with_warning(self):
        items = [Item("a", 0.1, outcome=0.2), Item("b", 0.9, outcome=0.7)]
        with pytest.warns(UserWarning, match="empty side"):
            out = calibrate_scores(items, "g")
        assert len(out) == 2

    def test_fitting_set_is_calibrated_after(self, rng):
        items = random_items(rng, 4000)
        out = calibrate_scores(items, "g")
        scores = np.array([it.score for it in out])
        outcomes = np.array([it.outcome for it in out])
        member = np.array(["g" in it.groups for it in out])
        for side in (True, False):
            s, y = scores[member == side], outcomes[member == side]
            lo, hi = float(s.min()), float(s.max())
            _, mean_y, counts = binned_mean_curve(s, y, 10, lo, hi)
            _, mean_s, _ = binned_mean_curve(s, s, 10, lo, hi)
            for my, ms, c in zip(mean_y, mean_s, counts):
                if c:
                    # bins hold whole isotonic blocks, so the identity is exact
                    assert my == pytest.approx(ms, abs=1e-9)

    def test_empty_input_rejected(self):
        with pytest.raises(UndefinedMetricError):
            calibrate_scores([], "g")


def test_calibrate_slates_reranks_each_query(rng):
    slates = []
    for q in range(6):
        items = random_items(rng, 10)
        slates.append(rank_by_score(
            [Item(f"q{q}-{it.id}", it.score, it.groups, it.outcome) for it in items],
            query_id=f"q{q}",
        ))
    out = calibrate_slates(slates, "g")
    assert [s.query_id for s in out] == [s.query_id for s in slates]
    for before, after in zip(slates, out):
        assert {it.id for it in before.items} == {it.id for it in after.items}
        gaps = [a.score - b.score for a, b in zip(after.items, after.items[1:])]
        assert all(g >= 0 for g in gaps)
