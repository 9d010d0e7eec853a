"""Tests for the confounded synthetic world generator."""

from __future__ import annotations

import numpy as np
import pytest

from rankaudit import (
    InfeasibleWorldError,
    InputError,
    PairConfig,
    SyntheticWorld,
    UndefinedMetricError,
    build_pair_set,
    calibration_curve,
    expected_relevance,
    generate,
    mpc,
    population_mpc,
    solve_type_mixture,
)


class TestExpectedRelevance:
    def test_endpoints(self):
        for b in (0.3, 1.0, 1.7):
            assert expected_relevance(0.0, b) == 0.0
            assert expected_relevance(1.0, b) == 1.0

    def test_unbiased_is_identity(self):
        for s in np.linspace(0.0, 1.0, 21):
            assert expected_relevance(float(s), 1.0) == pytest.approx(float(s))

    def test_hand_values(self):
        assert expected_relevance(0.25, 1.5) == pytest.approx(0.375)
        assert expected_relevance(0.75, 1.5) == pytest.approx(0.875)

    def test_continuous_at_half(self):
        for b in (0.7, 1.1, 1.5):
            below = expected_relevance(0.5 - 1e-12, b)
            at = expected_relevance(0.5, b)
            assert at == pytest.approx(b / 2.0)
            assert below == pytest.approx(at, abs=1e-9)

    def test_monotone_in_signal(self):
        for b in (0.2, 0.9, 1.3, 1.9):
            values = [expected_relevance(s, b) for s in np.linspace(0, 1, 50)]
            assert all(a <= v + 1e-12 for a, v in zip(values, values[1:]))

    def test_domain_errors(self):
        with pytest.raises(InputError):
            expected_relevance(-0.1, 1.0)
        with pytest.raises(InputError):
            expected_relevance(1.1, 1.0)
        with pytest.raises(InputError):
            expected_relevance(0.5, 0.0)
        with pytest.raises(InputError):
            expected_relevance(0.5, 2.0)


class TestSolveTypeMixture:
    def test_default_parameters(self):
        x, y = solve_type_mixture(0.5, 1.5, 1.1, 0.9, 0.7)
        assert x == pytest.approx(1.0 / 7.0, abs=1e-12)
        assert y == pytest.approx(5.0 / 7.0, abs=1e-12)

    def test_solution_satisfies_calibration_equations(self):
        p_u, bu1, bu2, bv1, bv2 = 0.4, 1.6, 1.2, 0.8, 0.5
        x, y = solve_type_mixture(p_u, bu1, bu2, bv1, bv2)
        post1 = p_u * x / (p_u * x + (1 - p_u) * y)
        post2 = p_u * (1 - x) / (p_u * (1 - x) + (1 - p_u) * (1 - y))
        assert post1 * bu1 + (1 - post1) * bv1 == pytest.approx(1.0, abs=1e-12)
        assert post2 * bu2 + (1 - post2) * bv2 == pytest.approx(1.0, abs=1e-12)

    def test_unconstrained_type_uses_canonical_half(self):
        x, y = solve_type_mixture(0.5, 1.0, 1.1, 1.0, 0.7)
        assert x == 0.5
        post2 = 0.5 * (1 - x) / (0.5 * (1 - x) + 0.5 * (1 - y))
        assert post2 * 1.1 + (1 - post2) * 0.7 == pytest.approx(1.0, abs=1e-12)

    def test_fully_unbiased_world(self):
        assert solve_type_mixture(0.5, 1.0, 1.0, 1.0, 1.0) == (0.5, 0.5)

    def test_all_biases_above_one_is_infeasible(self):
        with pytest.raises(InfeasibleWorldError):
            solve_type_mixture(0.5, 1.5, 1.2, 1.1, 1.05)

    def test_equal_biases_not_one_is_infeasible(self):
        with pytest.raises(InfeasibleWorldError):
            solve_type_mixture(0.5, 1.3, 1.1, 1.3, 0.7)

    def test_required_mixture_outside_unit_square(self):
        # both posteriors below the prior force a mixture outside [0, 1]^2
        with pytest.raises(InfeasibleWorldError):
            solve_type_mixture(0.1, 1.5, 1.1, 0.9, 0.7)


class TestSyntheticWorld:
    def test_defaults_solve_mixture(self):
        world = SyntheticWorld()
        assert world.mixture() == pytest.approx((1 / 7, 5 / 7))

    def test_bias_ordering_enforced(self):
        with pytest.raises(InputError):
            SyntheticWorld(b_u2=1.6)  # above b_u1
        with pytest.raises(InputError):
            SyntheticWorld(b_v1=1.2)  # above 1

    def test_unbiased_world_allowed(self):
        world = SyntheticWorld(b_u1=1.0, b_u2=1.0, b_v1=1.0, b_v2=1.0)
        assert world.mixture() == (0.5, 0.5)


class TestGenerate:
    def test_deterministic_given_seed(self):
        world = SyntheticWorld(seed=42)
        a = generate(world, 30)
        b = generate(world, 30)
        for sa, sb in zip(a.slates, b.slates):
            assert [it.id for it in sa.items] == [it.id for it in sb.items]
            assert [it.score for it in sa.items] == [it.score for it in sb.items]
            assert [it.outcome for it in sa.items] == [it.outcome for it in sb.items]
        assert a.query_types == b.query_types

    def test_slate_shape_and_labels(self):
        world = SyntheticWorld(n=7, seed=1)
        ds = generate(world, 9)
        assert len(ds) == 9
        for slate in ds:
            assert len(slate) == 7
            for it in slate.items:
                assert it.groups in ({"type1"}, {"type2"})
                assert it.outcome in (0.0, 1.0)
                assert 0.0 <= it.score <= 1.0
        assert set(ds.query_types.values()) <= {"u", "v"}

    def test_single_item_slates_generate_but_match_nothing(self):
        world = SyntheticWorld(n=1, seed=5)
        ds = generate(world, 20)
        pairs = build_pair_set(list(ds.slates), "type1", PairConfig(epsilon=1.0))
        assert len(pairs) == 0
        with pytest.raises(UndefinedMetricError):
            mpc(pairs)

    def test_mean_outcome_near_half_under_calibrated_mixture(self):
        world = SyntheticWorld(seed=99)
        ds = generate(world, 10_000)  # 1e5 items: SE ~ 0.0016
        outcomes = [it.outcome for s in ds for it in s.items]
        assert np.mean(outcomes) == pytest.approx(0.5, abs=0.01)

    def test_marginal_calibration_near_identity(self):
        world = SyntheticWorld(seed=7)
        ds = generate(world, 20_000)
        items = [it for s in ds for it in s.items]
        member, other = calibration_curve(items, "type1", bins=10)
        for curve in (member, other):
            for mid, mean, count in zip(curve.midpoints, curve.mean_outcome, curve.counts):
                assert count > 100
                assert mean == pytest.approx(mid, abs=0.02)

    def test_conditional_curves_recover_bias_lines(self):
        world = SyntheticWorld(seed=13)
        ds = generate(world, 30_000)
        sums: dict[tuple[str, str], list] = {}
        for slate in ds:
            qt = ds.query_types[slate.query_id]
            for it in slate.items:
                ty = "1" if "type1" in it.groups else "2"
                sums.setdefault((qt, ty), []).append((it.score, it.outcome))
        for (qt, ty), rows in sums.items():
            bias = world.bias_of(qt, int(ty))
            scores = np.array([r[0] for r in rows])
            outcomes = np.array([r[1] for r in rows])
            for lo in (0.1, 0.4, 0.7):
                mask = (scores >= lo) & (scores < lo + 0.1)
                assert mask.sum() > 200
                want = expected_relevance(lo + 0.05, bias)
                assert outcomes[mask].mean() == pytest.approx(want, abs=0.035)

    def test_population_mpc_positive_for_type1(self):
        world = SyntheticWorld(seed=0)
        value = population_mpc(world, epsilon=0.03, num_queries=200_000, seed=123)
        assert value > 0.03

    def test_population_mpc_agrees_with_object_pipeline(self):
        world = SyntheticWorld(seed=21)
        ds = generate(world, 30_000)
        pairs = build_pair_set(list(ds.slates), "type1", PairConfig(epsilon=0.05))
        sample = mpc(pairs)
        truth = population_mpc(world, epsilon=0.05, num_queries=400_000, seed=9)
        se = np.std(pairs.outcome_diffs()) / np.sqrt(sample.n_pairs)
        assert sample.point == pytest.approx(truth, abs=4 * se + 0.005)
