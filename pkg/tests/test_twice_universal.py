"""Tests for universal_rng.twice_universal."""

import logging
import math
from fractions import Fraction

import pytest

from universal_rng.config import Settings, use_settings
from universal_rng.exceptions import ConfigurationError, ResourceLimitError
from universal_rng.fvr import TargetSet, e2_from_rank, e2_generate, make_fvr_scheme
from universal_rng.markov_model import ModelSpec, sample
from universal_rng.twice_universal import (default_max_order, distance_to_uniformity,
                                           empirical_cond_entropy, estimate_order,
                                           order_rates, pairwise_spread, parse_penalty,
                                           penalty_constant, penalty_mdl, tu_generate_exact,
                                           tu_generate_practical, u_class, u_key,
                                           u_partition)
from universal_rng.type_classes import counts_of, group_by_type, iter_sequences

POW2 = TargetSet.powers(2)
ALTERNATING = (0, 1) * 8


class TestOrderEstimation:
    def test_empirical_entropies_of_alternating_block(self):
        assert empirical_cond_entropy(ALTERNATING, 0) == pytest.approx(1.0)
        expected = (9 * math.log2(9) - 24) / 16
        assert empirical_cond_entropy(ALTERNATING, 1) == pytest.approx(expected)
        assert empirical_cond_entropy(ALTERNATING, 2) == pytest.approx(0.125)
        assert empirical_cond_entropy(ALTERNATING, 3) == pytest.approx(0.125)

    def test_alternating_block_estimates_order_one(self):
        estimate = estimate_order(ALTERNATING)
        assert estimate.k_hat == 1
        scores = dict(estimate.scores)
        assert sorted(scores) == [0, 1, 2, 3]
        assert scores[0] == pytest.approx(1.125)
        assert scores[2] == pytest.approx(0.625)
        assert scores[3] == pytest.approx(1.125)

    def test_constant_blocks_have_order_zero(self):
        assert estimate_order((0,) * 16).k_hat == 0
        assert estimate_order((1,) * 16).k_hat == 0
        assert empirical_cond_entropy((), 2) == 0.0

    def test_default_max_order(self):
        assert default_max_order(2, 16) == 3
        assert default_max_order(2, 15) == 2
        assert default_max_order(3, 9) == 1
        assert default_max_order(2, 1) == 0

    def test_negative_max_order(self):
        with pytest.raises(ConfigurationError):
            estimate_order((0, 1), k_max=-1)

    def test_sampled_sources(self, iid_p03, markov1):
        assert estimate_order(sample(iid_p03, 2000, seed=1)).k_hat == 0
        assert estimate_order(sample(markov1, 2000, seed=1)).k_hat == 1


class TestPenalty:
    def test_mdl(self):
        phi = penalty_mdl(2)
        assert phi.coefficient == 0.5
        assert phi(16) == pytest.approx(0.125)
        assert phi(1) == 0.0
        assert penalty_mdl(3).coefficient == 1.0

    def test_small_coefficient_warns(self, caplog):
        with caplog.at_level(logging.WARNING, logger='universal_rng.twice_universal'):
            phi = penalty_constant(0.1, alpha=2)
        assert phi.coefficient == 0.1
        assert 'below the MDL value' in caplog.text

    def test_nonpositive_coefficient(self):
        with pytest.raises(ConfigurationError):
            penalty_constant(0.0)

    def test_parse_penalty(self):
        assert parse_penalty(None, 2) == penalty_mdl(2)
        assert parse_penalty('mdl', 3) == penalty_mdl(3)
        assert parse_penalty('c:2', 2).coefficient == 2.0
        for bad in ('bic', 'c:abc', 'c:-1'):
            with pytest.raises(ConfigurationError):
                parse_penalty(bad, 2)


class TestUClasses:
    def test_partition_covers_all_sequences(self):
        partition = u_partition(2, 10)
        assert sum(len(members) for members in partition.classes.values()) == 1024
        assert len(partition.position) == 1024
        for (k_hat, t), members in partition.classes.items():
            for x in members:
                assert u_key(x, 2) == (k_hat, t)
                assert counts_of(x, ModelSpec(2, k_hat)) == t

    def test_partition_honours_later_bound(self):
        assert len(u_partition(2, 8).position) == 256
        use_settings(Settings(brute_force_bound=64))
        with pytest.raises(ResourceLimitError):
            u_partition(2, 8)

    def test_u_class_is_inside_its_type_class(self):
        x = (0, 1, 1, 0, 1, 0, 0, 1, 1, 1)
        k_hat, _ = u_key(x, 2)
        members = u_class(x)
        assert x in members
        spec = ModelSpec(2, k_hat)
        assert set(members) <= set(group_by_type(spec, 10)[counts_of(x, spec)])

    def test_constant_input(self):
        assert tu_generate_exact((0,) * 10, POW2) == e2_from_rank(0, 1, POW2)
        assert u_class((0,) * 10) == ((0,) * 10,)

    @pytest.mark.parametrize('k', [0, 1])
    def test_exact_matches_e2_on_stable_classes(self, k):
        spec = ModelSpec(2, k)
        checked = 0
        for t, members in group_by_type(spec, 10).items():
            if all(estimate_order(x).k_hat == k for x in members):
                for x in members:
                    assert tu_generate_exact(x, POW2) == e2_generate(x, spec, POW2)
                checked += 1
        if k == 0:
            assert checked > 0

    def test_exact_outputs_split_each_class(self):
        partition = u_partition(2, 10)
        for members in partition.classes.values():
            outputs = [tu_generate_exact(x, POW2) for x in members]
            expected = [e2_from_rank(i, len(members), POW2) for i in range(len(members))]
            assert outputs == expected

    def test_practical_runs_e2_at_estimated_order(self):
        out, k_hat = tu_generate_practical(ALTERNATING, POW2)
        assert k_hat == 1
        assert out == e2_generate(ALTERNATING, ModelSpec(2, 1), POW2)


class TestDistance:
    def test_pairwise_spread(self):
        assert pairwise_spread([Fraction(1, 2), Fraction(1, 2)], 2) == 0
        assert pairwise_spread([Fraction(1)], 2) == 2
        assert pairwise_spread([Fraction(1), Fraction(2), Fraction(3)], 3) == 8
        assert pairwise_spread([], 4) == 0

    def test_known_order_e2_is_uniform(self, dyadic_markov1):
        scheme = make_fvr_scheme('E2', dyadic_markov1.spec, POW2)
        assert distance_to_uniformity(scheme, dyadic_markov1, 8) == 0

    def test_memoryless_source_is_never_underestimated(self, dyadic_iid):
        rates = order_rates(dyadic_iid, 10)
        assert rates.p_under == 0
        assert 0 <= rates.p_over < 1
        scheme = lambda x: tu_generate_exact(x, POW2)  # noqa: E731
        assert distance_to_uniformity(scheme, dyadic_iid, 10) == 0

    def test_exact_scheme_bound(self, dyadic_markov1):
        rates = order_rates(dyadic_markov1, 10)
        scheme = lambda x: tu_generate_exact(x, POW2)  # noqa: E731
        assert distance_to_uniformity(scheme, dyadic_markov1, 10) <= 2 * rates.p_under

    def test_practical_scheme_bound(self, dyadic_markov1):
        rates = order_rates(dyadic_markov1, 10)
        scheme = lambda x: tu_generate_practical(x, POW2)[0]  # noqa: E731
        distance = distance_to_uniformity(scheme, dyadic_markov1, 10)
        assert distance <= 4 * (rates.p_under + rates.p_over)

    @pytest.mark.slow
    @pytest.mark.parametrize('n', [11, 12])
    def test_bounds_at_larger_lengths(self, dyadic_markov1, n):
        rates = order_rates(dyadic_markov1, n)
        exact = lambda x: tu_generate_exact(x, POW2)  # noqa: E731
        practical = lambda x: tu_generate_practical(x, POW2)[0]  # noqa: E731
        assert distance_to_uniformity(exact, dyadic_markov1, n) <= 2 * rates.p_under
        assert (distance_to_uniformity(practical, dyadic_markov1, n)
                <= 4 * (rates.p_under + rates.p_over))

    def test_rates_are_probabilities(self, dyadic_markov1):
        rates = order_rates(dyadic_markov1, 8)
        assert isinstance(rates.p_under, Fraction)
        assert 0 <= rates.p_under + rates.p_over <= 1
        assert sum(1 for _ in iter_sequences(2, 8)) == 256
