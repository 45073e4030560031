"""Tests for universal_rng.fvr."""

import math
from collections import Counter
from fractions import Fraction

import pytest

from experiments.asymptotics import mc_log_class_size
from universal_rng.exceptions import ConfigurationError
from universal_rng.fvr import (TargetSet, conditional_length, density_gap_bound, digits,
                               e1_generate, e2_generate, e2_subclasses,
                               expected_output_length_exact, greedy_decompose)
from universal_rng.markov_model import ModelSpec
from universal_rng.type_classes import all_types, class_size, counts_of, group_by_type, iter_sequences

POW2 = TargetSet.powers(2)
POW3 = TargetSet.powers(3)


class TestTargetSet:
    def test_power_targets(self):
        assert POW2.gtarg(1) == 1
        assert POW2.gtarg(7) == 4
        assert POW2.gtarg(2 ** 100 + 5) == 2 ** 100
        assert POW3.gtarg(3 ** 50 - 1) == 3 ** 49
        assert 27 in POW3 and 28 not in POW3
        assert POW3.density == 3

    def test_explicit_target_density(self):
        target = TargetSet.explicit([1, 2, 3, 5, 8])
        assert target.density == Fraction(7, 5)
        assert target.bound == 11
        assert target.gtarg(11) == 8
        assert target.gtarg(4) == 3
        with pytest.raises(ConfigurationError):
            target.gtarg(12)

    def test_explicit_target_needs_one(self):
        with pytest.raises(ConfigurationError):
            TargetSet.explicit([2, 4])

    def test_declared_density_is_checked(self):
        with pytest.raises(ConfigurationError):
            TargetSet.explicit([1, 10], density=2)
        assert TargetSet.explicit([1, 2, 4], density=4).bound == 16

    def test_parse(self, tmp_path):
        assert TargetSet.parse('int').kind == 'integers'
        assert TargetSet.parse('pow2') == POW2
        assert TargetSet.parse('pow:3') == POW3
        path = tmp_path / 'targets.txt'
        path.write_text('1, 2 4\n8\n')
        assert TargetSet.parse(f'list:{path}').values == (1, 2, 4, 8)
        for bad in ('bogus', 'pow:x', 'pow:1', f'list:{tmp_path / "missing.txt"}'):
            with pytest.raises(ConfigurationError):
                TargetSet.parse(bad)


class TestGreedyDecompose:
    def test_examples(self):
        assert greedy_decompose(17, TargetSet.integers()) == [17]
        assert greedy_decompose(6, POW2) == [4, 2]
        assert greedy_decompose(20, POW3) == [9, 9, 1, 1]

    def test_parts_are_greedy(self):
        target = TargetSet.explicit([1, 2, 3, 5, 8, 13])
        for nu in range(1, 19):
            parts = greedy_decompose(nu, target)
            assert sum(parts) == nu
            remaining = nu
            for m in parts:
                assert m == target.gtarg(remaining)
                remaining -= m

    def test_power_parts_are_radix_digits(self):
        nu = 123456789
        for p in (2, 3, 7):
            counts = Counter(greedy_decompose(nu, TargetSet.powers(p)))
            value, e = nu, 0
            while value:
                value, d = divmod(value, p)
                assert counts.get(p ** e, 0) == d
                e += 1

    def test_digits(self):
        assert digits(5, 8, 2) == [1, 0, 1]
        assert digits(0, 1, 2) == []
        assert digits(7, 9, 3) == [2, 1]
        with pytest.raises(ValueError):
            digits(1, 6, 2)


class TestElias:
    def test_binomial_example(self):
        out = e1_generate((0, 0, 0, 1, 1, 1), ModelSpec(2, 0))
        assert out.M == 20
        assert 0 <= out.r < 20

    def test_constant_input(self):
        spec = ModelSpec(2, 1)
        assert e1_generate((1,) * 9, spec) == e2_generate((1,) * 9, spec, POW2)
        assert e1_generate((1,) * 9, spec).M == 1

    def test_e1_is_a_bijection_per_type(self):
        spec = ModelSpec(2, 0)
        for t, members in group_by_type(spec, 8).items():
            outputs = [e1_generate(x, spec) for x in members]
            assert sorted(o.r for o in outputs) == list(range(class_size(t)))
            assert {o.M for o in outputs} == {class_size(t)}

    @pytest.mark.parametrize('k', [0, 1])
    def test_integer_target_reduces_to_e1(self, k):
        spec = ModelSpec(2, k)
        for n in range(9):
            for x in iter_sequences(2, n):
                assert e2_generate(x, spec, TargetSet.integers()) == e1_generate(x, spec)

    def test_power_of_two_example(self):
        spec = ModelSpec(2, 0)
        members = group_by_type(spec, 4)[counts_of((0, 1, 1, 0), spec)]
        index = members.index((0, 1, 1, 0))
        expected = (index, 4) if index < 4 else (index - 4, 2)
        out = e2_generate((0, 1, 1, 0), spec, POW2)
        assert (out.r, out.M) == expected

    @pytest.mark.parametrize('k, target', [(0, POW2), (1, POW2), (0, POW3), (1, POW3),
                                           (1, TargetSet.integers())])
    def test_output_is_uniform_given_type_and_range(self, k, target):
        spec = ModelSpec(2, k)
        for n in range(1, 11):
            tallies = {}
            for x in iter_sequences(2, n):
                out = e2_generate(x, spec, target)
                assert 0 <= out.r < out.M and out.M in target
                tallies.setdefault((counts_of(x, spec), out.M), Counter())[out.r] += 1
            for (_, m), counter in tallies.items():
                assert len(counter) == m
                assert len(set(counter.values())) == 1

    def test_subclasses_are_contiguous(self):
        t = counts_of((0,) * 5 + (1,) * 5, ModelSpec(2, 0))
        intervals = e2_subclasses(t, POW2)
        assert [m for _, m in intervals] == greedy_decompose(252, POW2)
        start = 0
        for begin, m in intervals:
            assert begin == start
            start += m
        assert start == class_size(t)

    def test_sync_state(self):
        spec = ModelSpec(2, 1)
        synced = e1_generate((1, 0, 1, 1), spec, sync_state=True)
        assert synced == e1_generate((0, 1, 1), spec.with_initial_state((1,)))
        with pytest.raises(ConfigurationError):
            e2_generate((), spec, POW2, sync_state=True)


class TestConditionalLength:
    def test_integer_target(self):
        t = counts_of((0, 1, 1, 0, 1), ModelSpec(2, 0))
        assert conditional_length(t, TargetSet.integers()) == pytest.approx(math.log2(10))

    def test_six_member_class(self):
        t = counts_of((0, 1, 1, 0), ModelSpec(2, 0))
        assert class_size(t) == 6
        assert conditional_length(t, POW2) == pytest.approx(5 / 3)

    @pytest.mark.parametrize('k, target', [(0, POW2), (1, POW2), (0, POW3), (1, POW3)])
    def test_gap_is_bounded(self, k, target):
        bound = density_gap_bound(target.density)
        for n in range(1, 11):
            for t in all_types(ModelSpec(2, k), n):
                gap = math.log2(class_size(t)) - conditional_length(t, target)
                assert -1e-9 <= gap <= bound + 1e-9

    def test_gap_bounds(self):
        assert density_gap_bound(1) == 0.0
        assert density_gap_bound(2) == pytest.approx(2.0)
        assert density_gap_bound(3) == pytest.approx(2.7548875)


class TestExpectedLength:
    def test_empty_block(self, iid_p03):
        assert expected_output_length_exact(iid_p03, 0) == 0.0

    @pytest.mark.parametrize('target', [POW2, POW3])
    def test_e2_never_beats_e1(self, markov1, target):
        for n in (4, 8, 12):
            e1 = expected_output_length_exact(markov1, n, scheme='E1')
            assert expected_output_length_exact(markov1, n, target, 'E2') <= e1 + 1e-12

    def test_unknown_scheme(self, iid_p03):
        with pytest.raises(ConfigurationError):
            expected_output_length_exact(iid_p03, 4, scheme='E3')

    @pytest.mark.slow
    def test_agrees_with_monte_carlo(self, iid_p03):
        exact = expected_output_length_exact(iid_p03, 12, scheme='E1')
        estimate = mc_log_class_size(iid_p03, 12, 100_000, seed=2024)
        assert abs(estimate.mean_length - exact) <= 3 * estimate.length_stderr
