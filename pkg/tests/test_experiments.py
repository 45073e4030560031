"""Tests for the experiments package: uniformity, asymptotics and self-test."""

import logging
import math

import pytest

from experiments.asymptotics import (fit_failure_decay, run_fv_asymptotics, run_vf_asymptotics,
                                     vfr_analysis_table)
from experiments.selftest import SUITE_NAMES, run_selftest
from experiments.uniformity import run_uniformity_test
from universal_rng.exceptions import ConfigurationError
from universal_rng.fvr import FvrOutput, TargetSet, make_fvr_scheme
from universal_rng.type_classes import class_size
from universal_rng.vfr import VfrConfig

POW2 = TargetSet.powers(2)


class TestUniformity:
    def test_exact_e2_passes(self, iid_p03):
        scheme = make_fvr_scheme('E2', iid_p03.spec, POW2)
        report = run_uniformity_test(scheme, iid_p03, n=10)
        assert report.passed
        assert report.discrepancy == 0
        assert report.trials == 1024

    def test_biased_scheme_fails(self, iid_p03):
        report = run_uniformity_test(lambda x: FvrOutput(0, 2), iid_p03, n=6)
        assert not report.passed
        assert report.discrepancy > 0

    def test_out_of_range_output_fails(self, iid_p03):
        assert not run_uniformity_test(lambda x: FvrOutput(2, 2), iid_p03, n=4).passed

    def test_exact_g2_passes(self, markov1):
        report = run_uniformity_test(VfrConfig(markov1.spec, 3, 8), markov1)
        assert report.passed
        assert report.kind == 'vf'
        assert report.groups > 0

    def test_argument_errors(self, iid_p03):
        scheme = make_fvr_scheme('E1', iid_p03.spec)
        with pytest.raises(ConfigurationError):
            run_uniformity_test(scheme, iid_p03)
        with pytest.raises(ConfigurationError):
            run_uniformity_test(scheme, iid_p03, n=4, mode='approximate')
        with pytest.raises(ConfigurationError):
            run_uniformity_test(VfrConfig(iid_p03.spec, 3), iid_p03)

    def test_sparse_cells_enlarge_the_sample(self, iid_p03, caplog):
        scheme = make_fvr_scheme('E1', iid_p03.spec)
        with caplog.at_level(logging.WARNING, logger='experiments.uniformity'):
            report = run_uniformity_test(scheme, iid_p03, n=40, mode='sampled', trials=10)
        assert 'enlarging trials' in caplog.text
        assert report.trials == 640
        assert not report.passed

    @pytest.mark.slow
    def test_sampled_fvr_p_value_in_window(self, iid_p03):
        scheme = make_fvr_scheme('E2', iid_p03.spec, POW2)
        report = run_uniformity_test(scheme, iid_p03, n=16, mode='sampled', trials=20_000, seed=1)
        assert 0.001 <= report.p_value <= 0.999
        assert report.dof > 0

    @pytest.mark.slow
    def test_sampled_vfr_p_value_in_window(self, markov1):
        report = run_uniformity_test(VfrConfig(markov1.spec, 5), markov1, mode='sampled',
                                     trials=5000, seed=3)
        assert 0.001 <= report.p_value <= 0.999
        assert report.dof == 4


class TestVfrAnalysis:
    def test_table(self, iid_p03):
        table = vfr_analysis_table(iid_p03, 3, 6, exact=True)
        assert list(table.columns) == ['n', 'p_fail_exact', 'l_partial']
        assert table['n'].tolist() == list(range(7))
        assert table['l_partial'].iloc[1] == 1.0
        assert table['p_fail_exact'].iloc[3] == pytest.approx(0.3 ** 3 + 0.7 ** 3)
        assert table['p_fail_exact'].iloc[6] == pytest.approx((0.3 ** 3 + 0.7 ** 3) ** 2)

    def test_default_table_is_rational(self, iid_p03):
        table = vfr_analysis_table(iid_p03, 3, 3)
        assert table['p_fail_exact'].tolist() == [1.0, 1.0, 1.0, 0.37]
        assert table['l_partial'].tolist() == [0.0, 1.0, 2.0, 3.0]

    def test_float_table_agrees(self, iid_p03):
        exact = vfr_analysis_table(iid_p03, 3, 12)
        approx = vfr_analysis_table(iid_p03, 3, 12, exact=False)
        assert approx['p_fail_exact'].tolist() == pytest.approx(exact['p_fail_exact'].tolist())

    def test_failure_decay_fit(self, iid_p03):
        table = vfr_analysis_table(iid_p03, 3, 100)
        slope, r_squared = fit_failure_decay(table, n_min=10, n_max=100)
        assert slope < 0
        assert r_squared >= 0.98

    def test_fit_needs_points(self, iid_p03):
        with pytest.raises(ConfigurationError):
            fit_failure_decay(vfr_analysis_table(iid_p03, 3, 5), n_min=10)


class TestAsymptotics:
    def test_lists_must_ascend(self, iid_p03):
        with pytest.raises(ConfigurationError):
            run_fv_asymptotics(iid_p03, [16, 8], trials=10, seed=0)
        with pytest.raises(ConfigurationError):
            run_vf_asymptotics(iid_p03, [4, 4], N=10, trials=10, seed=0)

    def test_results_do_not_depend_on_chunking(self, iid_p03):
        single = run_fv_asymptotics(iid_p03, [8, 16], trials=3000, seed=4, workers=1)
        assert list(single.frame.columns) == ['n', 'log2_n', 'entropy_exact', 'mean_log_size',
                                              'stderr', 'gap', 'gap_stderr']
        again = run_fv_asymptotics(iid_p03, [8, 16], trials=3000, seed=4, workers=1)
        assert single.frame.equals(again.frame)
        assert single.summary['half_dimension'] == 0.5

    @pytest.mark.slow
    @pytest.mark.parametrize('fixture, low, high', [('iid_p03', 0.4, 0.6), ('markov1', 0.8, 1.2)])
    def test_gap_slope_is_half_the_dimension(self, request, fixture, low, high):
        params = request.getfixturevalue(fixture)
        n_list = [2 ** e for e in range(8, 15)]
        report = run_fv_asymptotics(params, n_list, trials=10_000, seed=11)
        assert low <= report.summary['slope'] <= high

    @pytest.mark.slow
    def test_vf_lengths_respect_entropy_bound(self, iid_p03):
        report = run_vf_asymptotics(iid_p03, [2, 4, 16, 64], N=200, trials=2000, seed=5)
        assert report.summary['above_entropy_bound'] == 1.0
        assert report.frame['length_exact'].notna().all()
        for _, row in report.frame.iterrows():
            assert abs(row['length_mc'] - row['length_exact']) <= 5 * row['stderr'] + 1e-9

    def test_vf_excess_grows_with_output_range(self, iid_p03):
        m_list = [2 ** 4, 2 ** 8, 2 ** 16, 2 ** 32]
        report = run_vf_asymptotics(iid_p03, m_list, N=400, trials=100, seed=2)
        assert report.frame['length_exact'].notna().all()
        deltas = report.frame['delta'].tolist()
        assert all(b >= a for a, b in zip(deltas, deltas[1:]))
        assert report.summary['delta_non_decreasing'] == 1.0
        assert report.summary['min_delta'] > 0


class TestSelftest:
    @pytest.mark.slow
    def test_all_suites_pass(self):
        report = run_selftest()
        assert report.passed
        assert [r.name for r in report.results] == list(SUITE_NAMES)

    def test_corrupted_class_sizes_are_caught(self):
        report = run_selftest(class_size_fn=lambda t: -class_size(t),
                              names=['vfr', 'type_classes'])
        verdicts = {r.name: r.passed for r in report.results}
        assert list(verdicts) == ['type_classes', 'vfr']
        assert not verdicts['type_classes']
        assert not report.passed
        assert verdicts['vfr']

    def test_budget_overrun_is_flagged(self):
        report = run_selftest(budget=0.0, names=['markov_model'])
        assert report.passed
        assert report.budget_exceeded
        assert math.isfinite(report.to_frame()['seconds'].sum())

    def test_unknown_suite(self):
        with pytest.raises(ConfigurationError):
            run_selftest(names=['markov_model', 'whittle'])

    def test_dictionary_suite_passes(self):
        report = run_selftest(names=['vfr'])
        assert report.passed
        assert report.results[0].detail.startswith('example dictionary')
