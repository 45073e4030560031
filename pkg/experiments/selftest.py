"""
Desk-scale self-test.

Runs the exact invariant checks of every module on small alphabets and
lengths. Sizes, ranks, counts and distances are compared as integers or
rationals; entropies and length gaps within a fixed tolerance.
"""

import logging
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, List, Optional, Sequence

import numpy as np
import pandas as pd

from universal_rng.config import get_settings
from universal_rng.exceptions import ConfigurationError
from universal_rng.fvr import (TargetSet, conditional_length, density_gap_bound,
                               make_fvr_scheme)
from universal_rng.markov_model import (MarkovParams, ModelSpec, marginal_entropy, sample,
                                        seq_probability, seq_probability_exact,
                                        stationary_distribution)
from universal_rng.twice_universal import (distance_to_uniformity, order_rates,
                                           tu_generate_exact, tu_generate_practical,
                                           u_partition)
from universal_rng.type_classes import (TypeCounts, all_types, class_size, counts_of,
                                        group_by_type, iter_sequences, iter_type_levels, rank,
                                        unrank)
from universal_rng.vfr import (VfrConfig, expected_input_length_exact, failure_probability,
                               g1_construct, g2_generate)

from .uniformity import exact_fvr_uniformity, exact_vfr_uniformity

logger = logging.getLogger(__name__)

SizeFunction = Callable[[TypeCounts], int]

SUITE_NAMES = ('markov_model', 'type_classes', 'fvr', 'vfr', 'twice_universal')


@dataclass
class SuiteResult:
    name: str
    passed: bool
    detail: str
    seconds: float


@dataclass
class SelftestReport:
    results: List[SuiteResult] = field(default_factory=list)
    budget_exceeded: bool = False

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([{'suite': r.name, 'passed': r.passed, 'detail': r.detail,
                              'seconds': round(r.seconds, 3)} for r in self.results])


def _markov_suite() -> str:
    params = MarkovParams.from_rows([[0.5, 0.5], [0.25, 0.75]], k=1)
    table = params.exact_cond()
    total = sum(seq_probability_exact(params, x, table) for x in iter_sequences(2, 8))
    if total != 1:
        raise AssertionError(f"probabilities of A^8 sum to {total}")
    if sample(params, 64, seed=7) != sample(params, 64, seed=7):
        raise AssertionError("sampling is not reproducible")
    pi = stationary_distribution(params)
    if np.max(np.abs(pi @ params.transition_matrix() - pi)) > 1e-10 or abs(pi.sum() - 1) > 1e-10:
        raise AssertionError("stationary distribution does not solve the balance equations")
    for source in (MarkovParams.iid([0.3, 0.7]), params):
        for n in range(1, 11):
            logs = [seq_probability(source, x) for x in iter_sequences(2, n)]
            enumerated = -math.fsum(2.0 ** lp * lp for lp in logs)
            if abs(marginal_entropy(source, n) - enumerated) > 1e-9:
                raise AssertionError(f"H(X^{n}) differs from enumeration")
    return "probabilities sum to 1, balance equations hold, block entropies match enumeration"


def _type_class_suite(size_fn: SizeFunction) -> str:
    checked = 0
    for alpha in (2, 3):
        for k in (0, 1, 2):
            spec = ModelSpec(alpha, k)
            for n, level in enumerate(iter_type_levels(spec, 9)):
                groups = group_by_type(spec, n)
                if set(level) != set(groups):
                    raise AssertionError(f"type list of length {n} differs from enumeration")
                for t, members in groups.items():
                    if size_fn(t) != len(members):
                        raise AssertionError(
                            f"size {size_fn(t)} != {len(members)} for {t.to_json()}")
                    for i, x in enumerate(members):
                        if rank(x, spec) != i or unrank(t, i) != x:
                            raise AssertionError(f"rank/unrank mismatch at {x}")
                    checked += 1
                total = sum(size_fn(t) for t in level)
                if total != alpha ** n:
                    raise AssertionError(f"class sizes of {alpha}**{n} sum to {total}")
    return f"{checked} type classes match exhaustive counts and ranks"


def _fvr_suite() -> str:
    targets = [TargetSet.integers(), TargetSet.powers(2), TargetSet.powers(3)]
    for k in (0, 1):
        spec = ModelSpec(2, k)
        for n in range(1, 11):
            for scheme in ('E1', 'E2'):
                for target in targets if scheme == 'E2' else targets[:1]:
                    report = exact_fvr_uniformity(make_fvr_scheme(scheme, spec, target), spec, n)
                    if not report.passed:
                        raise AssertionError(f"{scheme}/{target.describe()} not uniform at "
                                             f"k={k} n={n}")
            for target in targets[1:]:
                bound = density_gap_bound(target.density)
                for t in all_types(spec, n):
                    gap = np.log2(class_size(t)) - conditional_length(t, target)
                    if gap < -1e-9 or gap > bound + 1e-9:
                        raise AssertionError(f"gap {gap} outside [0, {bound}] at n={n}")
    return "E1/E2 exactly uniform to n=10, length gap within bound"


def _example_dictionary_checks() -> None:
    example = g1_construct(VfrConfig(ModelSpec(2, 0), 3, 6))
    if example.fail_members(3) != {(0, 0, 0), (1, 1, 1)}:
        raise AssertionError("fail set at depth 3 differs from {000, 111}")
    expected = {(0,) * 6, (0, 0, 0, 1, 1, 1), (1, 1, 1, 0, 0, 0), (1,) * 6}
    if example.fail_members(6) != expected:
        raise AssertionError("fail set at depth 6 differs from {000000, 000111, 111000, 111111}")
    t = counts_of((0, 0, 0, 1, 1, 1), ModelSpec(2, 0))
    if class_size(t) != 20 or len(example.fail_sets[6][t]) != 2:
        raise AssertionError("T(000111) should hold 20 members with 2 left unassigned")
    params = MarkovParams.iid([0.3, 0.7])
    p, q = Fraction(3, 10), Fraction(7, 10)
    if failure_probability(params, 3, 3, exact=True) != p ** 3 + q ** 3:
        raise AssertionError("P(fail_3) differs from p^3 + q^3")
    if failure_probability(params, 3, 6, exact=True) != (p ** 3 + q ** 3) ** 2:
        raise AssertionError("P(fail_6) differs from (p^3 + q^3)^2")
    length = expected_input_length_exact(params, 3, 300, exact=True)
    if not 1 / (p * q) - Fraction(1, 7) <= length <= 1 / (p * q):
        raise AssertionError(f"expected length {float(length):.4f} outside [4.6190, 4.7619]")
    if failure_probability(params, 3, 300) >= 1e-6:
        raise AssertionError("P(fail_300) is not below 1e-6")


def _vfr_suite() -> str:
    _example_dictionary_checks()
    for k in (0, 1):
        spec = ModelSpec(2, k)
        for M in (2, 3, 5):
            cfg = VfrConfig(spec, M, 12)
            g1 = g1_construct(cfg)
            for n, level in enumerate(g1.profile.levels):
                for t, entry in level.items():
                    if entry.fail_size != class_size(t) % M or entry.dict_size % M:
                        raise AssertionError(f"profile mismatch at n={n}, M={M}, k={k}")
            for n, level in enumerate(g1.fail_sets):
                for t, members in level.items():
                    if len(members) != class_size(t) % M:
                        raise AssertionError(f"fail set size mismatch at n={n}, M={M}, k={k}")
            for x in iter_sequences(2, cfg.N):
                if g1.lookup(x) != g2_generate(x, cfg):
                    raise AssertionError(f"sequential generator differs on {x}")
            if not exact_vfr_uniformity(cfg).passed:
                raise AssertionError(f"VFR labels not uniform for M={M}, k={k}")
    return "example dictionary, greedy profile, sequential equivalence and label uniformity hold"


def _twice_universal_suite() -> str:
    params = MarkovParams.from_rows([[0.5, 0.5], [0.25, 0.75]], k=1)
    target = TargetSet.powers(2)
    details = []
    for n in (8, 10, 12):
        partition = u_partition(2, n)
        if sum(len(members) for members in partition.classes.values()) != 2 ** n:
            raise AssertionError(f"U-classes do not cover A^{n}")
        rates = order_rates(params, n)
        exact = distance_to_uniformity(lambda x: tu_generate_exact(x, target), params, n)
        if exact > 2 * rates.p_under:
            raise AssertionError(f"n={n}: D={float(exact)} exceeds "
                                 f"2*P_under={float(2 * rates.p_under)}")
        practical = distance_to_uniformity(lambda x: tu_generate_practical(x, target)[0],
                                           params, n)
        if practical > 4 * (rates.p_under + rates.p_over):
            raise AssertionError(f"n={n}: practical D={float(practical)} exceeds "
                                 f"4*(P_under+P_over)={float(4 * (rates.p_under + rates.p_over))}")
        details.append(f"n={n} D={float(exact):.3g}/{float(practical):.3g}")
    return ", ".join(details)


def run_selftest(budget: Optional[float] = None,
                 class_size_fn: Optional[SizeFunction] = None,
                 names: Optional[Sequence[str]] = None) -> SelftestReport:
    """
    Run the suites and collect pass/fail results.

    Args:
        budget: Soft runtime budget in seconds (settings default)
        class_size_fn: Replacement class-size function for the type-class suite
        names: Suites to run, in SUITE_NAMES order (all by default)
    """
    budget = budget if budget is not None else get_settings().selftest_budget
    size_fn = class_size_fn or class_size
    suites = [
        ('markov_model', _markov_suite),
        ('type_classes', lambda: _type_class_suite(size_fn)),
        ('fvr', _fvr_suite),
        ('vfr', _vfr_suite),
        ('twice_universal', _twice_universal_suite),
    ]
    if names is not None:
        unknown = set(names) - set(SUITE_NAMES)
        if unknown:
            raise ConfigurationError(f"unknown self-test suites: {sorted(unknown)}")
        suites = [(name, suite) for name, suite in suites if name in names]
    report = SelftestReport()
    started = time.perf_counter()
    for name, suite in suites:
        t0 = time.perf_counter()
        try:
            detail = suite()
            passed = True
        except AssertionError as e:
            detail = str(e)
            passed = False
        elapsed = time.perf_counter() - t0
        logger.info("%s: %s (%.2fs) %s", name, "PASS" if passed else "FAIL", elapsed, detail)
        report.results.append(SuiteResult(name, passed, detail, elapsed))
    total = time.perf_counter() - started
    if total > budget:
        report.budget_exceeded = True
        logger.warning("self-test took %.1fs, over the %.0fs budget", total, budget)
    return report
