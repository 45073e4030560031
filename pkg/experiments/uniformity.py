"""
Uniformity tests for FVR and VFR schemes.

Exact mode enumerates every input and checks that, within each type class
and each output range, every output value occurs equally often. This is a
combinatorial check, so it holds for every parameter vector at once.
Sampled mode draws inputs from a source and applies a chi-square test to the
output frequencies (conditioned on M for FVRs).
"""

import logging
from collections import Counter
from dataclasses import asdict, dataclass
from typing import Callable, Dict, Optional, Tuple, Union

import numpy as np
import pandas as pd
from scipy.stats import chi2, chisquare

from universal_rng.exceptions import ConfigurationError, InputExhaustedError
from universal_rng.fvr import FvrOutput
from universal_rng.markov_model import MarkovParams, ModelSpec, sample_batch
from universal_rng.type_classes import TypeCounts, counts_of, iter_sequences
from universal_rng.vfr import VfrConfig, g2_generate

logger = logging.getLogger(__name__)

P_VALUE_WINDOW = (0.001, 0.999)
MIN_EXPECTED = 5
MAX_ENLARGEMENTS = 3
ENLARGE_FACTOR = 4
DEFAULT_STREAM_LENGTH = 1024

FvrScheme = Callable[[Tuple[int, ...]], FvrOutput]


@dataclass
class UniformityReport:
    """
    Outcome of one uniformity test.

    Attributes:
        mode: 'exact' or 'sampled'
        kind: 'fv' or 'vf'
        passed: Overall verdict
        discrepancy: Exact mode, largest count difference inside one group
        groups: Number of (type, M) groups (exact) or M values (sampled) checked
        statistic: Chi-square statistic (sampled mode)
        dof: Degrees of freedom (sampled mode)
        p_value: Chi-square p-value (sampled mode)
        trials: Number of inputs examined
    """
    mode: str
    kind: str
    passed: bool
    discrepancy: int = 0
    groups: int = 0
    statistic: Optional[float] = None
    dof: Optional[int] = None
    p_value: Optional[float] = None
    trials: int = 0

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(self)])


def _largest_gap(counter: Counter, m: int) -> int:
    counts = [counter.get(r, 0) for r in range(m)]
    return max(counts) - min(counts)


def exact_fvr_uniformity(scheme: FvrScheme, spec: ModelSpec, n: int,
                         bound: Optional[int] = None) -> UniformityReport:
    """Per-type, per-M output counts over all of A^n."""
    tallies: Dict[Tuple[TypeCounts, int], Counter] = {}
    invalid = 0
    total = 0
    for x in iter_sequences(spec.alpha, n, bound):
        out = scheme(x)
        total += 1
        if not 0 <= out.r < out.M:
            invalid += 1
            continue
        tallies.setdefault((counts_of(x, spec), out.M), Counter())[out.r] += 1
    worst = max((_largest_gap(c, m) for (_, m), c in tallies.items()), default=0)
    if invalid:
        logger.error("%d outputs fell outside [0, M)", invalid)
    return UniformityReport('exact', 'fv', worst == 0 and invalid == 0,
                            discrepancy=worst, groups=len(tallies), trials=total)


def exact_vfr_uniformity(cfg: VfrConfig, bound: Optional[int] = None) -> UniformityReport:
    """Label counts of the sequential generator per stop length and stopped type."""
    if cfg.N is None:
        raise ConfigurationError("exact VFR uniformity needs a truncation depth N")
    spec = cfg.spec
    tallies: Dict[Tuple[int, TypeCounts], Counter] = {}
    seen = set()
    for x in iter_sequences(spec.alpha, cfg.N, bound):
        result = g2_generate(x, cfg)
        if result.failed:
            continue
        prefix = x[:result.length]
        if prefix in seen:
            continue
        seen.add(prefix)
        tallies.setdefault((result.length, counts_of(prefix, spec)), Counter())[result.r] += 1
    worst = max((_largest_gap(c, cfg.M) for c in tallies.values()), default=0)
    return UniformityReport('exact', 'vf', worst == 0, discrepancy=worst,
                            groups=len(tallies), trials=len(seen))


def _verdict(p_value: float) -> bool:
    low, high = P_VALUE_WINDOW
    return low <= p_value <= high


def sampled_fvr_uniformity(scheme: FvrScheme, params: MarkovParams, n: int,
                           trials: int, seed: int) -> UniformityReport:
    """Chi-square over r given M, pooled across the M values with enough samples."""
    usable: Dict[int, Counter] = {}
    for attempt in range(MAX_ENLARGEMENTS + 1):
        by_m: Dict[int, Counter] = {}
        for row in sample_batch(params, n, trials, seed):
            out = scheme(tuple(row.tolist()))
            by_m.setdefault(out.M, Counter())[out.r] += 1
        usable = {m: c for m, c in by_m.items()
                  if m > 1 and sum(c.values()) / m >= MIN_EXPECTED}
        covered = sum(sum(c.values()) for c in usable.values())
        if usable and 2 * covered >= trials:
            break
        if attempt < MAX_ENLARGEMENTS:
            logger.warning("only %d of %d samples fall in cells with >= %d expected; "
                           "enlarging trials to %d", covered, trials, MIN_EXPECTED,
                           trials * ENLARGE_FACTOR)
            trials *= ENLARGE_FACTOR
    if not usable:
        logger.warning("no output range had enough samples for a chi-square test")
        return UniformityReport('sampled', 'fv', False, trials=trials)
    statistic = 0.0
    dof = 0
    for m in sorted(usable):
        observed = np.array([usable[m].get(r, 0) for r in range(m)])
        stat, _ = chisquare(observed)
        statistic += float(stat)
        dof += m - 1
    p_value = float(chi2.sf(statistic, dof))
    return UniformityReport('sampled', 'fv', _verdict(p_value), groups=len(usable),
                            statistic=statistic, dof=dof, p_value=p_value, trials=trials)


def sampled_vfr_uniformity(cfg: VfrConfig, params: MarkovParams, trials: int,
                           seed: int) -> UniformityReport:
    """Chi-square over the outputs of successful runs."""
    depth = cfg.N or DEFAULT_STREAM_LENGTH
    observed = np.zeros(cfg.M, dtype=np.int64)
    for attempt in range(MAX_ENLARGEMENTS + 1):
        observed[:] = 0
        for row in sample_batch(params, depth, trials, seed):
            try:
                result = g2_generate(row.tolist(), cfg)
            except InputExhaustedError:
                continue
            if not result.failed:
                observed[result.r] += 1
        if observed.sum() / cfg.M >= MIN_EXPECTED:
            break
        if attempt < MAX_ENLARGEMENTS:
            logger.warning("%d successes are too few for %d cells; enlarging trials to %d",
                           int(observed.sum()), cfg.M, trials * ENLARGE_FACTOR)
            trials *= ENLARGE_FACTOR
    if observed.sum() / cfg.M < MIN_EXPECTED:
        return UniformityReport('sampled', 'vf', False, trials=trials)
    statistic, p_value = chisquare(observed)
    return UniformityReport('sampled', 'vf', _verdict(float(p_value)), groups=1,
                            statistic=float(statistic), dof=cfg.M - 1,
                            p_value=float(p_value), trials=trials)


def run_uniformity_test(scheme: Union[FvrScheme, VfrConfig], params: MarkovParams,
                        n: Optional[int] = None, mode: str = 'exact', trials: int = 10_000,
                        seed: int = 0, bound: Optional[int] = None) -> UniformityReport:
    """
    Test a scheme for uniform output.

    Args:
        scheme: FVR callable x -> FvrOutput, or a VfrConfig for the sequential VFR
        params: Source (sampled mode) and model specification (both modes)
        n: Block length for FVR schemes
        mode: 'exact' or 'sampled'
        trials: Sample size in sampled mode
        seed: Base seed in sampled mode
        bound: Brute-force bound override for exact mode
    """
    if mode not in ('exact', 'sampled'):
        raise ConfigurationError(f"unknown uniformity mode {mode!r}")
    if isinstance(scheme, VfrConfig):
        report = (exact_vfr_uniformity(scheme, bound) if mode == 'exact'
                  else sampled_vfr_uniformity(scheme, params, trials, seed))
    else:
        if n is None:
            raise ConfigurationError("FVR uniformity tests need a block length n")
        report = (exact_fvr_uniformity(scheme, params.spec, n, bound) if mode == 'exact'
                  else sampled_fvr_uniformity(scheme, params, n, trials, seed))
    logger.info("Uniformity (%s, %s): %s", report.mode, report.kind,
                "PASS" if report.passed else "FAIL")
    return report
