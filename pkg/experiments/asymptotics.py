"""
Length and failure experiments.

FVR: the gap H(X^n) - E log|T(X^n)| grows like (K/2) log n, where K is the
number of free source parameters; the experiment reports the fitted slope of
the gap against log2 n.

VFR: the expected input length L of the greedy dictionary for output range
M, the diagnostic L*H - log2 M (non-decreasing in M), and the exact
per-level failure probabilities whose logarithm decays linearly in N.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.stats import linregress

from universal_rng.config import get_settings
from universal_rng.exceptions import ConfigurationError, InputExhaustedError, ResourceLimitError
from universal_rng.fvr import TargetSet, conditional_length
from universal_rng.markov_model import MarkovParams, entropy_rate, marginal_entropy, sample_batch
from universal_rng.type_classes import class_size, counts_of, type_log_probability
from universal_rng.vfr import (VfrConfig, expected_input_length_exact, g2_generate,
                               iter_failure_levels)

logger = logging.getLogger(__name__)

# Trials per Monte Carlo chunk; chunk c uses seed base + c, independent of the worker count
CHUNK_TRIALS = 2500
EXACT_VFR_MAX_TYPES = 200_000


@dataclass
class AsymptoticsReport:
    """Per-row results plus fitted summary values."""
    frame: pd.DataFrame
    summary: Dict[str, float] = field(default_factory=dict)


def _chunk_plan(trials: int, seed: int) -> List[Tuple[int, int]]:
    plan = []
    for c, start in enumerate(range(0, trials, CHUNK_TRIALS)):
        plan.append((min(CHUNK_TRIALS, trials - start), seed + c))
    return plan


def _fan_out(worker: Callable, tasks: List, workers: Optional[int]) -> List:
    """Run tasks in order, in worker processes when more than one is configured."""
    workers = workers or get_settings().workers
    if workers <= 1 or len(tasks) <= 1:
        return [worker(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker, tasks))


def _log_class_size_chunk(task) -> np.ndarray:
    """Rows of (log2 output length, -log2 P(x)) for one chunk of samples."""
    params, n, trials, seed, target, prng = task
    rows = sample_batch(params, n, trials, seed, prng)
    out = np.empty((trials, 2))
    for i, row in enumerate(rows):
        t = counts_of(row.tolist(), params.spec)
        out[i, 0] = math.log2(class_size(t)) if target is None else conditional_length(t, target)
        out[i, 1] = -type_log_probability(params, t)
    return out


@dataclass(frozen=True)
class LengthEstimate:
    """
    Monte Carlo estimates at one block length.

    mean_length estimates E log2|T| (or E log2 M under a target). gap
    estimates H(X^n) - mean_length as the sample mean of
    -log2 P(x) - log2|T(x)|, which has the same expectation because
    E[-log2 P(X^n)] = H(X^n), and a variance that stays bounded in n.
    """
    mean_length: float
    length_stderr: float
    gap: float
    gap_stderr: float


def _mean_and_stderr(values: np.ndarray) -> Tuple[float, float]:
    stderr = float(values.std(ddof=1) / math.sqrt(len(values))) if len(values) > 1 else 0.0
    return float(values.mean()), stderr


def mc_log_class_size(params: MarkovParams, n: int, trials: int, seed: int,
                      target: Optional[TargetSet] = None,
                      workers: Optional[int] = None) -> LengthEstimate:
    """Monte Carlo estimate of E log2|T(X^n)| and of the entropy gap."""
    prng = get_settings().prng
    tasks = [(params, n, size, chunk_seed, target, prng)
             for size, chunk_seed in _chunk_plan(trials, seed)]
    values = np.concatenate(_fan_out(_log_class_size_chunk, tasks, workers))
    mean, stderr = _mean_and_stderr(values[:, 0])
    gap, gap_stderr = _mean_and_stderr(values[:, 1] - values[:, 0])
    return LengthEstimate(mean, stderr, gap, gap_stderr)


def run_fv_asymptotics(params: MarkovParams, n_list: Sequence[int], trials: int, seed: int,
                       target: Optional[TargetSet] = None,
                       workers: Optional[int] = None) -> AsymptoticsReport:
    """
    Gap between the block entropy and the expected output length, per n.

    The summary holds the fitted slope of the gap against log2 n, its R^2,
    and K/2 for comparison.
    """
    n_values = list(n_list)
    if n_values != sorted(n_values) or len(set(n_values)) != len(n_values):
        raise ConfigurationError("n_list must be strictly ascending")
    rows = []
    for n in n_values:
        entropy = marginal_entropy(params, n)
        estimate = mc_log_class_size(params, n, trials, seed, target, workers)
        rows.append({'n': n, 'log2_n': math.log2(n), 'entropy_exact': entropy,
                     'mean_log_size': estimate.mean_length, 'stderr': estimate.length_stderr,
                     'gap': estimate.gap, 'gap_stderr': estimate.gap_stderr})
        logger.info("n=%d: H=%.3f E log|T|=%.3f gap=%.4f (+/- %.4f)", n, entropy,
                    estimate.mean_length, estimate.gap, estimate.gap_stderr)
    frame = pd.DataFrame(rows)
    summary = {'half_dimension': params.dimension / 2.0}
    if len(frame) >= 2:
        fit = linregress(frame['log2_n'], frame['gap'])
        summary.update(slope=float(fit.slope), intercept=float(fit.intercept),
                       r_squared=float(fit.rvalue ** 2))
    return AsymptoticsReport(frame, summary)


def _stop_length_chunk(task) -> np.ndarray:
    params, M, N, trials, seed, prng = task
    cfg = VfrConfig(params.spec, M, N)
    lengths = np.empty(trials)
    for i, row in enumerate(sample_batch(params, N, trials, seed, prng)):
        try:
            lengths[i] = g2_generate(row.tolist(), cfg).length
        except InputExhaustedError:
            lengths[i] = N
    return lengths


def mc_stop_length(params: MarkovParams, M: int, N: int, trials: int, seed: int,
                   workers: Optional[int] = None) -> Tuple[float, float]:
    """Monte Carlo mean stop length (failures count as N) and its standard error."""
    prng = get_settings().prng
    tasks = [(params, M, N, size, chunk_seed, prng)
             for size, chunk_seed in _chunk_plan(trials, seed)]
    return _mean_and_stderr(np.concatenate(_fan_out(_stop_length_chunk, tasks, workers)))


def _exact_length_or_nan(params: MarkovParams, M: int, N: int) -> float:
    try:
        return float(expected_input_length_exact(params, M, N, max_types=EXACT_VFR_MAX_TYPES))
    except ResourceLimitError as e:
        logger.warning("exact length for M=%d skipped: %s", M, e)
        return float('nan')


def run_vf_asymptotics(params: MarkovParams, M_list: Sequence[int], N: int, trials: int,
                       seed: int, workers: Optional[int] = None) -> AsymptoticsReport:
    """
    Expected input length per M and the diagnostic L*H - log2 M.

    The length used for the diagnostic is the exact truncated value when the
    type enumeration fits, otherwise the Monte Carlo mean.
    """
    m_values = list(M_list)
    if m_values != sorted(m_values) or len(set(m_values)) != len(m_values):
        raise ConfigurationError("M_list must be strictly ascending")
    rate = entropy_rate(params)
    rows = []
    for M in m_values:
        mean, stderr = mc_stop_length(params, M, N, trials, seed, workers)
        exact = _exact_length_or_nan(params, M, N)
        length = mean if math.isnan(exact) else exact
        rows.append({'M': M, 'log2_M': math.log2(M), 'length_mc': mean, 'stderr': stderr,
                     'length_exact': exact, 'delta': length * rate - math.log2(M),
                     'entropy_bound': math.log2(M) / rate})
        logger.info("M=%d: L=%.4f (mc %.4f +/- %.4f)", M, length, mean, stderr)
    frame = pd.DataFrame(rows)
    deltas = frame['delta'].tolist()
    lengths = frame['length_exact'].where(frame['length_exact'].notna(), frame['length_mc'])
    summary = {
        'entropy_rate': rate,
        'delta_non_decreasing': float(all(b >= a for a, b in zip(deltas, deltas[1:]))),
        'min_delta': float(min(deltas)),
        'above_entropy_bound': float(bool((lengths >= frame['entropy_bound']).all())),
    }
    return AsymptoticsReport(frame, summary)


def vfr_analysis_table(params: MarkovParams, M: int, N: int, exact: bool = True) -> pd.DataFrame:
    """
    Rows (n, p_fail_exact, l_partial) for n = 0..N.

    Levels are evaluated in rational arithmetic and rounded once; exact=False
    sums floats in the log domain instead.

    l_partial at n is the expected input length of the dictionary truncated
    at depth n, i.e. the sum of P(fail_i) over i < n.
    """
    rows = []
    partial = 0
    for n, prob in iter_failure_levels(params, M, N, exact):
        rows.append({'n': n, 'p_fail_exact': float(prob), 'l_partial': float(partial)})
        partial += prob
    return pd.DataFrame(rows)


def fit_failure_decay(table: pd.DataFrame, n_min: int = 10,
                      n_max: Optional[int] = None) -> Tuple[float, float]:
    """Slope and R^2 of log2 P(fail_n) against n over [n_min, n_max]."""
    window = table[(table['n'] >= n_min) & (table['p_fail_exact'] > 0)]
    if n_max is not None:
        window = window[window['n'] <= n_max]
    if len(window) < 2:
        raise ConfigurationError("need at least two positive failure probabilities to fit")
    fit = linregress(window['n'], np.log2(window['p_fail_exact']))
    return float(fit.slope), float(fit.rvalue ** 2)
