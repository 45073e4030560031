"""
Twice-universal fixed-to-variable generation.

When the Markov order is unknown, the order is estimated from the block itself
with a penalized maximum-likelihood rule, and the generator works on the
class U(x) of sequences that estimate the same order and share the type at
that order. The exact scheme enumerates U(x) (desk scale only); the practical
scheme simply runs E2 at the estimated order.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .config import get_settings
from .exceptions import ConfigurationError
from .fvr import FvrOutput, TargetSet, e2_from_rank, e2_generate
from .markov_model import MarkovParams, ModelSpec, seq_probability_exact
from .type_classes import TypeCounts, counts_of, iter_sequences, reverse_lex_key

logger = logging.getLogger(__name__)

SCORE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class Penalty:
    """
    Penalty phi(n) = coefficient * log2(n) / n.

    The MDL choice has coefficient (alpha - 1) / 2.
    """
    name: str
    coefficient: float

    def __call__(self, n: int) -> float:
        if n <= 1:
            return 0.0
        return self.coefficient * math.log2(n) / n


def penalty_mdl(alpha: int) -> Penalty:
    return Penalty('mdl', (alpha - 1) / 2.0)


def penalty_constant(coefficient: float, alpha: int = 2) -> Penalty:
    """
    Penalty with a user-chosen coefficient.

    Overestimation is only guaranteed to vanish when the coefficient is large
    enough; coefficients below the MDL value get a warning, not an error.
    """
    if coefficient <= 0:
        raise ConfigurationError(f"penalty coefficient must be positive, got {coefficient}")
    if coefficient < (alpha - 1) / 2.0:
        logger.warning("penalty coefficient %.4g is below the MDL value %.4g; "
                       "order overestimation may not vanish", coefficient, (alpha - 1) / 2.0)
    return Penalty(f"c:{coefficient:g}", float(coefficient))


def parse_penalty(text: Optional[str], alpha: int) -> Penalty:
    """'mdl' (default) or 'c:<coefficient>'."""
    if text is None or text == 'mdl':
        return penalty_mdl(alpha)
    if text.startswith('c:'):
        try:
            value = float(text[2:])
        except ValueError as e:
            raise ConfigurationError(f"bad penalty {text!r}") from e
        return penalty_constant(value, alpha)
    raise ConfigurationError(f"unknown penalty {text!r}; use mdl or c:<value>")


@dataclass(frozen=True)
class OrderEstimate:
    """Estimated order and the (k, score) list it minimizes."""
    k_hat: int
    scores: Tuple[Tuple[int, float], ...]


def default_max_order(alpha: int, n: int) -> int:
    """max(0, floor(log_alpha n) - 1), computed in integers."""
    e = 0
    power = alpha
    while power <= n:
        power *= alpha
        e += 1
    return max(0, e - 1)


def empirical_cond_entropy(x: Sequence[int], k: int, alpha: int = 2) -> float:
    """
    Empirical conditional entropy of order k, in bits per symbol.

    The past before x_1 is taken to be all zeros.
    """
    spec = ModelSpec(alpha, k)
    t = counts_of(x, spec)
    if t.n == 0:
        return 0.0
    degrees = t.out_degrees()
    total = 0.0
    for (s, _), c in t.counts:
        total -= c * math.log2(c / degrees[s])
    return total / t.n


def estimate_order(x: Sequence[int], alpha: int = 2, phi: Optional[Penalty] = None,
                   k_max: Optional[int] = None) -> OrderEstimate:
    """
    Penalized maximum-likelihood order estimate.

    Args:
        x: Symbol sequence (at least one symbol)
        alpha: Alphabet size
        phi: Penalty function; MDL when omitted
        k_max: Largest order considered; default_max_order when omitted

    Returns:
        OrderEstimate with the smallest k among minimal scores
    """
    n = len(x)
    phi = phi or penalty_mdl(alpha)
    k_max = default_max_order(alpha, n) if k_max is None else k_max
    if k_max < 0:
        raise ConfigurationError(f"k_max must be nonnegative, got {k_max}")
    penalty = phi(n)
    scores = []
    best_k, best = 0, math.inf
    for k in range(k_max + 1):
        score = empirical_cond_entropy(x, k, alpha) + alpha ** k * penalty
        scores.append((k, score))
        if score < best - SCORE_TOLERANCE:
            best_k, best = k, score
    return OrderEstimate(best_k, tuple(scores))


UKey = Tuple[int, TypeCounts]


@dataclass(frozen=True)
class UPartition:
    """
    Partition of A^n into U-classes.

    Attributes:
        classes: key (k_hat, order-k_hat type) -> members in reverse-lex order
        position: sequence -> (key, index within its class)
    """
    classes: Dict[UKey, Tuple[Tuple[int, ...], ...]]
    position: Dict[Tuple[int, ...], Tuple[UKey, int]]


def u_key(x: Sequence[int], alpha: int, phi: Optional[Penalty] = None,
          k_max: Optional[int] = None) -> UKey:
    k_hat = estimate_order(x, alpha, phi, k_max).k_hat
    return k_hat, counts_of(x, ModelSpec(alpha, k_hat))


def u_partition(alpha: int, n: int, phi: Optional[Penalty] = None,
                k_max: Optional[int] = None, bound: Optional[int] = None) -> UPartition:
    """Exhaustive U-class partition of A^n."""
    return _cached_partition(alpha, n, phi, k_max, bound or get_settings().brute_force_bound)


@lru_cache(maxsize=16)
def _cached_partition(alpha: int, n: int, phi: Optional[Penalty], k_max: Optional[int],
                      bound: int) -> UPartition:
    groups: Dict[UKey, List[Tuple[int, ...]]] = {}
    for x in iter_sequences(alpha, n, bound):
        groups.setdefault(u_key(x, alpha, phi, k_max), []).append(x)
    classes = {key: tuple(sorted(members, key=reverse_lex_key))
               for key, members in groups.items()}
    position = {x: (key, i) for key, members in classes.items() for i, x in enumerate(members)}
    logger.debug("U-partition of %d**%d: %d classes", alpha, n, len(classes))
    return UPartition(classes, position)


def u_class(x: Sequence[int], alpha: int = 2, phi: Optional[Penalty] = None,
            k_max: Optional[int] = None, bound: Optional[int] = None) -> Tuple[Tuple[int, ...], ...]:
    """Members of U(x) in reverse-lexicographic order."""
    symbols = ModelSpec(alpha).validate_sequence(x)
    partition = u_partition(alpha, len(symbols), phi, k_max, bound)
    key, _ = partition.position[symbols]
    return partition.classes[key]


def tu_generate_exact(x: Sequence[int], target: TargetSet, alpha: int = 2,
                      phi: Optional[Penalty] = None, k_max: Optional[int] = None,
                      bound: Optional[int] = None) -> FvrOutput:
    """E2 run on |U(x)| with the index of x in U(x)."""
    symbols = ModelSpec(alpha).validate_sequence(x)
    partition = u_partition(alpha, len(symbols), phi, k_max, bound)
    key, index = partition.position[symbols]
    return e2_from_rank(index, len(partition.classes[key]), target)


def tu_generate_practical(x: Sequence[int], target: TargetSet, alpha: int = 2,
                          phi: Optional[Penalty] = None,
                          k_max: Optional[int] = None) -> Tuple[FvrOutput, int]:
    """Estimate the order, then run E2 at that order."""
    k_hat = estimate_order(x, alpha, phi, k_max).k_hat
    return e2_generate(x, ModelSpec(alpha, k_hat), target), k_hat


@dataclass(frozen=True)
class OrderRates:
    """Exact probabilities of under- and overestimating the true order."""
    p_under: Fraction
    p_over: Fraction


def order_rates(params: MarkovParams, n: int, phi: Optional[Penalty] = None,
                k_max: Optional[int] = None, bound: Optional[int] = None) -> OrderRates:
    """P(k_hat < k) and P(k_hat > k) by exhaustive enumeration."""
    spec = params.spec
    table = params.exact_cond()
    under = Fraction(0)
    over = Fraction(0)
    for x in iter_sequences(spec.alpha, n, bound):
        k_hat = estimate_order(x, spec.alpha, phi, k_max).k_hat
        if k_hat == spec.k:
            continue
        prob = seq_probability_exact(params, x, table)
        if k_hat < spec.k:
            under += prob
        else:
            over += prob
    return OrderRates(under, over)


def pairwise_spread(values: Sequence[Fraction], size: int) -> Fraction:
    """
    sum over ordered pairs (r, r') in [0, size) of |v_r - v_r'|.

    values holds the nonzero entries; the remaining size - len(values)
    entries are zero.
    """
    ordered = sorted(values)
    zeros = size - len(ordered)
    total = Fraction(0)
    for j, v in enumerate(ordered, start=zeros):
        total += v * (2 * j - (size - 1))
    return 2 * total


def distance_to_uniformity(scheme: Callable[[Tuple[int, ...]], FvrOutput],
                           params: MarkovParams, n: int,
                           bound: Optional[int] = None) -> Fraction:
    """
    Exact distance of an FVR to uniformity.

    D = sum_M (1/M) sum_{r, r'} |P(r, M) - P(r', M)|, which equals the
    weighted form with conditional laws Q_M. Zero exactly when every
    conditional output law is uniform.
    """
    table = params.exact_cond()
    joint: Dict[int, Dict[int, Fraction]] = {}
    for x in iter_sequences(params.spec.alpha, n, bound):
        out = scheme(x)
        cell = joint.setdefault(out.M, {})
        cell[out.r] = cell.get(out.r, Fraction(0)) + seq_probability_exact(params, x, table)
    distance = Fraction(0)
    for m, cell in joint.items():
        distance += pairwise_spread(list(cell.values()), m) / m
    return distance
