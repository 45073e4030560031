"""
Finite-memory (Markov) source models.

This module represents k-th order sources over the alphabet [0, alpha),
computes sequence probabilities and entropies, and draws reproducible samples.

States are encoded as mixed-radix integers: the state (s_1, ..., s_k), where
s_k is the most recent symbol, has index sum_j s_j * alpha**(k - j), so the
most recent symbol is the least significant digit. Emitting symbol a from
state s leads to state (s * alpha + a) mod alpha**k.
"""

import hashlib
import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import entropy

from .config import get_settings, SUPPORTED_PRNGS
from .exceptions import ModelError, SymbolError

logger = logging.getLogger(__name__)

ROW_SUM_TOLERANCE = 1e-12
SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class ModelSpec:
    """
    Alphabet size, Markov order and initial state of a source.

    Args:
        alpha: Alphabet size (at least 2)
        k: Markov order
        s0: Initial state as k symbols, oldest first; all zeros when omitted
    """
    alpha: int
    k: int = 0
    s0: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        if not isinstance(self.alpha, (int, np.integer)) or self.alpha < 2:
            raise ModelError(f"alpha must be an integer >= 2, got {self.alpha!r}")
        if not isinstance(self.k, (int, np.integer)) or self.k < 0:
            raise ModelError(f"k must be a nonnegative integer, got {self.k!r}")
        s0 = (0,) * self.k if self.s0 is None else tuple(int(a) for a in self.s0)
        if len(s0) != self.k:
            raise ModelError(f"s0 must have exactly k={self.k} symbols, got {len(s0)}")
        if any(a < 0 or a >= self.alpha for a in s0):
            raise ModelError(f"s0 symbols must lie in [0, {self.alpha}), got {s0}")
        object.__setattr__(self, 'alpha', int(self.alpha))
        object.__setattr__(self, 'k', int(self.k))
        object.__setattr__(self, 's0', s0)

    @property
    def num_states(self) -> int:
        return self.alpha ** self.k

    @property
    def initial_state(self) -> int:
        return self.state_index(self.s0)

    def state_index(self, symbols: Sequence[int]) -> int:
        """Mixed-radix index of a k-tuple (most recent symbol least significant)."""
        index = 0
        for a in symbols:
            index = index * self.alpha + int(a)
        return index

    def state_symbols(self, index: int) -> Tuple[int, ...]:
        """Inverse of state_index."""
        symbols = []
        for _ in range(self.k):
            index, a = divmod(index, self.alpha)
            symbols.append(a)
        return tuple(reversed(symbols))

    def next_state(self, state: int, symbol: int) -> int:
        """State reached after emitting symbol from state."""
        return (state * self.alpha + symbol) % self.num_states

    def with_initial_state(self, s0: Sequence[int]) -> 'ModelSpec':
        return ModelSpec(self.alpha, self.k, tuple(s0))

    def with_order(self, k: int) -> 'ModelSpec':
        """Same alphabet, order k, all-zero initial state."""
        return ModelSpec(self.alpha, k)

    def validate_sequence(self, x: Iterable[int]) -> Tuple[int, ...]:
        """Return x as a tuple, raising SymbolError on out-of-range symbols."""
        symbols = tuple(int(a) for a in x)
        for position, a in enumerate(symbols):
            if a < 0 or a >= self.alpha:
                raise SymbolError(
                    f"symbol {a} at position {position} is outside [0, {self.alpha})")
        return symbols


@dataclass(frozen=True, eq=False)
class MarkovParams:
    """
    Conditional probabilities p(a|s) of a k-th order source.

    The table has one row per state (mixed-radix order) and one column per
    symbol. Every entry must be strictly positive and every row must sum to 1.
    """
    spec: ModelSpec
    cond: np.ndarray = field(repr=False)

    def __post_init__(self):
        cond = np.array(self.cond, dtype=float)
        expected = (self.spec.num_states, self.spec.alpha)
        if cond.shape != expected:
            raise ModelError(f"cond must have shape {expected}, got {cond.shape}")
        if not np.all(np.isfinite(cond)) or np.any(cond <= 0.0):
            raise ModelError("all conditional probabilities must be strictly positive")
        row_sums = cond.sum(axis=1)
        if np.any(np.abs(row_sums - 1.0) > ROW_SUM_TOLERANCE):
            worst = int(np.argmax(np.abs(row_sums - 1.0)))
            raise ModelError(f"row {worst} sums to {row_sums[worst]!r}, not 1")
        cond.setflags(write=False)
        object.__setattr__(self, 'cond', cond)

    @classmethod
    def iid(cls, probs: Sequence[float]) -> 'MarkovParams':
        """Memoryless source with symbol probabilities probs."""
        return cls(ModelSpec(len(probs), 0), np.array([probs], dtype=float))

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[float]], k: int,
                  s0: Optional[Sequence[int]] = None) -> 'MarkovParams':
        """Build parameters from a list of rows in mixed-radix state order."""
        rows = np.array(rows, dtype=float)
        if rows.ndim != 2:
            raise ModelError("cond must be a two-dimensional table")
        spec = ModelSpec(rows.shape[1], k, None if s0 is None else tuple(s0))
        return cls(spec, rows)

    @classmethod
    def from_dict(cls, data: Dict) -> 'MarkovParams':
        """Parse the model-file JSON object."""
        try:
            alpha = int(data['alpha'])
            k = int(data['k'])
            cond = data['cond']
        except (KeyError, TypeError, ValueError) as e:
            raise ModelError(f"model object is missing or has a bad field: {e}") from e
        s0 = data.get('s0')
        spec = ModelSpec(alpha, k, None if s0 is None else tuple(s0))
        return cls(spec, np.array(cond, dtype=float))

    def to_dict(self) -> Dict:
        return {
            'alpha': self.spec.alpha,
            'k': self.spec.k,
            's0': list(self.spec.s0),
            'cond': [[float(p) for p in row] for row in self.cond],
        }

    def model_hash(self) -> str:
        """SHA-256 of the canonical JSON form, used in report metadata."""
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()

    @property
    def dimension(self) -> int:
        """Number of free parameters K = (alpha - 1) * alpha**k."""
        return (self.spec.alpha - 1) * self.spec.num_states

    @property
    def log_cond(self) -> np.ndarray:
        return np.log2(self.cond)

    def exact_cond(self) -> List[List[Fraction]]:
        """The table as exact rationals, each the shortest decimal that rounds to its float."""
        return [[Fraction(repr(float(p))) for p in row] for row in self.cond]

    def transition_matrix(self) -> np.ndarray:
        """State-transition kernel Q[s, t] induced by cond."""
        spec = self.spec
        q = np.zeros((spec.num_states, spec.num_states))
        for s in range(spec.num_states):
            for a in range(spec.alpha):
                q[s, spec.next_state(s, a)] += self.cond[s, a]
        return q

    def __repr__(self) -> str:
        return f"MarkovParams(alpha={self.spec.alpha}, k={self.spec.k}, s0={self.spec.s0})"


def seq_probability(params: MarkovParams, x: Sequence[int]) -> float:
    """
    Log-probability (base 2) of a sequence, with the past padded by s0.

    Args:
        params: Source parameters
        x: Symbol sequence

    Returns:
        sum_t log2 p(x_t | state_t); 0.0 for the empty sequence
    """
    spec = params.spec
    symbols = spec.validate_sequence(x)
    log_cond = params.log_cond
    state = spec.initial_state
    total = 0.0
    for a in symbols:
        total += log_cond[state, a]
        state = spec.next_state(state, a)
    return float(total)


def seq_probability_exact(params: MarkovParams, x: Sequence[int],
                          table: Optional[List[List[Fraction]]] = None) -> Fraction:
    """Exact probability of x as a Fraction of the binary parameter values."""
    spec = params.spec
    symbols = spec.validate_sequence(x)
    table = table if table is not None else params.exact_cond()
    state = spec.initial_state
    prob = Fraction(1)
    for a in symbols:
        prob *= table[state][a]
        state = spec.next_state(state, a)
    return prob


def stationary_distribution(params: MarkovParams) -> np.ndarray:
    """
    Stationary state distribution pi with pi Q = pi.

    Solved exactly (up to floating point) by Gaussian elimination on the
    balance equations with one equation replaced by sum(pi) = 1.
    """
    num_states = params.spec.num_states
    if num_states == 1:
        return np.ones(1)
    q = params.transition_matrix()
    system = q.T - np.eye(num_states)
    system[-1, :] = 1.0
    rhs = np.zeros(num_states)
    rhs[-1] = 1.0
    return np.linalg.solve(system, rhs)


def conditional_entropies(params: MarkovParams) -> np.ndarray:
    """H(X | s) in bits for every state s."""
    return np.array([entropy(row, base=2) for row in params.cond])


def entropy_rate(params: MarkovParams) -> float:
    """Entropy rate sum_s pi(s) H(X|s) in bits per symbol."""
    return float(stationary_distribution(params) @ conditional_entropies(params))


def marginal_entropy(params: MarkovParams, n: int) -> float:
    """
    Exact entropy H(X^n) of the first n symbols, in bits.

    Uses the chain rule: given the fixed initial state, the past determines
    the state, so H(X_t | X^{t-1}) = sum_s mu_t(s) H(X|s) where mu_t is the
    state distribution at time t.
    """
    if n < 0:
        raise ModelError(f"n must be nonnegative, got {n}")
    row_entropy = conditional_entropies(params)
    q = params.transition_matrix()
    mu = np.zeros(params.spec.num_states)
    mu[params.spec.initial_state] = 1.0
    total = 0.0
    for _ in range(n):
        total += float(mu @ row_entropy)
        mu = mu @ q
    return total


def make_generator(seed: int, prng: Optional[str] = None) -> np.random.Generator:
    """Seeded numpy Generator using the configured bit generator."""
    name = prng or get_settings().prng
    if name not in SUPPORTED_PRNGS:
        raise ModelError(f"unsupported PRNG {name!r}; choose one of {SUPPORTED_PRNGS}")
    bit_generator = getattr(np.random, name)(int(seed) & SEED_MASK)
    return np.random.Generator(bit_generator)


def _draw(params: MarkovParams, uniforms: np.ndarray) -> np.ndarray:
    """Map a (trials, n) array of uniforms to symbols by inverse CDF."""
    spec = params.spec
    cdf = np.cumsum(params.cond, axis=1)
    cdf[:, -1] = np.inf
    trials, n = uniforms.shape
    out = np.empty((trials, n), dtype=np.int64)
    if spec.k == 0:
        out[:] = np.searchsorted(cdf[0], uniforms, side='right')
        return out
    state = np.full(trials, spec.initial_state, dtype=np.int64)
    for t in range(n):
        symbols = (cdf[state] <= uniforms[:, t, None]).sum(axis=1)
        out[:, t] = symbols
        state = (state * spec.alpha + symbols) % spec.num_states
    return out


def sample(params: MarkovParams, n: int, seed: int,
           prng: Optional[str] = None) -> Tuple[int, ...]:
    """
    Draw x^n from the source.

    Identical (params, n, seed, prng) always give identical output.
    """
    if n < 0:
        raise ModelError(f"n must be nonnegative, got {n}")
    if n == 0:
        return ()
    uniforms = make_generator(seed, prng).random((1, n))
    return tuple(int(a) for a in _draw(params, uniforms)[0])


def sample_batch(params: MarkovParams, n: int, trials: int, seed: int,
                 prng: Optional[str] = None) -> np.ndarray:
    """
    Draw `trials` independent sequences at once.

    Returns:
        Integer array of shape (trials, n); row 0 equals sample(params, n, seed)
        when trials == 1.
    """
    if n < 0 or trials < 0:
        raise ModelError("n and trials must be nonnegative")
    uniforms = make_generator(seed, prng).random((trials, n))
    return _draw(params, uniforms)
