"""
Type classes of k-th order Markov sequences.

A type is the table of transition counts n_{s,a} of a sequence (with the past
padded by the initial state). All sequences of one type are equiprobable
under every k-th order source. This module counts type classes exactly with
Whittle's formula, ranks and unranks members, and splits classes by the
symbols that precede their common final state ("typecut").

Member ordering is reverse-lexicographic: x_n is the most significant symbol
and x_1 the least significant.
"""

import itertools
import json
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterator, List, Optional, Sequence, Set, Tuple

import numpy as np
from scipy import sparse

from .config import get_settings
from .exceptions import RankRangeError, ResourceLimitError
from .markov_model import MarkovParams, ModelSpec

logger = logging.getLogger(__name__)

# Count tables with more cells than this are exposed as scipy sparse matrices
DENSE_CELL_LIMIT = 4096

CountItems = Tuple[Tuple[Tuple[int, int], int], ...]


@dataclass(frozen=True)
class TypeCounts:
    """
    Transition counts of a type class.

    Attributes:
        spec: Model specification (alphabet, order, initial state)
        n: Sequence length
        counts: Nonzero counts as ((state, symbol), count) pairs sorted by
            (state index, symbol)
        final: Index of the common final state
    """
    spec: ModelSpec
    n: int
    counts: CountItems
    final: int

    @classmethod
    def build(cls, spec: ModelSpec, n: int, table: Dict[Tuple[int, int], int],
              final: int) -> 'TypeCounts':
        """Canonicalize a {(state, symbol): count} table."""
        items = tuple(sorted((key, int(c)) for key, c in table.items() if c))
        return cls(spec, n, items, final)

    @classmethod
    def empty(cls, spec: ModelSpec) -> 'TypeCounts':
        """The type of the empty sequence."""
        return cls(spec, 0, (), spec.initial_state)

    @property
    def start(self) -> int:
        return self.spec.initial_state

    def as_dict(self) -> Dict[Tuple[int, int], int]:
        return dict(self.counts)

    def count(self, state: int, symbol: int) -> int:
        return self.as_dict().get((state, symbol), 0)

    def out_degrees(self) -> Dict[int, int]:
        """n_s for every state with at least one outgoing transition."""
        totals: Dict[int, int] = {}
        for (s, _), c in self.counts:
            totals[s] = totals.get(s, 0) + c
        return totals

    def extend(self, symbol: int) -> 'TypeCounts':
        """Type of x^n followed by symbol, for any x^n of this type."""
        table = self.as_dict()
        key = (self.final, symbol)
        table[key] = table.get(key, 0) + 1
        return TypeCounts.build(self.spec, self.n + 1, table,
                                self.spec.next_state(self.final, symbol))

    def as_matrix(self):
        """Counts as an (alpha**k, alpha) table: numpy when small, scipy sparse otherwise."""
        shape = (self.spec.num_states, self.spec.alpha)
        if shape[0] * shape[1] <= DENSE_CELL_LIMIT:
            dense = np.zeros(shape, dtype=np.int64)
            for (s, a), c in self.counts:
                dense[s, a] = c
            return dense
        table = sparse.dok_matrix(shape, dtype=np.int64)
        for (s, a), c in self.counts:
            table[s, a] = c
        return table.tocsr()

    def to_json(self) -> str:
        """Debug dump: {"n", "start", "final", "counts": {"s,a": c}}."""
        return json.dumps({
            'n': self.n,
            'start': list(self.spec.state_symbols(self.start)),
            'final': list(self.spec.state_symbols(self.final)),
            'counts': {f"{s},{a}": c for (s, a), c in self.counts},
        }, sort_keys=False)

    def sort_key(self) -> Tuple:
        return (self.n, self.final, self.counts)


def counts_of(x: Sequence[int], spec: ModelSpec) -> TypeCounts:
    """
    Type of a sequence.

    Args:
        x: Symbol sequence
        spec: Model specification; the past is padded with spec.s0

    Returns:
        TypeCounts whose final state is the last k symbols (s0-padded)
    """
    symbols = spec.validate_sequence(x)
    table: Dict[Tuple[int, int], int] = {}
    state = spec.initial_state
    for a in symbols:
        table[(state, a)] = table.get((state, a), 0) + 1
        state = spec.next_state(state, a)
    return TypeCounts.build(spec, len(symbols), table, state)


def is_consistent(t: TypeCounts) -> bool:
    """Flow conservation: in(z) - out(z) = [z = final] - [z = start] for every state."""
    if sum(c for _, c in t.counts) != t.n or any(c < 0 for _, c in t.counts):
        return False
    balance: Dict[int, int] = {t.start: 0, t.final: 0}
    for (s, a), c in t.counts:
        target = t.spec.next_state(s, a)
        balance[s] = balance.get(s, 0) - c
        balance[target] = balance.get(target, 0) + c
    for state, flow in balance.items():
        if flow != int(state == t.final) - int(state == t.start):
            return False
    return True


def bareiss_determinant(matrix: List[List[int]]) -> int:
    """
    Determinant of an integer matrix by fraction-free (Bareiss) elimination.

    All intermediate values are integers and every division is exact.
    """
    m = [list(row) for row in matrix]
    size = len(m)
    if size == 0:
        return 1
    sign = 1
    previous = 1
    for i in range(size - 1):
        if m[i][i] == 0:
            swap = next((r for r in range(i + 1, size) if m[r][i] != 0), None)
            if swap is None:
                return 0
            m[i], m[swap] = m[swap], m[i]
            sign = -sign
        pivot = m[i][i]
        for r in range(i + 1, size):
            for c in range(i + 1, size):
                m[r][c] = (m[r][c] * pivot - m[r][i] * m[i][c]) // previous
            m[r][i] = 0
        previous = pivot
    return sign * m[-1][-1]


def _laplacian_minor(t: TypeCounts) -> Tuple[List[List[int]], List[int]]:
    """
    Out-degree Laplacian of the transition multigraph, final state removed.

    Vertices are the states with outgoing transitions plus the two endpoints.
    """
    degrees = t.out_degrees()
    vertices = sorted(set(degrees) | {t.start, t.final})
    others = [v for v in vertices if v != t.final]
    position = {v: i for i, v in enumerate(others)}
    minor = [[0] * len(others) for _ in others]
    for (s, a), c in t.counts:
        if s == t.final:
            continue
        i = position[s]
        minor[i][i] += c
        target = t.spec.next_state(s, a)
        if target in position:
            minor[i][position[target]] -= c
    return minor, others


def whittle_cofactor(t: TypeCounts) -> Fraction:
    """
    Whittle's cofactor W of the type, an exact rational in (0, 1].

    W is the (final, start) cofactor of I - F*, with F*_{s,u} the fraction of
    transitions out of s that lead to u. Rows of I - F* sum to zero, so every
    cofactor along the final row coincides with the principal minor that
    drops the final state; that minor equals det(L') / prod_{s != final} n_s
    where L' is the integer Laplacian minor. Returns 0 for types that no
    sequence realizes.
    """
    if not is_consistent(t):
        return Fraction(0)
    minor, others = _laplacian_minor(t)
    degrees = t.out_degrees()
    denominator = 1
    for v in others:
        denominator *= degrees.get(v, 0)
    if denominator == 0:
        return Fraction(0)
    return Fraction(bareiss_determinant(minor), denominator)


@lru_cache(maxsize=1 << 18)
def class_size(t: TypeCounts) -> int:
    """
    Exact number of sequences of type t (Whittle's formula).

    |T| = [prod_s n_s! / prod_{s,a} n_{s,a}!] * W. Inconsistent counts give 0.
    """
    cofactor = whittle_cofactor(t)
    if cofactor == 0:
        return 0
    quotient = 1
    for n_s in t.out_degrees().values():
        quotient *= math.factorial(n_s)
    for _, c in t.counts:
        quotient //= math.factorial(c)
    size = quotient * cofactor
    if size.denominator != 1:
        raise ArithmeticError(f"Whittle's formula gave a non-integer size {size} for {t}")
    return int(size)


def peel(t: TypeCounts, symbol: int) -> Optional[TypeCounts]:
    """
    Remove the last transition of members whose symbol x_{n-k} equals symbol.

    Returns the candidate prefix type, or None when no transition is left to
    remove. The result may still be an empty class (class_size 0).
    """
    if t.n == 0:
        return None
    spec = t.spec
    if spec.k == 0:
        state, emitted = 0, symbol
    else:
        emitted = t.final % spec.alpha
        state = symbol * spec.alpha ** (spec.k - 1) + t.final // spec.alpha
    table = t.as_dict()
    c = table.get((state, emitted), 0)
    if c == 0:
        return None
    table[(state, emitted)] = c - 1
    return TypeCounts.build(spec, t.n - 1, table, state)


def typecut(t: TypeCounts, u: Sequence[int]) -> Optional[TypeCounts]:
    """
    Type of the length-(n - |u|) prefixes of members with x_{n-k-|u|+1..n-k} = u.

    Symbols are peeled from the end of u towards its start, so
    typecut(t, v + u) == typecut(typecut(t, u), v). Returns None when no
    member of t matches u.
    """
    current: Optional[TypeCounts] = t
    for symbol in reversed(tuple(u)):
        current = peel(current, symbol)
        if current is None:
            return None
    if class_size(current) == 0:
        return None
    return current


def subclass_size(t: Optional[TypeCounts]) -> int:
    """class_size that treats None (empty typecut) as 0."""
    return 0 if t is None else class_size(t)


def rank(x: Sequence[int], spec: ModelSpec) -> int:
    """
    Position of x in its type class under reverse-lexicographic order.

    Args:
        x: Symbol sequence
        spec: Model specification

    Returns:
        Index in [0, |T(x)|)
    """
    symbols = spec.validate_sequence(x)
    padded = spec.s0 + symbols
    current = counts_of(symbols, spec)
    index = 0
    for m in range(len(symbols), 0, -1):
        # padded[m - 1] is x_{m-k}
        symbol = padded[m - 1]
        for a in range(symbol):
            index += subclass_size(peel(current, a))
        current = peel(current, symbol)
    return index


def unrank(t: TypeCounts, i: int) -> Tuple[int, ...]:
    """Member of type t with reverse-lexicographic index i."""
    size = class_size(t)
    if i < 0 or i >= size:
        raise RankRangeError(f"index {i} outside [0, {size})")
    spec = t.spec
    chosen: List[int] = []
    current = t
    for _ in range(t.n):
        for a in range(spec.alpha):
            candidate = peel(current, a)
            size_a = subclass_size(candidate)
            if i < size_a:
                break
            i -= size_a
        chosen.append(a)
        current = candidate
    padded = tuple(reversed(chosen)) + spec.state_symbols(t.final)
    return padded[spec.k:]


def iter_type_levels(spec: ModelSpec, n_max: int,
                     max_types: Optional[int] = None) -> Iterator[List[TypeCounts]]:
    """
    Yield the sorted list of all types of length n, for n = 0, 1, ..., n_max.

    Each level is built by extending every type of the previous level by
    every symbol.
    """
    limit = max_types or get_settings().max_types
    level = [TypeCounts.empty(spec)]
    yield level
    for n in range(1, n_max + 1):
        extended: Set[TypeCounts] = {t.extend(a) for t in level for a in range(spec.alpha)}
        if len(extended) > limit:
            raise ResourceLimitError(
                f"{len(extended)} types of length {n} exceed the limit of {limit}")
        level = sorted(extended, key=TypeCounts.sort_key)
        yield level


def all_types(spec: ModelSpec, n: int, max_types: Optional[int] = None) -> List[TypeCounts]:
    """Every realizable type of length n, each exactly once."""
    level: List[TypeCounts] = []
    for level in iter_type_levels(spec, n, max_types):
        pass
    return level


def iter_sequences(alpha: int, n: int, bound: Optional[int] = None) -> Iterator[Tuple[int, ...]]:
    """All alpha**n sequences in lexicographic order, guarded by the brute-force bound."""
    limit = bound or get_settings().brute_force_bound
    if alpha ** n > limit:
        raise ResourceLimitError(f"{alpha}**{n} sequences exceed the brute-force bound {limit}")
    return itertools.product(range(alpha), repeat=n)


def reverse_lex_key(x: Sequence[int]) -> Tuple[int, ...]:
    """Sort key with x_n most significant."""
    return tuple(reversed(tuple(x)))


def group_by_type(spec: ModelSpec, n: int,
                  bound: Optional[int] = None) -> Dict[TypeCounts, List[Tuple[int, ...]]]:
    """Exhaustive partition of A^n into type classes, members in reverse-lex order."""
    groups: Dict[TypeCounts, List[Tuple[int, ...]]] = {}
    for x in iter_sequences(spec.alpha, n, bound):
        groups.setdefault(counts_of(x, spec), []).append(x)
    for members in groups.values():
        members.sort(key=reverse_lex_key)
    return groups


def brute_force_class(x: Sequence[int], spec: ModelSpec,
                      bound: Optional[int] = None) -> Set[Tuple[int, ...]]:
    """All y^n with the same type as x, found by exhaustive search."""
    symbols = spec.validate_sequence(x)
    target = counts_of(symbols, spec)
    return {y for y in iter_sequences(spec.alpha, len(symbols), bound)
            if counts_of(y, spec) == target}


def type_log_probability(params: MarkovParams, t: TypeCounts) -> float:
    """log2 P(x) for any member x of t."""
    log_cond = params.log_cond
    return float(sum(c * log_cond[s, a] for (s, a), c in t.counts))


def type_probability(params: MarkovParams, t: TypeCounts, exact: bool = False):
    """
    Probability P(T) of the whole class.

    Args:
        params: Source parameters (must share spec with t)
        t: Type
        exact: Return a Fraction computed from the binary parameter values

    Returns:
        float or Fraction
    """
    size = class_size(t)
    if size == 0:
        return Fraction(0) if exact else 0.0
    if exact:
        table = params.exact_cond()
        prob = Fraction(size)
        for (s, a), c in t.counts:
            prob *= table[s][a] ** c
        return prob
    return 2.0 ** (math.log2(size) + type_log_probability(params, t))
