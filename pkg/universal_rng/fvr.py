"""
Fixed-to-variable random number generators.

An FVR reads a fixed-length block x^n and outputs a pair (r, M) with r
uniformly distributed in [0, M) given M, for every source of the model
class. The bare-bones Elias generator (E1) outputs the rank of x in its type
class; the generalized greedy generator (E2) restricts M to a target set by
splitting the class into contiguous rank intervals whose sizes are the greedy
decomposition of |T|.
"""

import bisect
import logging
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple

from .exceptions import ConfigurationError
from .markov_model import MarkovParams, ModelSpec
from .type_classes import (TypeCounts, all_types, class_size, counts_of, rank,
                           type_probability)

logger = logging.getLogger(__name__)

TARGET_KINDS = ('integers', 'powers', 'explicit')


def binary_entropy(p: float) -> float:
    """h(p) in bits."""
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def density_gap_bound(c) -> float:
    """c * h(1/c): the largest per-type length loss of E2 for a c-dense target."""
    c = float(c)
    return 0.0 if c <= 1.0 else c * binary_entropy(1.0 / c)


def _floor_power(m: int, p: int) -> int:
    """Largest power of p not exceeding m, in exact integer arithmetic."""
    e = max(0, int((m.bit_length() - 1) / math.log2(p)) - 1)
    value = p ** e
    while value * p <= m:
        value *= p
    while value > m:
        value //= p
    return value


@dataclass(frozen=True)
class TargetSet:
    """
    Set of admissible output ranges; always contains 1.

    Attributes:
        kind: 'integers', 'powers' or 'explicit'
        base: p for kind 'powers'
        values: Sorted elements for kind 'explicit'
        density: Constant c with M <= c * gtarg(M)
        bound: Largest M for which the density of an explicit set is
            guaranteed (None when unbounded)
    """
    kind: str
    base: int = 0
    values: Tuple[int, ...] = ()
    density: Fraction = Fraction(1)
    bound: Optional[int] = None

    @classmethod
    def integers(cls) -> 'TargetSet':
        return cls('integers')

    @classmethod
    def powers(cls, p: int) -> 'TargetSet':
        if p < 2:
            raise ConfigurationError(f"power targets need a base >= 2, got {p}")
        return cls('powers', base=int(p), density=Fraction(int(p)))

    @classmethod
    def explicit(cls, values: Sequence[int], density=None) -> 'TargetSet':
        """
        Finite target set.

        Args:
            values: Positive integers, must include 1
            density: Declared constant c; computed from the gaps when omitted

        Raises:
            ConfigurationError: if 1 is missing or the declared c is too small
        """
        elements = tuple(sorted({int(v) for v in values}))
        if not elements or elements[0] != 1:
            raise ConfigurationError("an explicit target set must contain 1")
        needed = max((Fraction(nxt - 1, cur) for cur, nxt in zip(elements, elements[1:])),
                     default=Fraction(1))
        needed = max(needed, Fraction(1))
        c = needed if density is None else Fraction(density)
        if c < needed:
            raise ConfigurationError(
                f"target set is not {float(c)}-dense: gaps require c >= {float(needed)}")
        bound = math.floor(c * elements[-1])
        return cls('explicit', values=elements, density=c, bound=bound)

    @classmethod
    def parse(cls, text: str) -> 'TargetSet':
        """Parse 'int', 'pow2', 'pow:p' or 'list:<file>' (whitespace or comma separated)."""
        text = text.strip()
        if text == 'int':
            return cls.integers()
        if text == 'pow2':
            return cls.powers(2)
        if text.startswith('pow:'):
            try:
                return cls.powers(int(text[4:]))
            except ValueError as e:
                raise ConfigurationError(f"bad power target {text!r}") from e
        if text.startswith('list:'):
            path = Path(text[5:])
            try:
                raw = path.read_text(encoding='utf-8').replace(',', ' ').split()
                return cls.explicit([int(v) for v in raw])
            except (OSError, ValueError) as e:
                raise ConfigurationError(f"cannot read target list {path}: {e}") from e
        raise ConfigurationError(f"unknown target {text!r}; use int, pow2, pow:p or list:file")

    def describe(self) -> str:
        if self.kind == 'integers':
            return 'int'
        if self.kind == 'powers':
            return f"pow:{self.base}"
        return f"list[{len(self.values)}]"

    def gtarg(self, m: int) -> int:
        """Largest element of the set not exceeding m (m >= 1)."""
        if m < 1:
            raise ValueError(f"gtarg needs m >= 1, got {m}")
        if self.kind == 'integers':
            return m
        if self.kind == 'powers':
            return _floor_power(m, self.base)
        if self.bound is not None and m > self.bound:
            raise ConfigurationError(
                f"{m} exceeds {self.bound}, the largest value for which the target "
                f"set is verified {float(self.density)}-dense")
        return self.values[bisect.bisect_right(self.values, m) - 1]

    def __contains__(self, m: int) -> bool:
        if m < 1:
            return False
        if self.kind == 'integers':
            return True
        if self.kind == 'powers':
            return _floor_power(m, self.base) == m
        return m in self.values


@dataclass(frozen=True)
class FvrOutput:
    """Generator output: r uniform in [0, M)."""
    r: int
    M: int


def digits(r: int, M: int, p: int) -> List[int]:
    """Base-p digits of r, most significant first, when M = p**e (e digits)."""
    e = 0
    value = 1
    while value < M:
        value *= p
        e += 1
    if value != M:
        raise ValueError(f"{M} is not a power of {p}")
    out = []
    for _ in range(e):
        r, d = divmod(r, p)
        out.append(d)
    return out[::-1]


def _synchronize(x: Sequence[int], spec: ModelSpec,
                 sync_state: bool) -> Tuple[Tuple[int, ...], ModelSpec]:
    """In sync-state mode the first k symbols become the initial state."""
    symbols = spec.validate_sequence(x)
    if not sync_state or spec.k == 0:
        return symbols, spec
    if len(symbols) < spec.k:
        raise ConfigurationError(f"sync-state mode needs at least k={spec.k} symbols")
    return symbols[spec.k:], spec.with_initial_state(symbols[:spec.k])


def e1_generate(x: Sequence[int], spec: ModelSpec, sync_state: bool = False) -> FvrOutput:
    """Bare-bones Elias generator: (rank of x in T(x), |T(x)|)."""
    symbols, spec = _synchronize(x, spec, sync_state)
    return FvrOutput(rank(symbols, spec), class_size(counts_of(symbols, spec)))


def greedy_decompose(nu: int, target: TargetSet) -> List[int]:
    """
    Greedy decomposition nu = M_1 + ... + M_m with M_i = gtarg(remainder).

    For power targets the parts are the radix-p digits of nu.
    """
    if nu < 1:
        raise ValueError(f"cannot decompose {nu}")
    if target.kind == 'powers':
        parts: List[int] = []
        power = _floor_power(nu, target.base)
        remainder = nu
        while power >= 1:
            d, remainder = divmod(remainder, power)
            parts.extend([power] * d)
            power //= target.base
        return parts
    parts = []
    remainder = nu
    while remainder:
        m = target.gtarg(remainder)
        parts.append(m)
        remainder -= m
    return parts


def e2_from_rank(r: int, size: int, target: TargetSet) -> FvrOutput:
    """Steps of the generalized Elias procedure starting from MM = size and r."""
    remaining = size
    while True:
        m = target.gtarg(remaining)
        if r < m:
            return FvrOutput(r, m)
        remaining -= m
        r -= m


def e2_generate(x: Sequence[int], spec: ModelSpec, target: TargetSet,
                sync_state: bool = False) -> FvrOutput:
    """Generalized (greedy) Elias generator for a target set."""
    symbols, spec = _synchronize(x, spec, sync_state)
    return e2_from_rank(rank(symbols, spec), class_size(counts_of(symbols, spec)), target)


def e2_subclasses(t: TypeCounts, target: TargetSet) -> List[Tuple[int, int]]:
    """Rank intervals (start, size) into which E2 splits the class t."""
    intervals = []
    start = 0
    for m in greedy_decompose(class_size(t), target):
        intervals.append((start, m))
        start += m
    return intervals


def conditional_length(t: TypeCounts, target: TargetSet) -> float:
    """
    Expected log2 M given the type: |T|^-1 sum_i M_i log2 M_i.

    Equals log2|T| - H(q(T)) with q(T) = [M_i / |T|].
    """
    size = class_size(t)
    if size == 0:
        raise ValueError("conditional_length needs a nonempty class")
    if target.kind == 'integers':
        return math.log2(size)
    total = 0.0
    for m, multiplicity in Counter(greedy_decompose(size, target)).items():
        total += multiplicity * (m / size) * math.log2(m)
    return total


def expected_output_length_exact(params: MarkovParams, n: int,
                                 target: Optional[TargetSet] = None,
                                 scheme: str = 'E2') -> float:
    """
    Expected output length sum_T P(T) * Lambda(T) in bits.

    Args:
        params: Source parameters
        n: Block length
        target: Target set (ignored for E1)
        scheme: 'E1' or 'E2'
    """
    scheme = scheme.upper()
    if scheme not in ('E1', 'E2'):
        raise ConfigurationError(f"unknown FVR scheme {scheme!r}")
    target = target or TargetSet.integers()
    total = 0.0
    for t in all_types(params.spec, n):
        if scheme == 'E1' or target.kind == 'integers':
            length = math.log2(class_size(t))
        else:
            length = conditional_length(t, target)
        total += type_probability(params, t) * length
    return total


def make_fvr_scheme(name: str, spec: ModelSpec,
                    target: Optional[TargetSet] = None) -> Callable[[Tuple[int, ...]], FvrOutput]:
    """Callable x -> FvrOutput for 'E1' or 'E2'."""
    name = name.upper()
    if name == 'E1':
        return lambda x: e1_generate(x, spec)
    if name == 'E2':
        chosen = target or TargetSet.integers()
        return lambda x: e2_generate(x, spec, chosen)
    raise ConfigurationError(f"unknown FVR scheme {name!r}")
