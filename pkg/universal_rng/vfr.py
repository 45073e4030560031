"""
Variable-to-fixed random number generators.

A VFR reads symbols until the input hits a dictionary string and outputs an
integer uniform in [0, M). The dictionary is built greedily, level by level:
within each type class the surviving (not yet stopped) sequences are sorted
reverse-lexicographically and the first j_T * M of them are admitted, labeled
by their index mod M. Truncated at depth N, the generator fails on inputs that
never hit the dictionary.

Two constructions define the same generator:
- g1_construct builds the dictionary explicitly (desk-scale reference).
- g2_generate decides each step from type-class sizes alone, using
  |fail_{n-1}(T')| = |T'| mod M for every prefix type T'.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Tuple

from .exceptions import ConfigurationError, InputExhaustedError
from .markov_model import MarkovParams, ModelSpec, seq_probability_exact
from .type_classes import (TypeCounts, class_size, counts_of, iter_type_levels,
                           reverse_lex_key, subclass_size, type_log_probability,
                           typecut)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class VfrConfig:
    """
    Generator configuration.

    Args:
        spec: Model specification
        M: Output range (at least 2)
        N: Truncation depth; None for an untruncated generator
    """
    spec: ModelSpec
    M: int
    N: Optional[int] = None

    def __post_init__(self):
        if self.M < 2:
            raise ConfigurationError(f"M must be at least 2, got {self.M}")
        if self.N is not None and self.N < 1:
            raise ConfigurationError(f"N must be at least 1, got {self.N}")


@dataclass(frozen=True)
class ProfileEntry:
    dict_size: int
    fail_size: int


@dataclass
class DictProfile:
    """Per-level map from type to (dictionary size, failure size)."""
    spec: ModelSpec
    M: int
    levels: List[Dict[TypeCounts, ProfileEntry]] = field(default_factory=list)

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def fail_size(self, n: int, t: Optional[TypeCounts]) -> int:
        if t is None or n < 0 or n >= len(self.levels):
            return 0
        entry = self.levels[n].get(t)
        return 0 if entry is None else entry.fail_size


@dataclass(frozen=True)
class VfrResult:
    """Outcome of one run: r and the stop length, or failure at depth N."""
    r: Optional[int]
    length: int

    @property
    def failed(self) -> bool:
        return self.r is None

    def __str__(self) -> str:
        return f"FAIL {self.length}" if self.failed else f"{self.r} {self.length}"


# Admission policy: (n, type, surviving count, M) -> number of M-blocks to admit
AdmissionPolicy = Callable[[int, TypeCounts, int, int], int]


def greedy_policy(n: int, t: TypeCounts, surviving: int, m: int) -> int:
    return surviving // m


def deferring_policy(level: int, deferred: TypeCounts) -> AdmissionPolicy:
    """Greedy, except one M-block of `deferred` at `level` is held back."""
    def policy(n: int, t: TypeCounts, surviving: int, m: int) -> int:
        blocks = surviving // m
        if n == level and t == deferred and blocks > 0:
            return blocks - 1
        return blocks
    return policy


def build_profile(spec: ModelSpec, M: int, N: int,
                  policy: AdmissionPolicy = greedy_policy,
                  max_types: Optional[int] = None) -> DictProfile:
    """
    Type profile of a universal truncated VFR, by the level recursion.

    The surviving count of T at level n is sum_a |fail_{n-1}(typecut(T, a))|;
    the policy admits a multiple of M of them and the rest fail.
    """
    profile = DictProfile(spec, M)
    for n, level in enumerate(iter_type_levels(spec, N, max_types)):
        entries: Dict[TypeCounts, ProfileEntry] = {}
        for t in level:
            if n == 0:
                entries[t] = ProfileEntry(0, 1)
                continue
            surviving = sum(profile.fail_size(n - 1, typecut(t, (a,)))
                            for a in range(spec.alpha))
            blocks = policy(n, t, surviving, M)
            if blocks < 0 or blocks * M > surviving:
                raise ConfigurationError(
                    f"policy admitted {blocks} blocks of {M} from {surviving} survivors")
            entries[t] = ProfileEntry(blocks * M, surviving - blocks * M)
        profile.levels.append(entries)
    return profile


def _member_probability(params: MarkovParams, t: TypeCounts, table):
    """P(x) of any member of t; exact when the Fraction table is given."""
    if table is not None:
        prob = Fraction(1)
        for (s, a), c in t.counts:
            prob *= table[s][a] ** c
        return prob
    return 2.0 ** type_log_probability(params, t)


def profile_failure_levels(profile: DictProfile, params: MarkovParams,
                           exact: bool = False) -> List:
    """P(fail_n) for n = 0..depth under the given profile."""
    zero = Fraction(0) if exact else 0.0
    table = params.exact_cond() if exact else None
    out = []
    for level in profile.levels:
        total = zero
        for t, entry in level.items():
            if entry.fail_size:
                total += entry.fail_size * _member_probability(params, t, table)
        out.append(total)
    return out


def profile_expected_length(profile: DictProfile, params: MarkovParams, exact: bool = False):
    """Expected input length of the truncated VFR: sum_{n < N} P(fail_n)."""
    return sum(profile_failure_levels(profile, params, exact)[:-1],
               Fraction(0) if exact else 0.0)


def profile_failure_probability(profile: DictProfile, params: MarkovParams, exact: bool = False):
    return profile_failure_levels(profile, params, exact)[-1]


def iter_failure_levels(params: MarkovParams, M: int, N: int, exact: bool = False,
                        max_types: Optional[int] = None) -> Iterator[Tuple[int, object]]:
    """
    Yield (n, P(fail_n)) for n = 0..N under the greedy dictionary.

    Uses |fail_n(T)| = |T| mod M, so no profile needs to be kept.
    """
    zero = Fraction(0) if exact else 0.0
    table = params.exact_cond() if exact else None
    for n, level in enumerate(iter_type_levels(params.spec, N, max_types)):
        total = zero
        for t in level:
            remainder = class_size(t) % M
            if remainder:
                total += remainder * _member_probability(params, t, table)
        yield n, total


def expected_input_length_exact(params: MarkovParams, M: int, N: int, exact: bool = False,
                                max_types: Optional[int] = None):
    """
    Expected number of symbols read by the greedy TVFR of depth N.

    Sum over n < N and T of (|T| mod M) * P(x_T); a Fraction when exact.
    """
    total = Fraction(0) if exact else 0.0
    for n, prob in iter_failure_levels(params, M, N - 1, exact, max_types):
        total += prob
    return total


def failure_probability(params: MarkovParams, M: int, N: int, exact: bool = False,
                        max_types: Optional[int] = None):
    """P(fail_N) of the greedy TVFR."""
    prob = None
    for _, prob in iter_failure_levels(params, M, N, exact, max_types):
        pass
    return prob


@dataclass
class G1Dictionary:
    """
    Explicit greedy truncated dictionary.

    Attributes:
        config: Generator configuration (N required)
        leaves: Dictionary strings mapped to their output label
        fail_sets: Per level, type -> surviving members in reverse-lex order
        profile: Type profile of the dictionary
    """
    config: VfrConfig
    leaves: Dict[Tuple[int, ...], int]
    fail_sets: List[Dict[TypeCounts, Tuple[Tuple[int, ...], ...]]]
    profile: DictProfile

    def fail_members(self, n: int) -> set:
        return {x for members in self.fail_sets[n].values() for x in members}

    def lookup(self, stream: Iterable[int]) -> VfrResult:
        """Read symbols until a leaf is hit or depth N is reached."""
        prefix: List[int] = []
        for a in stream:
            prefix.append(int(a))
            label = self.leaves.get(tuple(prefix))
            if label is not None:
                return VfrResult(label, len(prefix))
            if len(prefix) == self.config.N:
                return VfrResult(None, self.config.N)
        raise InputExhaustedError(f"stream ended after {len(prefix)} symbols")

    def expected_length(self, params: MarkovParams) -> Fraction:
        """sum_leaves |leaf| P(leaf) + N P(fail_N), exactly."""
        table = params.exact_cond()
        total = Fraction(0)
        for leaf in self.leaves:
            total += len(leaf) * seq_probability_exact(params, leaf, table)
        for x in self.fail_members(self.config.N):
            total += self.config.N * seq_probability_exact(params, x, table)
        return total


def g1_construct(cfg: VfrConfig) -> G1Dictionary:
    """
    Greedy truncated dictionary built explicitly, level by level.

    Raises:
        ConfigurationError: if cfg has no truncation depth
    """
    if cfg.N is None:
        raise ConfigurationError("the explicit construction needs a truncation depth N")
    spec = cfg.spec
    empty = TypeCounts.empty(spec)
    fail_sets: List[Dict[TypeCounts, Tuple[Tuple[int, ...], ...]]] = [{empty: ((),)}]
    profile = DictProfile(spec, cfg.M, [{empty: ProfileEntry(0, 1)}])
    leaves: Dict[Tuple[int, ...], int] = {}
    for n in range(1, cfg.N + 1):
        groups: Dict[TypeCounts, List[Tuple[int, ...]]] = {}
        for members in fail_sets[-1].values():
            for y in members:
                for a in range(spec.alpha):
                    x = y + (a,)
                    groups.setdefault(counts_of(x, spec), []).append(x)
        level_fail = {}
        level_profile = {}
        for t, members in groups.items():
            members.sort(key=reverse_lex_key)
            admitted = (len(members) // cfg.M) * cfg.M
            for i, x in enumerate(members[:admitted]):
                leaves[x] = i % cfg.M
            if admitted < len(members):
                level_fail[t] = tuple(members[admitted:])
            level_profile[t] = ProfileEntry(admitted, len(members) - admitted)
        fail_sets.append(level_fail)
        profile.levels.append(level_profile)
        logger.debug("G1 level %d: %d leaves so far, %d failing types",
                     n, len(leaves), len(level_fail))
    return G1Dictionary(cfg, leaves, fail_sets, profile)


def g2_generate(stream: Iterable[int], cfg: VfrConfig, sync_state: bool = False) -> VfrResult:
    """
    Sequential greedy VFR.

    Reads one symbol at a time and keeps the index I_R of the input prefix
    among the surviving members of its type. Per-step cost is polynomial in n;
    class sizes of prefix types are memoized by class_size.

    Raises:
        InputExhaustedError: if the stream ends before a stop and N is None
        SymbolError: on an out-of-range symbol
    """
    spec = cfg.spec
    symbols = iter(stream)
    if sync_state and spec.k > 0:
        head = spec.validate_sequence(_take(symbols, spec.k))
        spec = spec.with_initial_state(head)
    padded = list(spec.s0)
    t = TypeCounts.empty(spec)
    index = 0
    n = 0
    while cfg.N is None or n < cfg.N:
        try:
            a = next(symbols)
        except StopIteration:
            raise InputExhaustedError(f"stream ended after {n} symbols without a stop") from None
        a, = spec.validate_sequence((a,))
        padded.append(a)
        n += 1
        t = t.extend(a)
        fails = [subclass_size(typecut(t, (b,))) % cfg.M for b in range(spec.alpha)]
        # padded[n - 1] is x_{n-k}
        index = sum(fails[:padded[n - 1]]) + index
        admitted = (sum(fails) // cfg.M) * cfg.M
        if index < admitted:
            return VfrResult(index % cfg.M, n)
        index -= admitted
    return VfrResult(None, n)


def _take(symbols: Iterator[int], count: int) -> Tuple[int, ...]:
    head = []
    for _ in range(count):
        try:
            head.append(next(symbols))
        except StopIteration:
            raise InputExhaustedError(f"sync-state mode needs {count} leading symbols") from None
    return tuple(head)
