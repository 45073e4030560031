"""
Runtime configuration.

Settings are read from environment variables so that the same code runs
unchanged from the command line, the test-suite and batch jobs.
"""

import os
import logging
from dataclasses import dataclass, replace
from typing import Optional

logger = logging.getLogger(__name__)

# Bit generators accepted by numpy.random that we allow in reports
SUPPORTED_PRNGS = ('PCG64', 'Philox')


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None or not raw.strip():
        return default
    try:
        return int(raw, 0)
    except ValueError:
        logger.warning(f"Ignoring non-integer {name}={raw!r}, using {default}")
        return default


@dataclass(frozen=True)
class Settings:
    """
    Library-wide knobs.

    Attributes:
        brute_force_bound: Maximum number of sequences an exhaustive
            enumeration may visit.
        max_types: Maximum number of type classes generated for one length.
        prng: Name of the numpy bit generator used for sampling.
        workers: Worker processes for Monte Carlo fan-out.
        selftest_budget: Soft runtime budget of the self-test, in seconds.
        log_level: Root logging level name.
        log_file: Optional path of a rotating log file.
    """
    brute_force_bound: int = 2 ** 22
    max_types: int = 2_000_000
    prng: str = 'PCG64'
    workers: int = 1
    selftest_budget: float = 300.0
    log_level: str = 'INFO'
    log_file: str = ''

    @classmethod
    def from_env(cls) -> 'Settings':
        """Build settings from the process environment."""
        prng = os.environ.get('UNIRAND_PRNG', cls.prng)
        if prng not in SUPPORTED_PRNGS:
            logger.warning(f"Unknown UNIRAND_PRNG={prng!r}, falling back to {cls.prng}")
            prng = cls.prng
        return cls(
            brute_force_bound=_env_int('UNIRAND_BRUTE_FORCE_BOUND', cls.brute_force_bound),
            max_types=_env_int('UNIRAND_MAX_TYPES', cls.max_types),
            prng=prng,
            workers=max(1, _env_int('UNIRAND_WORKERS', cls.workers)),
            selftest_budget=float(_env_int('UNIRAND_SELFTEST_BUDGET', int(cls.selftest_budget))),
            log_level=os.environ.get('LOG_LEVEL', cls.log_level).upper(),
            log_file=os.environ.get('UNIRAND_LOG_FILE', cls.log_file),
        )

    def with_overrides(self, **changes) -> 'Settings':
        """Return a copy with the non-None keyword arguments applied."""
        return replace(self, **{k: v for k, v in changes.items() if v is not None})


_active: Optional[Settings] = None


def get_settings() -> Settings:
    """Process-wide settings, read once from the environment."""
    global _active
    if _active is None:
        _active = Settings.from_env()
    return _active


def use_settings(settings: Optional[Settings]) -> None:
    """Install settings for the process; None re-reads the environment on next use."""
    global _active
    _active = settings
