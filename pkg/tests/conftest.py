"""Shared fixtures for the universal RNG test-suite."""

import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from universal_rng.config import use_settings  # noqa: E402
from universal_rng.markov_model import MarkovParams  # noqa: E402


@pytest.fixture(autouse=True)
def fresh_settings(monkeypatch):
    """Each test reads settings from a clean environment."""
    for name in ('UNIRAND_BRUTE_FORCE_BOUND', 'UNIRAND_MAX_TYPES', 'UNIRAND_PRNG',
                 'UNIRAND_WORKERS', 'UNIRAND_SELFTEST_BUDGET', 'UNIRAND_LOG_FILE'):
        monkeypatch.delenv(name, raising=False)
    use_settings(None)
    yield
    use_settings(None)


@pytest.fixture
def iid_p03():
    """Binary memoryless source with P(0) = 0.3."""
    return MarkovParams.iid([0.3, 0.7])


@pytest.fixture
def dyadic_iid():
    """Binary memoryless source whose probabilities are exact binary fractions."""
    return MarkovParams.iid([0.25, 0.75])


@pytest.fixture
def dyadic_markov1():
    """First-order binary source with exact binary-fraction parameters."""
    return MarkovParams.from_rows([[0.5, 0.5], [0.25, 0.75]], k=1)


@pytest.fixture
def markov1():
    return MarkovParams.from_rows([[0.8, 0.2], [0.35, 0.65]], k=1)
