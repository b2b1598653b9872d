"""Shared fixtures for acceptance tests."""

from __future__ import annotations

import numpy as np
import pytest
from qsieve.config import SieveConfig


@pytest.fixture
def config() -> SieveConfig:
    return SieveConfig()


@pytest.fixture
def semiprime_rng() -> np.random.Generator:
    """Fixed stream so the sampled semiprimes are the same on every run."""
    return np.random.default_rng(15347)
