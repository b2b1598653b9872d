"""Shared fixtures for qsieve unit tests."""

from __future__ import annotations

import math

import numpy as np
import pytest
from qsieve.classical_qs import FactorBase, SieveParams, build_factor_base
from qsieve.config import SieveConfig

EXAMPLE_N = 15347
EXAMPLE_FACTORS = (103, 149)


@pytest.fixture
def config() -> SieveConfig:
    return SieveConfig()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def example_fb() -> FactorBase:
    return build_factor_base(EXAMPLE_N, 30)


@pytest.fixture
def example_params() -> SieveParams:
    """B = 30 over [124, 636]."""
    return SieveParams.for_bounds(EXAMPLE_N, 30, 256)


def naive_smooth_exponents(value: int, primes: tuple[int, ...]) -> tuple[int, ...] | None:
    """Trial-divide by ``primes``; ``None`` when a cofactor remains."""
    exponents = []
    for p in primes:
        e = 0
        while value % p == 0:
            value //= p
            e += 1
        exponents.append(e)
    return tuple(exponents) if value == 1 else None


def product_of_powers(primes: tuple[int, ...], exponents: tuple[int, ...]) -> int:
    return math.prod(p**e for p, e in zip(primes, exponents, strict=True))
