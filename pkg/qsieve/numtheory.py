"""Exact arbitrary-precision number theory used by both pipelines."""

from __future__ import annotations

import math
from enum import IntEnum
from functools import lru_cache

import numpy as np
from sympy import perfect_power, sqrt_mod

from qsieve.errors import ErrorCode, QsieveError


class NumberTheoryError(QsieveError, ValueError):
    """Raised when a primitive is called outside its domain."""


class LegendreValue(IntEnum):
    NONRESIDUE = -1
    ZERO = 0
    RESIDUE = 1


@lru_cache(maxsize=16)
def _primes_upto(bound: int) -> tuple[int, ...]:
    is_prime = np.ones(bound + 1, dtype=bool)
    is_prime[:2] = False
    for p in range(2, math.isqrt(bound) + 1):
        if is_prime[p]:
            is_prime[p * p :: p] = False
    return tuple(int(p) for p in np.flatnonzero(is_prime))


def sieve_of_eratosthenes(bound: int) -> list[int]:
    """Return every prime ``p <= bound`` in ascending order (empty below 2)."""
    if bound < 2:
        return []
    return list(_primes_upto(bound))


def mod_pow(base: int, exp: int, modulus: int) -> int:
    """``base ** exp % modulus`` by square-and-multiply.

    Raises:
        NumberTheoryError: If ``modulus`` is zero.
    """
    if modulus == 0:
        raise NumberTheoryError("zero modulus", ErrorCode.ZERO_MODULUS)
    if modulus < 0 or exp < 0:
        raise NumberTheoryError(
            f"mod_pow needs non-negative exponent and modulus, got exp={exp}, modulus={modulus}",
            ErrorCode.INVALID_INPUT,
        )
    return pow(base, exp, modulus)


def legendre_symbol(a: int, p: int) -> LegendreValue:
    """Legendre symbol ``(a/p)`` via Euler's criterion ``a^((p-1)/2) mod p``.

    ``p`` is assumed prime; only oddness and size are checked.
    """
    if p < 3 or p % 2 == 0:
        raise NumberTheoryError(f"invalid odd prime: {p}", ErrorCode.INVALID_ODD_PRIME)
    r = mod_pow(a % p, (p - 1) // 2, p)
    if r == 0:
        return LegendreValue.ZERO
    if r == p - 1:
        return LegendreValue.NONRESIDUE
    return LegendreValue.RESIDUE


def gcd(a: int, b: int) -> int:
    """Greatest common divisor; ``gcd(a, 0) == a``."""
    return math.gcd(a, b)


def isqrt_ceil(n: int) -> int:
    """Smallest ``s`` with ``s * s >= n``, exact at any size."""
    if n < 0:
        raise NumberTheoryError(f"isqrt_ceil of negative {n}", ErrorCode.INVALID_INPUT)
    s = math.isqrt(n)
    return s if s * s == n else s + 1


def is_perfect_square(n: int) -> bool:
    return n >= 0 and math.isqrt(n) ** 2 == n


def perfect_power_root(n: int) -> tuple[int, int] | None:
    """``(r, k)`` with ``r ** k == n`` and ``k >= 2`` maximal, or ``None``."""
    if n < 4:
        return None
    found = perfect_power(n)
    if not found:
        return None
    root, exponent = found
    return int(root), int(exponent)


def modular_sqrts(a: int, p: int) -> tuple[int, ...]:
    """All roots ``r`` in ``[0, p)`` of ``r^2 = a (mod p)``, ascending."""
    roots = sqrt_mod(a % p, p, all_roots=True) or []
    return tuple(sorted(int(r) for r in roots))


def is_prime_by_trial_division(n: int, limit: int) -> bool | None:
    """Deterministic primality certificate by trial division.

    Returns ``None`` (undecided) when ``isqrt(n)`` exceeds ``limit``.
    """
    if n < 2:
        return False
    root = math.isqrt(n)
    if root > limit:
        return None
    return all(n % p for p in sieve_of_eratosthenes(root) if p < n)
