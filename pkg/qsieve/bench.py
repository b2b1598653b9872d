"""Benchmark harness: seeded random semiprimes timed through the classical sieve."""

from __future__ import annotations

import logging
import time
from collections.abc import Callable, Sequence
from dataclasses import asdict, dataclass

import numpy as np
from sympy import isprime

from qsieve.classical_qs import FactorResult, factor
from qsieve.config import SieveConfig, load_config
from qsieve.errors import ErrorCode, QsieveError

logger = logging.getLogger(__name__)

MIN_BITS = 8


class BenchError(QsieveError, ValueError):
    """Raised for malformed size ranges or repetition counts."""

    code = ErrorCode.INVALID_INPUT


class BenchMismatch(QsieveError):
    """The sieve returned factors other than the generated primes."""

    code = ErrorCode.FACTORIZATION_FAILED


@dataclass(frozen=True, slots=True)
class BenchRow:
    bits: int
    samples: int
    median_ms: float
    p95_ms: float
    relations: int
    smoothness_bound: int
    half_width: int

    def to_dict(self, *, timing: bool = True) -> dict[str, float | int]:
        row = asdict(self)
        if not timing:
            del row["median_ms"], row["p95_ms"]
        return row


def parse_size_range(raw: str) -> list[int]:
    """``"32:48:8"`` -> ``[32, 40, 48]``; a single number is one size."""
    parts = raw.split(":")
    try:
        numbers = [int(p) for p in parts]
    except ValueError as exc:
        raise BenchError(f"size range must be START[:STOP[:STEP]], got {raw!r}") from exc
    if len(numbers) > 3:
        raise BenchError(f"size range must be START[:STOP[:STEP]], got {raw!r}")
    start = numbers[0]
    stop = numbers[1] if len(numbers) > 1 else start
    step = numbers[2] if len(numbers) > 2 else 8
    if start < MIN_BITS or stop < start or step < 1:
        raise BenchError(
            f"invalid size range {raw!r}: need {MIN_BITS} <= start <= stop and step >= 1"
        )
    return list(range(start, stop + 1, step))


def _random_below(bound: int, rng: np.random.Generator) -> int:
    nbytes = (bound.bit_length() + 7) // 8 + 8
    return int.from_bytes(rng.bytes(nbytes), "big") % bound


def random_prime(bits: int, rng: np.random.Generator) -> int:
    """Uniform-ish prime with exactly ``bits`` bits."""
    lo = 1 << (bits - 1)
    while True:
        candidate = (lo + _random_below(lo, rng)) | 1
        if candidate.bit_length() == bits and isprime(candidate):
            return candidate


def random_semiprime(bits: int, rng: np.random.Generator) -> tuple[int, int, int]:
    """``(n, p, q)`` with distinct primes ``p < q`` and ``n`` exactly ``bits`` bits."""
    if bits < MIN_BITS:
        raise BenchError(f"semiprimes need at least {MIN_BITS} bits, got {bits}")
    low = bits // 2
    while True:
        p = random_prime(low, rng)
        q = random_prime(bits - low, rng)
        n = p * q
        if p != q and n.bit_length() == bits:
            p, q = sorted((p, q))
            return n, p, q


def run_bench(
    sizes: Sequence[int],
    repetitions: int,
    seed: int,
    *,
    config: SieveConfig | None = None,
    on_sample: Callable[[int, int], None] | None = None,
) -> list[BenchRow]:
    """Time :func:`qsieve.classical_qs.factor` on ``repetitions`` semiprimes per size."""
    if repetitions < 1:
        raise BenchError(f"repetitions must be >= 1, got {repetitions}")
    config = config or load_config()
    rng = np.random.default_rng(seed)
    rows: list[BenchRow] = []

    for bits in sizes:
        times: list[float] = []
        results: list[FactorResult] = []
        for rep in range(repetitions):
            n, p, q = random_semiprime(bits, rng)
            start = time.perf_counter()
            result = factor(n, config=config)
            times.append((time.perf_counter() - start) * 1000.0)
            if {result.f1, result.f2} != {p, q}:
                raise BenchMismatch(
                    f"factoring {n} returned {result.f1} x {result.f2}, expected {p} x {q}"
                )
            results.append(result)
            if on_sample is not None:
                on_sample(bits, rep)

        samples = np.array(times)
        params = [r.params for r in results if r.params is not None]
        row = BenchRow(
            bits=bits,
            samples=repetitions,
            median_ms=round(float(np.median(samples)), 3),
            p95_ms=round(float(np.percentile(samples, 95)), 3),
            relations=int(np.median([r.relations for r in results])),
            smoothness_bound=max((s.smoothness_bound for s in params), default=0),
            half_width=max((s.half_width for s in params), default=0),
        )
        rows.append(row)
        logger.info("Bench %d bits: median %.3f ms over %d samples", bits, row.median_ms, rep + 1)
    return rows
