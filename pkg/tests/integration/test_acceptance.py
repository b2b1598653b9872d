"""Acceptance runs: worked example, pipeline equivalence and classical sweep."""

from __future__ import annotations

import statistics
import time
from collections.abc import Callable

import numpy as np
import pytest
from qsieve.bench import random_semiprime
from qsieve.classical_qs import (
    FactorResult,
    SieveError,
    SieveParams,
    build_factor_base,
    collect_relations,
    factor,
    factor_from_relations,
)
from qsieve.config import SieveConfig
from qsieve.errors import ErrorCode
from qsieve.numtheory import isqrt_ceil
from qsieve.quantum_qs import (
    STEP_ORDER,
    QuantumSieveError,
    SmoothSet,
    run_pipeline,
    step1_legendre_and_measure,
    step1_prime_superposition,
    step2_divide_and_measure,
    step2_sequence_superposition,
    step3_classical_postprocess,
)
from sympy import nextprime

EXAMPLE_N = 15347
EQUIVALENCE_BOUND = 100
EQUIVALENCE_HALF_WIDTH = 128


def _random_prime_pair(rng: np.random.Generator) -> tuple[int, int]:
    while True:
        p, q = (int(nextprime(int(v))) for v in rng.integers(1000, 99_990, size=2))
        if p != q:
            return min(p, q), max(p, q)


def _quantum_smooth_set(
    n: int, bound: int, half_width: int, config: SieveConfig
) -> SmoothSet | None:
    """Steps 1 and 2 on their own; ``None`` when nothing survives a measurement."""
    try:
        fb_state, fb = step1_legendre_and_measure(step1_prime_superposition(bound), n)
        a = isqrt_ceil(n)
        seq = step2_sequence_superposition(n, a, a + 2 * half_width, len(fb))
        smooth, _ = step2_divide_and_measure(seq, fb_state, n, config=config)
    except QuantumSieveError as exc:
        if exc.code in (ErrorCode.EMPTY_FACTOR_BASE, ErrorCode.NO_SMOOTH_VALUES):
            return None
        raise
    return smooth


def _outcome(call: Callable[..., FactorResult], *args: object) -> FactorResult | str:
    """The result, or the error code when the post-processing gives up."""
    try:
        return call(*args)
    except SieveError as exc:
        return str(exc.code)


class TestWorkedExample:
    """n = 15347 with B = 30 through both pipelines."""

    def test_reproduces_split(self, config: SieveConfig) -> None:
        params = SieveParams.for_bounds(EXAMPLE_N, 30, 256)
        start = time.perf_counter()
        result, trace = run_pipeline(EXAMPLE_N, params, config=config)
        elapsed = time.perf_counter() - start

        assert elapsed < 5.0
        assert (result.f1, result.f2) == (103, 149)
        assert trace.labels == list(STEP_ORDER)
        assert trace.step("1.3").probability == pytest.approx(0.3)
        assert factor(EXAMPLE_N, params, config=config).f1 == 103


class TestPipelineEquivalence:
    """Quantum smooth sets match exhaustive classical sieving."""

    def test_fifty_semiprimes(
        self, config: SieveConfig, semiprime_rng: np.random.Generator
    ) -> None:
        for _ in range(50):
            p, q = _random_prime_pair(semiprime_rng)
            n = p * q
            params = SieveParams.for_bounds(n, EQUIVALENCE_BOUND, EQUIVALENCE_HALF_WIDTH)
            fb = build_factor_base(n, EQUIVALENCE_BOUND)
            classical = collect_relations(params, fb, exhaustive=True, minimum=0, config=config)
            smooth = _quantum_smooth_set(n, EQUIVALENCE_BOUND, EQUIVALENCE_HALF_WIDTH, config)
            if smooth is None:
                assert classical == [], f"n={n}"
                continue
            assert smooth.xs == [r.x for r in classical], f"n={n}"
            assert [e.exponents for e in smooth.entries] == [r.exponents for r in classical]
            if len(classical) < 2:
                continue
            quantum_outcome = _outcome(step3_classical_postprocess, smooth, n)
            classical_outcome = _outcome(factor_from_relations, classical, fb, n)
            assert quantum_outcome == classical_outcome, f"n={n}"
            if isinstance(classical_outcome, FactorResult):
                assert {classical_outcome.f1, classical_outcome.f2} == {p, q}


@pytest.mark.slow
class TestClassicalSweep:
    """Seeded semiprimes below 2^64."""

    def test_hundred_semiprimes(
        self, config: SieveConfig, semiprime_rng: np.random.Generator
    ) -> None:
        sizes = [20 + (i * 44) // 99 for i in range(100)]
        times: list[float] = []
        for bits in sizes:
            n, p, q = random_semiprime(bits, semiprime_rng)
            start = time.perf_counter()
            result = factor(n, config=config)
            times.append(time.perf_counter() - start)
            assert (result.f1, result.f2) == (p, q), f"n={n}"
        assert max(sizes) == 64
        print(f"classical sweep median {statistics.median(times) * 1000:.1f} ms")
