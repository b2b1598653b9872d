"""Quantized quadratic sieve executed on the sparse simulator.

Register layout:

- ``R1`` candidate primes ``p <= B``; ``R2`` Euler criterion ``n^((p-1)/2) mod p``.
- ``R3`` sieve sequence ``x``; ``R4`` ``x^2 - n`` divided down in place; ``R5`` one
  exponent slot per factor-base prime.

Steps 1 and 2 manipulate states; step 3 hands the smooth set to the classical linear
algebra in :mod:`qsieve.classical_qs`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from qsieve.classical_qs import (
    FactorBase,
    FactorizationFailed,
    FactorResult,
    InsufficientRelations,
    Relation,
    SieveParams,
    TrivialDependencies,
    default_params,
    escalate,
    factor_from_relations,
    sieve_interval,
    split_degenerate,
)
from qsieve.config import SieveConfig, load_config
from qsieve.errors import ErrorCode, QsieveError
from qsieve.numtheory import sieve_of_eratosthenes
from qsieve.qsim import (
    Combine,
    MeasurementRecord,
    PostSelect,
    QuantumState,
    Qubits,
    RegisterSpec,
    Sample,
    StateSnapshot,
    apply_oracle,
    born_distribution,
    init_state,
    joint_support,
    load_uniform,
    map_register,
    partial_measure,
    qft,
    register_support,
    snapshot,
    tensor,
)

logger = logging.getLogger(__name__)

R1, R2, R3, R4, R5 = "R1", "R2", "R3", "R4", "R5"

STEP_ORDER = ("1", "1.1", "1.2", "1.3", "2", "2.1", "2.3", "2.4", "2.5", "3")
QFT_SKIPPED_NOTE = "step 2.3-qft: skipped (under-specified)"
MAX_SAMPLE_DRAWS = 1000

_ESCALATING_CODES = {ErrorCode.EMPTY_FACTOR_BASE, ErrorCode.NO_SMOOTH_VALUES}


class QuantumSieveError(QsieveError):
    code = ErrorCode.FACTORIZATION_FAILED


# ---------------------------------------------------------------------------
# Trace
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class TraceStep:
    label: str
    snapshot: StateSnapshot | None = None
    measurements: tuple[MeasurementRecord, ...] = ()
    probability: float | None = None
    note: str | None = None


@dataclass
class PipelineTrace:
    """Ordered step records of one pipeline run."""

    steps: list[TraceStep] = field(default_factory=list)
    result: FactorResult | None = None
    smooth: SmoothSet | None = None

    @property
    def labels(self) -> list[str]:
        return [s.label for s in self.steps]

    def record(self, step: TraceStep) -> None:
        if step.label not in STEP_ORDER:
            raise QuantumSieveError(f"unknown trace step {step.label!r}", ErrorCode.INVALID_TRACE)
        if self.steps and STEP_ORDER.index(step.label) <= STEP_ORDER.index(self.steps[-1].label):
            raise QuantumSieveError(
                f"trace step {step.label} recorded after {self.steps[-1].label}",
                ErrorCode.INVALID_TRACE,
            )
        self.steps.append(step)

    def extend(self, other: PipelineTrace) -> None:
        for step in other.steps:
            self.record(step)

    def step(self, label: str) -> TraceStep:
        for s in self.steps:
            if s.label == label:
                return s
        raise KeyError(label)


# ---------------------------------------------------------------------------
# Smooth set
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class SmoothEntry:
    x: int
    parity: tuple[int, ...]
    exponents: tuple[int, ...]


@dataclass(frozen=True, slots=True)
class SmoothSet:
    entries: tuple[SmoothEntry, ...]
    factor_base: FactorBase

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def xs(self) -> list[int]:
        return [e.x for e in self.entries]

    def relations(self) -> list[Relation]:
        n = self.factor_base.n
        return [Relation(x=e.x, value=e.x * e.x - n, exponents=e.exponents) for e in self.entries]


# ---------------------------------------------------------------------------
# Measurement policy
# ---------------------------------------------------------------------------


def _measure_one(
    state: QuantumState, register: str, rng: np.random.Generator | None
) -> tuple[QuantumState, tuple[MeasurementRecord, ...]]:
    """Post-select 1, or sample until 1 comes up when ``rng`` is given."""
    if rng is None:
        collapsed, record = partial_measure(state, register, PostSelect(1))
        return collapsed, (record,)
    records: list[MeasurementRecord] = []
    for _ in range(MAX_SAMPLE_DRAWS):
        seed = int(rng.integers(0, 2**63))
        collapsed, record = partial_measure(state, register, Sample(seed))
        records.append(record)
        if record.value == 1:
            return collapsed, tuple(records)
    raise QuantumSieveError(
        f"impossible outcome: {register} never measured 1 in {MAX_SAMPLE_DRAWS} draws",
        ErrorCode.IMPOSSIBLE_OUTCOME,
    )


def _width(value: int) -> int:
    return max(1, value.bit_length())


def _snap(state: QuantumState, config: SieveConfig) -> StateSnapshot:
    return snapshot(state, config.trace_term_cap)


# ---------------------------------------------------------------------------
# Step 1: factor base
# ---------------------------------------------------------------------------


def _init_prime_registers(bound: int) -> QuantumState:
    return init_state(
        [RegisterSpec(R1, Qubits(_width(bound))), RegisterSpec(R2, Qubits(_width(bound)))]
    )


def step1_prime_superposition(bound: int) -> QuantumState:
    """``|psi_p>``: R1 uniform over primes ``<= bound``, R2 zero."""
    primes = sieve_of_eratosthenes(bound)
    if not primes:
        raise QuantumSieveError(f"no primes <= {bound}", ErrorCode.INVALID_INPUT)
    return load_uniform(_init_prime_registers(bound), R1, primes)


def euler_criterion(n: int, p: int) -> int:
    """``n^((p-1)/2) mod p`` for odd p; 0 for ``p = 2``, which is never a measured survivor."""
    if p == 2:
        return 0
    return pow(n, (p - 1) // 2, p)


def _apply_legendre_oracle(state: QuantumState, n: int) -> QuantumState:
    def oracle(p: object) -> int:
        assert isinstance(p, int)
        return euler_criterion(n, p)

    return apply_oracle(state, oracle, [R1], R2)


def _factor_base_from_state(state: QuantumState, n: int) -> FactorBase:
    odd = sorted(p for p in register_support(state, R1) if isinstance(p, int) and p > 2)
    return FactorBase(primes=(2, *odd), n=n)


def _measure_legendre(
    state: QuantumState, n: int, rng: np.random.Generator | None
) -> tuple[QuantumState, FactorBase, float, tuple[MeasurementRecord, ...]]:
    probability = born_distribution(state, R2).get(1, 0.0)
    if probability <= 0.0:
        raise QuantumSieveError(
            f"empty factor base for n={n}: no odd prime has Legendre symbol 1",
            ErrorCode.EMPTY_FACTOR_BASE,
        )
    collapsed, records = _measure_one(state, R2, rng)
    logger.debug("Step 1.3 pr(R2=1) = %.6f", probability)
    return collapsed, _factor_base_from_state(collapsed, n), probability, records


def step1_legendre_and_measure(
    state: QuantumState, n: int, *, rng: np.random.Generator | None = None
) -> tuple[QuantumState, FactorBase]:
    """Apply the Euler-criterion oracle, keep R2 = 1, read the factor base off R1."""
    collapsed, fb, _, _ = _measure_legendre(_apply_legendre_oracle(state, n), n, rng)
    return collapsed, fb


# ---------------------------------------------------------------------------
# Step 2: smooth values
# ---------------------------------------------------------------------------


def sequence_load_path(a: int, b: int) -> str:
    """``"qft"`` when the interval size is a power of two, else ``"direct"``."""
    size = b - a + 1
    return "qft" if size & (size - 1) == 0 else "direct"


def _load_sequence(n: int, a: int, b: int, slots: int) -> tuple[QuantumState, str]:
    if a >= b:
        raise QuantumSieveError(f"sequence needs a < b, got [{a}, {b}]", ErrorCode.INVALID_INPUT)
    top = b * b - n
    specs = [
        RegisterSpec(R3, Qubits(_width(b))),
        RegisterSpec(R4, Qubits(_width(top))),
        RegisterSpec(R5, Qubits(_width(_width(top)), slots=slots)),
    ]
    state = init_state(specs)
    # run_pipeline intervals hold 2M + 1 points, so the QFT path is only taken by direct
    # callers of step2_sequence_superposition with a power-of-two interval.
    path = sequence_load_path(a, b)
    if path == "qft":
        state = qft(state, R3, width=(b - a + 1).bit_length() - 1)

        def shift(x: object) -> int:
            assert isinstance(x, int)
            return x + a

        state = map_register(state, R3, shift)
    else:
        state = load_uniform(state, R3, range(a, b + 1))
    return state, path


def _store_values(state: QuantumState, n: int) -> QuantumState:
    def square_minus_n(x: object) -> int:
        assert isinstance(x, int)
        return x * x - n

    return apply_oracle(state, square_minus_n, [R3], R4)


def step2_sequence_superposition(n: int, a: int, b: int, slots: int) -> QuantumState:
    """``|psi_3>``: R3 uniform over ``[a, b]``, R4 = ``x^2 - n``, R5 zero."""
    state, _ = _load_sequence(n, a, b, slots)
    return _store_values(state, n)


def _divide_out(state: QuantumState, fb: FactorBase) -> QuantumState:
    """Divide R4 by every factor-base prime to exhaustion, counting into R5."""
    slots = len(fb)
    zeros = (0,) * slots
    for index, p in enumerate(fb.primes):
        unit = tuple(1 if i == index else 0 for i in range(slots))

        def count(v: object, p: int = p, unit: tuple[int, ...] = unit) -> tuple[int, ...]:
            assert isinstance(v, int)
            return unit if v % p == 0 else zeros

        def divide(v: object, p: int = p) -> int:
            assert isinstance(v, int)
            return v // p if v % p == 0 else v

        while any(isinstance(v, int) and v % p == 0 for v in register_support(state, R4)):
            state = apply_oracle(state, count, [R4], R5, Combine.ACCUMULATE)
            state = map_register(state, R4, divide)
    return state


def _mod2(e: object) -> tuple[int, ...]:
    assert isinstance(e, tuple)
    return tuple(v & 1 for v in e)


def step2_divide_and_measure(
    seq: QuantumState,
    fb_state: QuantumState,
    n: int,
    *,
    rng: np.random.Generator | None = None,
    config: SieveConfig | None = None,
) -> tuple[SmoothSet, PipelineTrace]:
    """Tensor, divide, keep R4 = 1, reduce R5 mod 2 and read out the smooth x."""
    config = config or load_config()
    fb = _factor_base_from_state(fb_state, n)
    r5 = seq.spec(R5).domain
    if not isinstance(r5, Qubits) or r5.slots != len(fb):
        raise QuantumSieveError(
            f"inconsistent factor base: R5 has {getattr(r5, 'slots', 1)} slots, |fb|={len(fb)}",
            ErrorCode.INCONSISTENT_FACTOR_BASE,
        )
    fragment = PipelineTrace()

    state = tensor(fb_state, seq)
    fragment.record(TraceStep("2.3", _snap(state, config), note=QFT_SKIPPED_NOTE))

    state = _divide_out(state, fb)
    fragment.record(TraceStep("2.4", _snap(state, config)))

    probability = born_distribution(state, R4).get(1, 0.0)
    if probability <= 0.0:
        raise QuantumSieveError(
            f"no smooth values in interval for n={n} over |fb|={len(fb)}",
            ErrorCode.NO_SMOOTH_VALUES,
        )
    state, records = _measure_one(state, R4, rng)
    full = sorted(joint_support(state, [R3, R5]))
    state = map_register(state, R5, _mod2)
    fragment.record(
        TraceStep("2.5", _snap(state, config), records, probability, note="R5 reduced mod 2")
    )
    logger.info("Step 2.5 kept %d smooth values (pr=%.6f)", len(full), probability)

    entries = []
    for x, exponents in full:
        assert isinstance(x, int) and isinstance(exponents, tuple)
        entries.append(SmoothEntry(x=x, parity=_mod2(exponents), exponents=exponents))
    return SmoothSet(entries=tuple(entries), factor_base=fb), fragment


# ---------------------------------------------------------------------------
# Step 3 and the pipeline
# ---------------------------------------------------------------------------


def step3_classical_postprocess(smooth: SmoothSet, n: int) -> FactorResult:
    """Gaussian elimination and gcd extraction on the measured smooth set."""
    if len(smooth) < 2:
        raise InsufficientRelations(
            f"insufficient relations: {len(smooth)} smooth values", found=len(smooth)
        )
    return factor_from_relations(smooth.relations(), smooth.factor_base, n)


def _run_once(
    params: SieveParams, config: SieveConfig, rng: np.random.Generator | None
) -> tuple[FactorResult, PipelineTrace]:
    n = params.n
    trace = PipelineTrace()
    trace.record(TraceStep("1", _snap(_init_prime_registers(params.smoothness_bound), config)))

    state = step1_prime_superposition(params.smoothness_bound)
    trace.record(TraceStep("1.1", _snap(state, config)))
    state = _apply_legendre_oracle(state, n)
    trace.record(TraceStep("1.2", _snap(state, config)))
    fb_state, fb, pr_fb, records = _measure_legendre(state, n, rng)
    trace.record(TraceStep("1.3", _snap(fb_state, config), records, pr_fb))

    a, b = sieve_interval(params)
    seq, path = _load_sequence(n, a, b, len(fb))
    trace.record(TraceStep("2", _snap(seq, config), note=f"sequence loaded via {path}"))
    seq = _store_values(seq, n)
    trace.record(TraceStep("2.1", _snap(seq, config)))

    smooth, fragment = step2_divide_and_measure(seq, fb_state, n, rng=rng, config=config)
    trace.extend(fragment)
    trace.smooth = smooth

    result = replace(step3_classical_postprocess(smooth, n), params=params)
    trace.record(
        TraceStep("3", note=f"factors {result.f1} x {result.f2} from {len(smooth)} relations")
    )
    trace.result = result
    return result, trace


def run_pipeline(
    n: int,
    params: SieveParams | None = None,
    *,
    config: SieveConfig | None = None,
    seed: int | None = None,
) -> tuple[FactorResult, PipelineTrace]:
    """Steps 1 to 3 with the classical escalation policy.

    ``seed`` switches measurements from post-selection to seeded sampling.
    """
    config = config or load_config()
    shortcut = split_degenerate(n, config)
    if shortcut is not None:
        return shortcut, PipelineTrace(result=shortcut)
    params = params or default_params(
        n, config=config, max_half_width=config.quantum_max_half_width
    )
    rng = np.random.default_rng(seed) if seed is not None else None

    history: list[str] = []
    for attempt in range(config.max_retries + 1):
        try:
            result, trace = _run_once(params, config, rng)
        except (InsufficientRelations, TrivialDependencies, QuantumSieveError) as exc:
            if isinstance(exc, QuantumSieveError) and exc.code not in _ESCALATING_CODES:
                raise
            history.append(f"B={params.smoothness_bound} M={params.half_width}: {exc.detail}")
            logger.info("Quantum attempt %d for n=%d failed: %s", attempt + 1, n, exc.detail)
            if attempt == config.max_retries:
                break
            params = escalate(params, attempt + 1, config)
            continue
        result = replace(result, history=tuple(history))
        trace.result = result
        return result, trace

    raise FactorizationFailed(
        f"factorization failed for n={n} after {len(history)} attempts", history
    )
