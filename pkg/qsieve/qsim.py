"""Sparse multi-register state-vector simulator.

States map value tuples (one value per register) to complex amplitudes. Internally the map
is kept factorised into disjoint entangled blocks; an operation that reads or writes
registers from several blocks merges them first. Every operation returns a new state.
"""

from __future__ import annotations

import cmath
import heapq
import logging
import math
from collections import defaultdict
from collections.abc import Callable, Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass
from enum import StrEnum
from itertools import product
from operator import itemgetter

import numpy as np

from qsieve.errors import ErrorCode, QsieveError

logger = logging.getLogger(__name__)

PRUNE_THRESHOLD = 1e-15
NORM_TOLERANCE = 1e-9
MIN_POST_SELECT_PROBABILITY = 1e-12

Value = int | tuple[int, ...]
Key = tuple[Value, ...]
Amplitudes = dict[Key, complex]


class StateError(QsieveError):
    code = ErrorCode.INVALID_STATE


# ---------------------------------------------------------------------------
# Register domains
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Qubits:
    """``slots`` sub-registers of ``width`` qubits each; ``slots > 1`` holds tuples."""

    width: int
    slots: int = 1

    def __post_init__(self) -> None:
        if self.width < 1 or self.slots < 1:
            raise StateError(f"qubit domain needs width >= 1 and slots >= 1, got {self}")

    @property
    def size(self) -> int:
        return 1 << self.width

    def zero(self) -> Value:
        return 0 if self.slots == 1 else (0,) * self.slots

    def contains(self, value: Value) -> bool:
        if self.slots == 1:
            return isinstance(value, int) and 0 <= value < self.size
        return (
            isinstance(value, tuple)
            and len(value) == self.slots
            and min(value) >= 0
            and max(value) < self.size
        )

    def add(self, current: Value, delta: Value) -> Value:
        if isinstance(current, tuple) and isinstance(delta, tuple):
            if not any(delta):
                return current
            return tuple((c + d) % self.size for c, d in zip(current, delta, strict=True))
        if isinstance(current, int) and isinstance(delta, int):
            return (current + delta) % self.size
        raise StateError(f"cannot add {delta!r} to {current!r}")

    def __str__(self) -> str:
        return f"qubits({self.width})" if self.slots == 1 else f"qubits({self.width})x{self.slots}"


@dataclass(frozen=True, slots=True)
class Values:
    """Explicit finite value set; must contain 0 so the register can start zeroed."""

    members: frozenset[int]

    def __post_init__(self) -> None:
        if 0 not in self.members:
            raise StateError("values domain must contain 0")

    def zero(self) -> Value:
        return 0

    def contains(self, value: Value) -> bool:
        return isinstance(value, int) and value in self.members

    def add(self, current: Value, delta: Value) -> Value:
        if isinstance(current, int) and isinstance(delta, int):
            return current + delta
        raise StateError(f"cannot add {delta!r} to {current!r}")

    def __str__(self) -> str:
        return f"values({len(self.members)})"


Domain = Qubits | Values


@dataclass(frozen=True, slots=True)
class RegisterSpec:
    id: str
    domain: Domain


# ---------------------------------------------------------------------------
# State
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class _Block:
    ids: tuple[str, ...]
    amps: Mapping[Key, complex]

    def position(self, register: str) -> int:
        return self.ids.index(register)


@dataclass(frozen=True, slots=True)
class QuantumState:
    registers: tuple[RegisterSpec, ...]
    blocks: tuple[_Block, ...]

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(r.id for r in self.registers)

    def spec(self, register: str) -> RegisterSpec:
        for r in self.registers:
            if r.id == register:
                return r
        raise StateError(f"register {register!r} not in state {list(self.ids)}")

    def iter_terms(self) -> Iterator[tuple[Key, complex]]:
        """Terms of the full map in register order, generated lazily."""
        order = [bid for block in self.blocks for bid in block.ids]
        index = [order.index(r) for r in self.ids]
        for parts in product(*(block.amps.items() for block in self.blocks)):
            flat: list[Value] = []
            amp = complex(1.0)
            for key, a in parts:
                flat.extend(key)
                amp *= a
            yield tuple(flat[i] for i in index), amp

    @property
    def amplitudes(self) -> Amplitudes:
        """Full amplitude map in register order."""
        return dict(self.iter_terms())

    @property
    def support(self) -> int:
        return math.prod(len(block.amps) for block in self.blocks)


@dataclass(frozen=True, slots=True)
class PostSelect:
    value: Value


@dataclass(frozen=True, slots=True)
class Sample:
    seed: int


class MeasurementMode(StrEnum):
    SAMPLED = "sampled"
    POST_SELECTED = "post-selected"


class Combine(StrEnum):
    OVERWRITE = "overwrite"
    ACCUMULATE = "accumulate"


@dataclass(frozen=True, slots=True)
class MeasurementRecord:
    register: str
    value: Value
    probability: float
    mode: MeasurementMode


@dataclass(frozen=True, slots=True)
class StateSnapshot:
    registers: tuple[str, ...]
    terms: tuple[tuple[Key, complex], ...]
    norm: float
    support: int
    truncated: bool


# ---------------------------------------------------------------------------
# Internal helpers
# ---------------------------------------------------------------------------


def _block_mass(amps: Mapping[Key, complex]) -> float:
    return math.fsum(abs(a) ** 2 for a in amps.values())


def _prune(amps: Mapping[Key, complex]) -> Amplitudes:
    kept = {k: a for k, a in amps.items() if abs(a) >= PRUNE_THRESHOLD}
    mass = _block_mass(kept)
    if mass == 0.0:
        raise StateError("state collapsed to zero norm")
    scale = 1.0 / math.sqrt(mass)
    return {k: a * scale for k, a in kept.items()}


def _locate(state: QuantumState, register: str) -> int:
    state.spec(register)
    for i, block in enumerate(state.blocks):
        if register in block.ids:
            return i
    raise StateError(f"register {register!r} has no block")


def _replace_block(state: QuantumState, index: int, block: _Block) -> QuantumState:
    blocks = list(state.blocks)
    blocks[index] = block
    return QuantumState(state.registers, tuple(blocks))


def _merge(state: QuantumState, registers: Iterable[str]) -> tuple[QuantumState, int]:
    """Combine the blocks holding ``registers``; returns the new state and the block index."""
    indices = sorted({_locate(state, r) for r in registers})
    if len(indices) == 1:
        return state, indices[0]
    ids: tuple[str, ...] = ()
    amps: Amplitudes = {(): complex(1.0)}
    for i in indices:
        block = state.blocks[i]
        ids += block.ids
        amps = {ka + kb: a * b for ka, a in amps.items() for kb, b in block.amps.items()}
    rest = [b for i, b in enumerate(state.blocks) if i not in indices]
    merged = QuantumState(state.registers, (*rest, _Block(ids, amps)))
    logger.debug("Merged registers %s into one block of %d terms", ids, len(amps))
    return merged, len(rest)


def _check_normalised(state: QuantumState) -> QuantumState:
    total = norm(state)
    if abs(total - 1.0) > NORM_TOLERANCE:
        raise StateError(f"state norm {total!r} drifted beyond {NORM_TOLERANCE}")
    return state


def _marginal(state: QuantumState, register: str) -> dict[Value, float]:
    block = state.blocks[_locate(state, register)]
    pos = block.position(register)
    dist: defaultdict[Value, float] = defaultdict(float)
    for key, a in block.amps.items():
        dist[key[pos]] += abs(a) ** 2
    return dict(sorted(dist.items()))


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------


def init_state(specs: Sequence[RegisterSpec]) -> QuantumState:
    """All registers zero with amplitude 1."""
    ids = [s.id for s in specs]
    if len(set(ids)) != len(ids):
        raise StateError(f"duplicate register ids: {ids}")
    if not specs:
        raise StateError("a state needs at least one register")
    blocks = tuple(_Block((s.id,), {(s.domain.zero(),): complex(1.0)}) for s in specs)
    return QuantumState(tuple(specs), blocks)


def load_uniform(state: QuantumState, register: str, values: Iterable[Value]) -> QuantumState:
    """Put a zeroed register into equal superposition over ``values``."""
    members = sorted(set(values))
    if not members:
        raise StateError(f"cannot load an empty value set into {register}")
    spec = state.spec(register)
    bad = [v for v in members if not spec.domain.contains(v)]
    if bad:
        raise StateError(
            f"domain overflow: {bad[0]!r} not in {spec.domain} of {register}",
            ErrorCode.DOMAIN_OVERFLOW,
        )
    index = _locate(state, register)
    block = state.blocks[index]
    pos = block.position(register)
    zero = spec.domain.zero()
    if any(key[pos] != zero for key in block.amps):
        raise StateError(f"load_uniform needs {register} zero in every term")

    rest_ids = block.ids[:pos] + block.ids[pos + 1 :]
    rest_amps = {key[:pos] + key[pos + 1 :]: a for key, a in block.amps.items()}
    amp = complex(1.0 / math.sqrt(len(members)))
    loaded = _Block((register,), {(v,): amp for v in members})
    blocks = [b for i, b in enumerate(state.blocks) if i != index]
    if rest_ids:
        blocks.append(_Block(rest_ids, rest_amps))
    blocks.append(loaded)
    return _check_normalised(QuantumState(state.registers, tuple(blocks)))


def tensor(a: QuantumState, b: QuantumState) -> QuantumState:
    clash = set(a.ids) & set(b.ids)
    if clash:
        raise StateError(f"register id collision in tensor: {sorted(clash)}")
    return QuantumState(a.registers + b.registers, a.blocks + b.blocks)


# ---------------------------------------------------------------------------
# Oracles and maps
# ---------------------------------------------------------------------------


def apply_oracle(
    state: QuantumState,
    f: Callable[..., Value],
    reads: Sequence[str],
    target: str,
    combine: Combine = Combine.OVERWRITE,
) -> QuantumState:
    """``|r, t> -> |r, f(r) (+) t>``; entangles ``target`` with ``reads``."""
    if target in reads:
        raise StateError(f"oracle target {target} cannot also be read")
    domain = state.spec(target).domain
    merged, index = _merge(state, [*reads, target])
    block = merged.blocks[index]
    read_pos = [block.position(r) for r in reads]
    tpos = block.position(target)
    zero = domain.zero()

    out: Amplitudes = {}
    for key, a in block.amps.items():
        result = f(*(key[p] for p in read_pos))
        if combine is Combine.OVERWRITE:
            if key[tpos] != zero:
                raise StateError(f"overwrite oracle needs {target} zero, found {key[tpos]!r}")
            new = result
        else:
            new = domain.add(key[tpos], result)
        if not domain.contains(new):
            raise StateError(
                f"domain overflow: {target}={new!r} for term {key!r}", ErrorCode.DOMAIN_OVERFLOW
            )
        out[key[:tpos] + (new,) + key[tpos + 1 :]] = a
    return _replace_block(merged, index, _Block(block.ids, out))


def map_register(
    state: QuantumState,
    register: str,
    g: Callable[[Value], Value],
    *,
    projective: bool = False,
) -> QuantumState:
    """Relabel one register in place.

    Non-projective maps must stay injective on the support; projective maps add colliding
    amplitudes and renormalise.
    """
    domain = state.spec(register).domain
    index = _locate(state, register)
    block = state.blocks[index]
    pos = block.position(register)

    out: defaultdict[Key, complex] = defaultdict(complex)
    for key, a in block.amps.items():
        new = g(key[pos])
        if not domain.contains(new):
            raise StateError(
                f"domain overflow: {register}={new!r} for term {key!r}", ErrorCode.DOMAIN_OVERFLOW
            )
        mapped = key[:pos] + (new,) + key[pos + 1 :]
        if mapped in out and not projective:
            raise StateError(
                f"non-reversible map collision on {register} at {mapped!r}",
                ErrorCode.NON_REVERSIBLE_MAP,
            )
        out[mapped] += a
    amps = _prune(out) if projective else dict(out)
    return _check_normalised(_replace_block(state, index, _Block(block.ids, amps)))


# ---------------------------------------------------------------------------
# QFT
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Gate:
    """``h`` and ``swap`` act on qubits; ``cphase`` multiplies |11> by ``exp(i*angle)``.

    Qubit 0 is the most significant bit of the transformed range.
    """

    kind: str
    qubits: tuple[int, ...]
    angle: float = 0.0


def qft_gates(width: int, *, inverse: bool = False) -> list[Gate]:
    gates: list[Gate] = []
    for i in range(width):
        gates.append(Gate("h", (i,)))
        for j in range(i + 1, width):
            gates.append(Gate("cphase", (j, i), math.pi / (1 << (j - i))))
    for i in range(width // 2):
        gates.append(Gate("swap", (i, width - 1 - i)))
    if inverse:
        gates = [Gate(g.kind, g.qubits, -g.angle) for g in reversed(gates)]
    return gates


def _apply_gate(amps: Mapping[Key, complex], pos: int, width: int, gate: Gate) -> Amplitudes:
    bits = [width - 1 - q for q in gate.qubits]
    out: defaultdict[Key, complex] = defaultdict(complex)
    for key, a in amps.items():
        v = key[pos]
        if not isinstance(v, int):
            raise StateError("QFT requires qubit register")
        if gate.kind == "h":
            bit = bits[0]
            low = v & ~(1 << bit)
            sign = -1.0 if (v >> bit) & 1 else 1.0
            out[key[:pos] + (low,) + key[pos + 1 :]] += a * math.sqrt(0.5)
            out[key[:pos] + (low | (1 << bit),) + key[pos + 1 :]] += a * sign * math.sqrt(0.5)
        elif gate.kind == "cphase":
            if all((v >> b) & 1 for b in bits):
                out[key] += a * cmath.exp(1j * gate.angle)
            else:
                out[key] += a
        else:
            b0, b1 = bits
            if ((v >> b0) & 1) != ((v >> b1) & 1):
                v ^= (1 << b0) | (1 << b1)
            out[key[:pos] + (v,) + key[pos + 1 :]] += a
    return {k: a for k, a in out.items() if abs(a) >= PRUNE_THRESHOLD}


def qft(
    state: QuantumState, register: str, *, inverse: bool = False, width: int | None = None
) -> QuantumState:
    """Fourier transform on the low ``width`` qubits of ``register`` via the gate circuit."""
    domain = state.spec(register).domain
    if not isinstance(domain, Qubits) or domain.slots != 1:
        raise StateError("QFT requires qubit register", ErrorCode.INVALID_STATE)
    w = domain.width if width is None else width
    if not 1 <= w <= domain.width:
        raise StateError(f"QFT width {w} outside 1..{domain.width} for {register}")
    index = _locate(state, register)
    block = state.blocks[index]
    pos = block.position(register)

    amps: Mapping[Key, complex] = block.amps
    for gate in qft_gates(w, inverse=inverse):
        amps = _apply_gate(amps, pos, w, gate)
    return _check_normalised(_replace_block(state, index, _Block(block.ids, _prune(amps))))


# ---------------------------------------------------------------------------
# Measurement
# ---------------------------------------------------------------------------


def born_distribution(state: QuantumState, register: str) -> dict[Value, float]:
    """Probability of each value of ``register``, ascending by value."""
    return _marginal(state, register)


def _sampler(
    dist: Mapping[Value, float], seed: int
) -> tuple[list[Value], np.ndarray, np.random.Generator]:
    values = list(dist)
    probs = np.array([dist[v] for v in values], dtype=np.float64)
    return values, probs / probs.sum(), np.random.default_rng(seed)


def sample_counts(
    state: QuantumState, register: str, shots: int, seed: int
) -> dict[Value, int]:
    """``shots`` independent Born draws of ``register`` without collapsing the state."""
    values, probs, rng = _sampler(_marginal(state, register), seed)
    draws = rng.choice(len(values), size=shots, p=probs)
    counts = np.bincount(draws, minlength=len(values))
    return {v: int(c) for v, c in zip(values, counts, strict=True)}


def partial_measure(
    state: QuantumState, register: str, mode: PostSelect | Sample
) -> tuple[QuantumState, MeasurementRecord]:
    """Project ``register`` onto one value and renormalise the survivors."""
    dist = _marginal(state, register)
    if isinstance(mode, Sample):
        values, probs, rng = _sampler(dist, mode.seed)
        value = values[int(rng.choice(len(values), p=probs))]
        kind = MeasurementMode.SAMPLED
    else:
        value = mode.value
        kind = MeasurementMode.POST_SELECTED
    probability = dist.get(value, 0.0)
    if probability <= MIN_POST_SELECT_PROBABILITY:
        raise StateError(
            f"impossible outcome: {register}={value!r} has probability {probability:.3g}",
            ErrorCode.IMPOSSIBLE_OUTCOME,
        )

    index = _locate(state, register)
    block = state.blocks[index]
    pos = block.position(register)
    scale = 1.0 / math.sqrt(probability)
    kept = {k: a * scale for k, a in block.amps.items() if k[pos] == value}
    collapsed = _replace_block(state, index, _Block(block.ids, kept))
    logger.debug("Measured %s=%r (%s) with probability %.6f", register, value, kind, probability)
    record = MeasurementRecord(register, value, probability, kind)
    return _check_normalised(collapsed), record


# ---------------------------------------------------------------------------
# Inspection
# ---------------------------------------------------------------------------


def norm(state: QuantumState) -> float:
    return math.prod(math.sqrt(_block_mass(b.amps)) for b in state.blocks)


def register_support(state: QuantumState, register: str) -> list[Value]:
    return [v for v, p in _marginal(state, register).items() if p > 0.0]


def joint_support(state: QuantumState, registers: Sequence[str]) -> set[tuple[Value, ...]]:
    merged, index = _merge(state, registers)
    block = merged.blocks[index]
    pos = [block.position(r) for r in registers]
    return {tuple(key[p] for p in pos) for key in block.amps}


def snapshot(state: QuantumState, limit: int) -> StateSnapshot:
    """Lexicographic term listing capped at ``limit`` terms."""
    support = state.support
    truncated = support > limit
    if truncated:
        logger.warning("Snapshot truncated to %d of %d terms", limit, support)
        terms = heapq.nsmallest(limit, state.iter_terms(), key=itemgetter(0))
    else:
        terms = sorted(state.iter_terms(), key=itemgetter(0))
    return StateSnapshot(
        registers=state.ids,
        terms=tuple(terms),
        norm=norm(state),
        support=support,
        truncated=truncated,
    )
