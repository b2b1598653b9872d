"""Tests for qsieve.qsim."""

from __future__ import annotations

import cmath
import math

import numpy as np
import pytest
from qsieve.errors import ErrorCode
from qsieve.qsim import (
    Combine,
    MeasurementMode,
    PostSelect,
    QuantumState,
    Qubits,
    RegisterSpec,
    Sample,
    StateError,
    Value,
    Values,
    apply_oracle,
    born_distribution,
    init_state,
    joint_support,
    load_uniform,
    map_register,
    norm,
    partial_measure,
    qft,
    qft_gates,
    register_support,
    sample_counts,
    snapshot,
    tensor,
)


def _two_registers(w1: int = 5, w2: int = 5) -> QuantumState:
    return init_state([RegisterSpec("R1", Qubits(w1)), RegisterSpec("R2", Qubits(w2))])


def _split_state() -> QuantumState:
    """(|3,1> + |5,0>) / sqrt(2)."""
    state = load_uniform(_two_registers(3, 1), "R1", [3, 5])
    return apply_oracle(state, lambda v: 1 if v == 3 else 0, ["R1"], "R2")


def _basis(width: int, x: int) -> QuantumState:
    return load_uniform(init_state([RegisterSpec("R", Qubits(width))]), "R", [x])


def _random_state(rng: np.random.Generator) -> QuantumState:
    """Entangled two-register state with non-uniform complex amplitudes."""
    size = int(rng.integers(1, 9))
    members = sorted(int(v) for v in rng.choice(8, size=size, replace=False))
    labels = {v: int(rng.integers(0, 4)) for v in members}
    state = load_uniform(_two_registers(3, 2), "R1", members)
    state = apply_oracle(state, lambda v: labels[v], ["R1"], "R2")
    return qft(state, "R1")


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------


class TestInitState:
    """All-zero basis state."""

    def test_two_registers(self) -> None:
        state = _two_registers()
        assert state.amplitudes == {(0, 0): 1 + 0j}
        assert norm(state) == pytest.approx(1.0)
        assert state.ids == ("R1", "R2")

    def test_duplicate_ids(self) -> None:
        with pytest.raises(StateError, match="duplicate register ids"):
            init_state([RegisterSpec("R1", Qubits(2)), RegisterSpec("R1", Qubits(3))])

    def test_tuple_register_zero(self) -> None:
        state = init_state([RegisterSpec("R5", Qubits(2, slots=3))])
        assert state.amplitudes == {((0, 0, 0),): 1 + 0j}

    def test_values_domain_needs_zero(self) -> None:
        with pytest.raises(StateError):
            Values(frozenset({1, 2}))


class TestLoadUniform:
    """Equal superposition over a finite set."""

    def test_primes_up_to_ten(self) -> None:
        state = load_uniform(_two_registers(), "R1", [2, 3, 5, 7])
        amps = state.amplitudes
        assert sorted(amps) == [(2, 0), (3, 0), (5, 0), (7, 0)]
        for a in amps.values():
            assert a == pytest.approx(0.5)

    def test_singleton(self) -> None:
        state = load_uniform(_two_registers(), "R1", [17])
        assert state.amplitudes == {(17, 0): pytest.approx(1.0)}

    def test_norm(self) -> None:
        state = load_uniform(_two_registers(), "R2", range(13))
        assert norm(state) == pytest.approx(1.0, abs=1e-12)

    def test_empty_set(self) -> None:
        with pytest.raises(StateError):
            load_uniform(_two_registers(), "R1", [])

    def test_unknown_register(self) -> None:
        with pytest.raises(StateError, match="not in state"):
            load_uniform(_two_registers(), "R9", [1])

    def test_out_of_domain(self) -> None:
        with pytest.raises(StateError, match="domain overflow"):
            load_uniform(_two_registers(2, 2), "R1", [1, 4])

    def test_requires_zeroed_register(self) -> None:
        state = load_uniform(_two_registers(), "R1", [1, 2])
        with pytest.raises(StateError):
            load_uniform(state, "R1", [3])


class TestTensor:
    """Product states."""

    def test_support_multiplies(self) -> None:
        a = load_uniform(init_state([RegisterSpec("A", Qubits(3))]), "A", [1, 2, 3])
        b = load_uniform(init_state([RegisterSpec("B", Qubits(3))]), "B", [4, 5, 6, 7])
        joined = tensor(a, b)
        assert joined.ids == ("A", "B")
        assert len(joined.amplitudes) == 12
        assert joined.amplitudes[(2, 5)] == pytest.approx(1 / math.sqrt(12))
        assert norm(joined) == pytest.approx(1.0)

    def test_with_zero_state(self) -> None:
        psi = load_uniform(init_state([RegisterSpec("A", Qubits(3))]), "A", [1, 2])
        zero = init_state([RegisterSpec("Z", Qubits(1))])
        assert set(tensor(zero, psi).amplitudes) == {(0, 1), (0, 2)}

    def test_id_collision(self) -> None:
        with pytest.raises(StateError, match="collision"):
            tensor(_two_registers(), _two_registers())


# ---------------------------------------------------------------------------
# Oracles and maps
# ---------------------------------------------------------------------------


class TestApplyOracle:
    """Entangling function oracles."""

    def test_euler_criterion_term(self) -> None:
        state = load_uniform(_two_registers(), "R1", [17])
        state = apply_oracle(state, lambda p: pow(15347, (p - 1) // 2, p), ["R1"], "R2")
        assert set(state.amplitudes) == {(17, 1)}

    def test_constant_zero_is_identity(self) -> None:
        state = load_uniform(_two_registers(), "R1", [2, 3, 5])
        assert apply_oracle(state, lambda _: 0, ["R1"], "R2").amplitudes == state.amplitudes

    def test_moduli_preserved(self) -> None:
        state = qft(load_uniform(_two_registers(3, 3), "R1", [1, 6]), "R1")
        before = sorted(abs(a) for a in state.amplitudes.values())
        after_state = apply_oracle(state, lambda v: (v * 5) % 8, ["R1"], "R2")
        after = sorted(abs(a) for a in after_state.amplitudes.values())
        assert after == pytest.approx(before)

    def test_domain_overflow(self) -> None:
        state = load_uniform(_two_registers(3, 2), "R1", [1, 2])
        with pytest.raises(StateError, match="domain overflow") as exc_info:
            apply_oracle(state, lambda v: v * 2, ["R1"], "R2")
        assert exc_info.value.code is ErrorCode.DOMAIN_OVERFLOW

    def test_overwrite_needs_zero_target(self) -> None:
        state = apply_oracle(_two_registers(), lambda: 3, [], "R2")
        with pytest.raises(StateError):
            apply_oracle(state, lambda: 1, [], "R2")

    def test_accumulate_is_modular(self) -> None:
        state = apply_oracle(_two_registers(2, 2), lambda: 3, [], "R2")
        state = apply_oracle(state, lambda: 2, [], "R2", Combine.ACCUMULATE)
        assert set(state.amplitudes) == {(0, 1)}

    def test_accumulate_tuple_componentwise(self) -> None:
        state = init_state([RegisterSpec("E", Qubits(3, slots=3))])
        state = apply_oracle(state, lambda: (1, 0, 2), [], "E", Combine.ACCUMULATE)
        state = apply_oracle(state, lambda: (1, 1, 0), [], "E", Combine.ACCUMULATE)
        assert set(state.amplitudes) == {((2, 1, 2),)}

    def test_target_cannot_be_read(self) -> None:
        with pytest.raises(StateError):
            apply_oracle(_two_registers(), lambda v: v, ["R1"], "R1")


def _mod2(e: Value) -> Value:
    assert isinstance(e, tuple)
    return tuple(v % 2 for v in e)


class TestMapRegister:
    """Classical relabelling."""

    def test_identity(self) -> None:
        state = _split_state()
        assert map_register(state, "R1", lambda v: v).amplitudes == state.amplitudes

    def test_mod_two_on_tuple_register(self) -> None:
        state = init_state([RegisterSpec("R5", Qubits(2, slots=4))])
        state = apply_oracle(state, lambda: (3, 0, 2, 1), [], "R5", Combine.ACCUMULATE)
        assert set(map_register(state, "R5", _mod2).amplitudes) == {((1, 0, 0, 1),)}

    def test_collision(self) -> None:
        state = load_uniform(_two_registers(), "R1", [1, 2])
        with pytest.raises(StateError, match="non-reversible map collision") as exc_info:
            map_register(state, "R1", lambda _: 0)
        assert exc_info.value.code is ErrorCode.NON_REVERSIBLE_MAP

    def test_other_registers_keep_terms_apart(self) -> None:
        state = _split_state()
        mapped = map_register(state, "R1", lambda _: 0)
        assert set(mapped.amplitudes) == {(0, 1), (0, 0)}

    def test_projective_merges(self) -> None:
        state = load_uniform(_two_registers(), "R1", [1, 2])
        merged = map_register(state, "R1", lambda _: 0, projective=True)
        assert merged.amplitudes == {(0, 0): pytest.approx(1.0)}


# ---------------------------------------------------------------------------
# QFT
# ---------------------------------------------------------------------------


class TestQft:
    """Gate-level Fourier transform."""

    def test_zero_state_two_qubits(self) -> None:
        amps = qft(_basis(2, 0), "R").amplitudes
        assert sorted(amps) == [(0,), (1,), (2,), (3,)]
        for a in amps.values():
            assert a == pytest.approx(0.5)

    @pytest.mark.parametrize("width", [1, 2, 3, 4, 5, 6])
    def test_matches_dft_matrix(self, width: int) -> None:
        size = 1 << width
        omega = cmath.exp(2j * math.pi / size)
        worst = 0.0
        for x in range(size):
            amps = qft(_basis(width, x), "R").amplitudes
            for k in range(size):
                expected = omega ** (x * k) / math.sqrt(size)
                worst = max(worst, abs(amps.get((k,), 0j) - expected))
        assert worst < 1e-9

    def test_inverse_round_trip(self, rng: np.random.Generator) -> None:
        state = _random_state(rng)
        back = qft(qft(state, "R1"), "R1", inverse=True)
        original = state.amplitudes
        restored = back.amplitudes
        for key in set(original) | set(restored):
            assert abs(original.get(key, 0j) - restored.get(key, 0j)) < 1e-9

    def test_low_width_only(self) -> None:
        state = qft(_basis(4, 8), "R", width=2)
        assert sorted(k[0] for k in state.amplitudes) == [8, 9, 10, 11]

    def test_values_register_rejected(self) -> None:
        state = init_state([RegisterSpec("V", Values(frozenset({0, 5, 7})))])
        with pytest.raises(StateError, match="QFT requires qubit register"):
            qft(state, "V")

    def test_tuple_register_rejected(self) -> None:
        state = init_state([RegisterSpec("E", Qubits(2, slots=2))])
        with pytest.raises(StateError, match="QFT requires qubit register"):
            qft(state, "E")

    def test_gate_set(self) -> None:
        gates = qft_gates(3)
        assert [g.kind for g in gates] == ["h", "cphase", "cphase", "h", "cphase", "h", "swap"]
        assert gates[1].angle == pytest.approx(math.pi / 2)
        assert gates[2].angle == pytest.approx(math.pi / 4)
        inverse = qft_gates(3, inverse=True)
        assert [g.kind for g in inverse] == list(reversed([g.kind for g in gates]))
        assert inverse[-2].angle == pytest.approx(-math.pi / 2)


# ---------------------------------------------------------------------------
# Measurement
# ---------------------------------------------------------------------------


class TestPartialMeasure:
    """Projection, Born probabilities and renormalisation."""

    def test_post_select_split_state(self) -> None:
        post, record = partial_measure(_split_state(), "R2", PostSelect(1))
        assert record.probability == pytest.approx(0.5)
        assert record.mode is MeasurementMode.POST_SELECTED
        assert post.amplitudes == {(3, 1): pytest.approx(1.0)}

    def test_count_based_probability(self) -> None:
        state = load_uniform(_two_registers(), "R1", [2, 3, 5, 7])
        state = apply_oracle(state, lambda p: 1 if p in (3, 7) else 0, ["R1"], "R2")
        _, record = partial_measure(state, "R2", PostSelect(1))
        assert record.probability == pytest.approx(2 / 4)

    def test_impossible_outcome(self) -> None:
        with pytest.raises(StateError, match="impossible outcome") as exc_info:
            partial_measure(_split_state(), "R2", PostSelect(3))
        assert exc_info.value.code is ErrorCode.IMPOSSIBLE_OUTCOME

    def test_idempotent(self) -> None:
        post, record = partial_measure(_split_state(), "R1", Sample(7))
        assert born_distribution(post, "R1") == {record.value: pytest.approx(1.0)}
        again, second = partial_measure(post, "R1", Sample(99))
        assert second.value == record.value
        assert second.probability == pytest.approx(1.0)
        assert set(again.amplitudes) == set(post.amplitudes)

    def test_sample_is_deterministic(self) -> None:
        state = load_uniform(_two_registers(), "R1", range(20))
        first = partial_measure(state, "R1", Sample(1234))[1]
        second = partial_measure(state, "R1", Sample(1234))[1]
        assert first == second
        assert first.mode is MeasurementMode.SAMPLED

    def test_born_law_on_random_states(self, rng: np.random.Generator) -> None:
        for _ in range(200):
            state = _random_state(rng)
            amps = state.amplitudes
            dist = born_distribution(state, "R2")
            assert math.fsum(dist.values()) == pytest.approx(1.0, abs=1e-9)
            for value, probability in dist.items():
                expected = math.fsum(abs(a) ** 2 for k, a in amps.items() if k[1] == value)
                assert abs(probability - expected) < 1e-9
                if probability <= 1e-12:
                    continue
                post, record = partial_measure(state, "R2", PostSelect(value))
                assert abs(record.probability - expected) < 1e-9
                assert abs(norm(post) - 1.0) < 1e-9
                scale = 1 / math.sqrt(expected)
                for key, a in post.amplitudes.items():
                    assert key[1] == value
                    assert abs(a - amps[key] * scale) < 1e-9

    def test_sampling_frequencies(self) -> None:
        state = load_uniform(_two_registers(), "R1", [2, 3, 5, 7, 11])
        state = apply_oracle(state, lambda p: p % 3, ["R1"], "R2")
        shots = 100_000
        counts = sample_counts(state, "R2", shots, seed=2024)
        assert sum(counts.values()) == shots
        for value, p in born_distribution(state, "R2").items():
            sigma = math.sqrt(shots * p * (1 - p))
            assert abs(counts[value] - shots * p) <= 3 * sigma


class TestInspection:
    """Support and snapshots."""

    def test_register_and_joint_support(self) -> None:
        state = _split_state()
        assert register_support(state, "R1") == [3, 5]
        assert joint_support(state, ["R2", "R1"]) == {(1, 3), (0, 5)}

    def test_snapshot_ordering(self) -> None:
        state = load_uniform(_two_registers(), "R1", [7, 2, 5])
        snap = snapshot(state, 10)
        assert [k for k, _ in snap.terms] == [(2, 0), (5, 0), (7, 0)]
        assert snap.support == 3
        assert not snap.truncated
        assert snap.norm == pytest.approx(1.0)

    def test_snapshot_truncation(self) -> None:
        state = load_uniform(_two_registers(), "R1", range(10))
        snap = snapshot(state, 4)
        assert snap.truncated
        assert len(snap.terms) == 4
        assert snap.support == 10
        assert snap.norm == pytest.approx(1.0)

    def test_snapshot_truncation_is_lazy(self, monkeypatch: pytest.MonkeyPatch) -> None:
        state = load_uniform(_two_registers(), "R1", range(6))
        state = load_uniform(state, "R2", [3, 1, 2])
        assert len(state.blocks) == 2
        expected = sorted(state.amplitudes.items())[:5]

        def _no_full_map(self: QuantumState) -> None:
            raise AssertionError("snapshot materialised the full amplitude map")

        monkeypatch.setattr(QuantumState, "amplitudes", property(_no_full_map))
        snap = snapshot(state, 5)
        assert snap.truncated
        assert snap.support == 18
        assert [k for k, _ in snap.terms] == [k for k, _ in expected]
        assert [k for k, _ in snap.terms][:3] == [(0, 1), (0, 2), (0, 3)]
        assert snap.norm == pytest.approx(1.0)
