from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gmqaoa import fullsim
from gmqaoa.fullsim import (CapExceededError, Circuit, CircuitError, ControlledNot, ControlledRotY,
                            ControlledSwap, CyclicShift, Decrement, DickeMap, FullState, Gate,
                            Hadamard, Increment, MultiControlledPhase, MultiToffoli, PauliX,
                            PhaseShift, RotY, RotZ, apply, circuit_unitary, decompose_mcz,
                            grover_mixer_circuit, mcz_target_diagonal, run)


def basis_image(gate: Gate, n: int, x: int) -> int:
    """Image of basis state x under a permutation gate, by explicit bit surgery."""
    bits = [(x >> q) & 1 for q in range(n)]
    if not all(bits[c] for c in gate.controls):
        return x
    t = list(gate.targets)
    if gate.kind in ("X", "CNOT", "MCX"):
        bits[t[0]] ^= 1
    elif gate.kind == "CSWAP":
        bits[t[0]], bits[t[1]] = bits[t[1]], bits[t[0]]
    elif gate.kind in ("INC", "DEC"):
        v = sum(bits[q] << i for i, q in enumerate(t))
        v = (v + (1 if gate.kind == "INC" else -1)) % (1 << len(t))
        for i, q in enumerate(t):
            bits[q] = (v >> i) & 1
    elif gate.kind == "CSHIFT":
        old = [bits[q] for q in t]
        s = int(gate.param)
        for i, q in enumerate(t):
            bits[q] = old[(i - s) % len(t)]
    return sum(b << q for q, b in enumerate(bits))


def random_full(n: int, rng) -> FullState:
    amp = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return FullState(n, amp / np.linalg.norm(amp))


class TestSingleGates:
    def test_x(self):
        assert np.allclose(apply(FullState.zero(1), PauliX(0)).amp, [0, 1])

    def test_hadamard(self):
        np.testing.assert_allclose(apply(FullState.zero(1), Hadamard(0)).amp, [2 ** -0.5, 2 ** -0.5])

    def test_phase_shift_convention(self):
        state = FullState(1, np.array([0.6, 0.8], dtype=complex))
        out = apply(state, PhaseShift(0, 0.25))
        np.testing.assert_allclose(out.amp, [0.6, 0.8 * np.exp(0.25j * np.pi)])

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_mcp_on_all_ones(self, n):
        beta = 0.77
        u = circuit_unitary(Circuit(n, [MultiControlledPhase(range(n - 1), n - 1, -beta / np.pi)]))
        expected = np.ones(1 << n, dtype=complex)
        expected[-1] = np.exp(-1j * beta)
        np.testing.assert_allclose(u, np.diag(expected), atol=1e-15)

    def test_rotations_match_textbook_matrices(self):
        a = 0.9
        ry = circuit_unitary(Circuit(1, [RotY(0, a)]))
        rz = circuit_unitary(Circuit(1, [RotZ(0, a)]))
        np.testing.assert_allclose(ry, [[np.cos(a / 2), -np.sin(a / 2)], [np.sin(a / 2), np.cos(a / 2)]])
        np.testing.assert_allclose(rz, np.diag([np.exp(-0.5j * a), np.exp(0.5j * a)]))

    def test_controlled_rotation_acts_only_when_controls_set(self):
        u = circuit_unitary(Circuit(3, [ControlledRotY([0, 2], 1, 1.3)]))
        for x in range(8):
            col = u[:, x]
            if x & 1 and x & 4:
                assert abs(col[x]) == pytest.approx(np.cos(0.65))
            else:
                assert col[x] == 1

    def test_bad_indices(self):
        with pytest.raises(CircuitError):
            Circuit(2, [PauliX(2)])
        with pytest.raises(CircuitError):
            MultiToffoli([0, 1], 1)
        with pytest.raises(CircuitError):
            apply(FullState.zero(2), ControlledNot(0, 3))


PERM_GATES = [
    (PauliX(2), 4), (ControlledNot(0, 3), 4), (MultiToffoli([0, 2], 1), 4),
    (ControlledSwap([3], 0, 2), 4), (ControlledSwap([], 1, 2), 3), (Increment([0, 1, 2]), 4),
    (Decrement([1, 3]), 4), (CyclicShift([0, 1, 2], [3]), 4), (CyclicShift([3, 1, 0]), 4),
    (CyclicShift([0, 1, 2, 3], shift=2), 4), (Increment([2, 0]), 3),
]


@pytest.mark.parametrize("gate,n", PERM_GATES)
def test_permutation_kernels_match_bit_surgery(gate, n):
    u = circuit_unitary(Circuit(n, [gate]))
    for x in range(1 << n):
        col = np.zeros(1 << n)
        col[basis_image(gate, n, x)] = 1
        np.testing.assert_array_equal(u[:, x], col)


def test_cyclic_shift_direction():
    # register content moves from position i to i + 1, last wraps to first
    state = FullState.basis(3, 0b001)
    assert np.flatnonzero(apply(state, CyclicShift([0, 1, 2])).amp).tolist() == [0b010]
    state = FullState.basis(3, 0b100)
    assert np.flatnonzero(apply(state, CyclicShift([0, 1, 2])).amp).tolist() == [0b001]


ALL_GATES = [g for g, _ in PERM_GATES] + [
    Hadamard(1), RotY(0, 0.3), RotZ(2, -1.1), PhaseShift(3, 0.37), ControlledRotY([1], 0, 2.2),
    ControlledRotY([0, 3], 2, -0.7), MultiControlledPhase([0, 1, 2], 3, 0.61), DickeMap([0, 1, 2]),
    DickeMap([3, 1, 0, 2]),
]


@pytest.mark.parametrize("gate", ALL_GATES, ids=lambda g: g.kind)
def test_gate_then_inverse_is_identity(gate):
    rng = np.random.default_rng(4)
    state = random_full(4, rng)
    back = apply(apply(state, gate), gate.inverse())
    assert np.abs(back.amp - state.amp).max() < 1e-12
    assert abs(apply(state, gate).norm - 1) < 1e-12


class TestDickeMap:
    @pytest.mark.parametrize("m", [1, 2, 3, 4, 5])
    def test_orthogonal_symmetric_involution(self, m):
        mat = fullsim.dicke_map_matrix(m)
        np.testing.assert_allclose(mat @ mat, np.eye(1 << m), atol=1e-12)
        np.testing.assert_allclose(mat, mat.T, atol=0)

    @pytest.mark.parametrize("m,k", [(3, 1), (4, 2), (5, 3), (4, 4), (4, 0)])
    def test_unary_to_dicke(self, m, k):
        out = run(Circuit(m, [PauliX(q) for q in range(k)] + [DickeMap(range(m))]))
        weights = np.array([bin(i).count("1") for i in range(1 << m)])
        expected = (weights == k) / np.sqrt((weights == k).sum())
        np.testing.assert_allclose(out.amp, expected, atol=1e-12)

    def test_preserves_weight(self):
        mat = fullsim.dicke_map_matrix(4)
        weights = np.array([bin(i).count("1") for i in range(16)])
        nz = np.argwhere(np.abs(mat) > 1e-14)
        assert all(weights[i] == weights[j] for i, j in nz)


class TestRun:
    def test_empty_circuit(self):
        rng = np.random.default_rng(5)
        state = random_full(3, rng)
        np.testing.assert_array_equal(run(Circuit(3), state).amp, state.amp)

    def test_circuit_then_inverse(self):
        circ = Circuit(4, ALL_GATES)
        state = random_full(4, np.random.default_rng(6))
        back = run(circ.inverse(), run(circ, state))
        assert np.abs(back.amp - state.amp).max() < 1e-9

    def test_inverse_reverses_and_negates(self):
        circ = Circuit(2, [RotY(0, 0.5), Increment([0, 1]), PhaseShift(1, 0.2)])
        inv = circ.inverse()
        assert [g.kind for g in inv.gates] == ["P", "DEC", "RY"]
        assert inv.gates[0].param == -0.2 and inv.gates[2].param == -0.5

    def test_input_not_mutated(self):
        state = FullState.zero(2)
        run(Circuit(2, [PauliX(0)]), state)
        assert state.amp[0] == 1

    def test_cap(self, monkeypatch):
        monkeypatch.setenv("GMQAOA_MAX_AMPS", "8")
        with pytest.raises(CapExceededError):
            FullState.zero(4)


class TestUnitary:
    def test_identity(self):
        np.testing.assert_array_equal(circuit_unitary(Circuit(3)), np.eye(8))

    def test_pauli_x(self):
        np.testing.assert_array_equal(circuit_unitary(Circuit(1, [PauliX(0)])), [[0, 1], [1, 0]])

    def test_cnot_swaps_01_and_11(self):
        u = circuit_unitary(Circuit(2, [ControlledNot(0, 1)]))
        expected = np.eye(4)[:, [0, 3, 2, 1]]
        np.testing.assert_array_equal(u, expected)

    def test_columns_are_runs_on_basis_states(self):
        circ = Circuit(3, [Hadamard(0), ControlledRotY([0], 2, 0.4), Increment([1, 2])])
        u = circuit_unitary(circ)
        for j in range(8):
            np.testing.assert_allclose(u[:, j], run(circ, FullState.basis(3, j)).amp, atol=1e-15)

    def test_cap(self):
        with pytest.raises(CapExceededError):
            circuit_unitary(Circuit(13))


class TestGroverMixerCircuit:
    def dicke_projector(self):
        weights = np.array([bin(i).count("1") for i in range(16)])
        f = (weights == 2) / np.sqrt(6)
        return np.outer(f, f)

    def prep(self):
        return Circuit(4, [PauliX(0), PauliX(1), DickeMap(range(4))])

    def test_beta_zero_is_identity(self):
        u = circuit_unitary(grover_mixer_circuit(self.prep(), 0.0))
        np.testing.assert_allclose(u, np.eye(16), atol=1e-12)

    @pytest.mark.parametrize("beta", [np.pi / 3, np.pi, 1.2345])
    def test_identity_minus_rank_one(self, beta):
        u = circuit_unitary(grover_mixer_circuit(self.prep(), beta))
        expected = np.eye(16) - (1 - np.exp(-1j * beta)) * self.dicke_projector()
        assert np.abs(u - expected).max() < 1e-9

    def test_beta_pi_is_reflection(self):
        u = circuit_unitary(grover_mixer_circuit(self.prep(), np.pi))
        np.testing.assert_allclose(u @ u, np.eye(16), atol=1e-12)

    def test_single_qubit_prep(self):
        u = circuit_unitary(grover_mixer_circuit(Circuit(1, [Hadamard(0)]), 0.8))
        plus = np.array([1, 1]) / np.sqrt(2)
        np.testing.assert_allclose(u, np.eye(2) - (1 - np.exp(-0.8j)) * np.outer(plus, plus), atol=1e-12)


class TestDecomposeMcz:
    @pytest.mark.parametrize("c", [1, 2, 3, 4, 5])
    @pytest.mark.parametrize("t", [0.0, 0.37, 1.0, -0.5])
    def test_matches_diagonal(self, c, t):
        u = circuit_unitary(decompose_mcz(t, c))
        assert np.abs(u - np.diag(mcz_target_diagonal(t, c))).max() < 1e-9

    def test_one_control_is_cz_power(self):
        u = circuit_unitary(decompose_mcz(0.25, 1))
        np.testing.assert_allclose(u, np.diag([1, 1, 1, np.exp(0.25j * np.pi)]), atol=1e-12)

    def test_zero_is_identity(self):
        assert np.abs(circuit_unitary(decompose_mcz(0.0, 3)) - np.eye(16)).max() < 1e-12

    @given(t=st.floats(-2, 2, allow_nan=False), c=st.integers(1, 5))
    @settings(max_examples=25, deadline=None)
    def test_diagonal_for_any_exponent(self, t, c):
        u = circuit_unitary(decompose_mcz(t, c))
        off = u - np.diag(np.diag(u))
        assert np.abs(off).max() < 1e-10

    def test_uses_only_fig_gate_kinds(self):
        kinds = {g.kind for g in decompose_mcz(0.5, 4).gates}
        assert kinds <= {"MCX", "X", "INC", "DEC", "P"}

    def test_rejects_zero_controls(self):
        with pytest.raises(ValueError):
            decompose_mcz(0.5, 0)


class TestTextFormat:
    def test_roundtrip(self):
        circ = Circuit(5, ALL_GATES + [CyclicShift([4, 2], [0, 1])])
        again = Circuit.from_text(circ.to_text())
        assert again.num_qubits == 5 and again.gates == circ.gates

    def test_comments_and_blank_lines(self):
        circ = Circuit.from_text("# demo\nQUBITS 2\n\nX 0  # flip\nCNOT 0 : 1\nP 1 0.5\n")
        assert [g.kind for g in circ.gates] == ["X", "CNOT", "P"]
        assert circ.gates[1].controls == (0,) and circ.gates[1].targets == (1,)

    @pytest.mark.parametrize("text", ["X 0\n", "QUBITS 2\nFOO 1\n", "QUBITS 2\nCNOT 0 1\n", "QUBITS 1\nRY 0\n"])
    def test_malformed(self, text):
        with pytest.raises(CircuitError):
            Circuit.from_text(text)
