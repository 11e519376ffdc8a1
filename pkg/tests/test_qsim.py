import numpy as np
import pytest

from qshield.qsim import (
    GATE_ARITY,
    Gate,
    Statevector,
    apply_gate,
    expectation,
    gate_matrix,
    new_state,
)

from oracles import dense_gate, random_program, run_dense

SQ2 = 1 / np.sqrt(2)


# ---------------------------------------------------------------- registers

def test_new_state_single_qubit():
    s = new_state(1)
    assert np.array_equal(s.amps, np.array([1, 0], dtype=complex))


def test_new_state_four_qubits():
    s = new_state(4)
    assert s.amps.shape == (16,)
    assert s.amps[0] == 1
    assert np.all(s.amps[1:] == 0)


def test_new_state_rejects_out_of_range():
    with pytest.raises(ValueError, match="capacity"):
        new_state(13)
    with pytest.raises(ValueError, match="capacity"):
        new_state(0)


def test_statevector_length_checked():
    with pytest.raises(ValueError):
        Statevector(2, np.zeros(3, dtype=complex))


# ------------------------------------------------------------------- gates

def test_hadamard_on_zero():
    s = apply_gate(new_state(1), Gate("H", (0,)))
    assert np.allclose(s.amps, [SQ2, SQ2], atol=1e-15)


def test_ry_pi_flips():
    s = apply_gate(new_state(1), Gate("RY", (0,), (np.pi,)))
    assert np.allclose(s.amps, [0, 1], atol=1e-15)


def test_cz_flips_sign_of_11():
    s = new_state(2)
    s = apply_gate(s, Gate("RY", (0,), (np.pi,)))
    s = apply_gate(s, Gate("RY", (1,), (np.pi,)))
    s = apply_gate(s, Gate("CZ", (0, 1)))
    expected = np.zeros(4, dtype=complex)
    expected[3] = -1
    assert np.allclose(s.amps, expected, atol=1e-12)


def test_cnot_and_crx_control_convention():
    # control |1>, target |0>: CNOT flips the target
    s = apply_gate(new_state(2), Gate("RY", (1,), (np.pi,)))  # |10>
    s = apply_gate(s, Gate("CNOT", (1, 0)))
    assert np.argmax(np.abs(s.amps)) == 3  # |11>
    # control |0>: CRX is the identity
    s = apply_gate(new_state(2), Gate("CRX", (1, 0), (1.3,)))
    assert np.allclose(s.amps, [1, 0, 0, 0], atol=1e-15)


def test_all_gate_matrices_unitary():
    rng = np.random.default_rng(11)
    for kind, (_, n_angles) in GATE_ARITY.items():
        for _ in range(5):
            angles = tuple(rng.uniform(-np.pi, np.pi, size=n_angles).tolist())
            u = gate_matrix(kind, angles)
            err = np.max(np.abs(u @ u.conj().T - np.eye(len(u))))
            assert err < 1e-12, f"{kind} not unitary (err {err})"


def test_gate_validation():
    with pytest.raises(ValueError, match="unknown gate"):
        Gate("SWAP", (0, 1))
    with pytest.raises(ValueError, match="distinct"):
        Gate("CZ", (1, 1))
    with pytest.raises(ValueError, match="angle"):
        Gate("RY", (0,))
    with pytest.raises(ValueError, match="target"):
        Gate("H", (0, 1))
    with pytest.raises(ValueError, match="non-finite"):
        Gate("RX", (0,), (np.nan,))


def test_apply_gate_rejects_out_of_range_target():
    with pytest.raises(ValueError, match="out of range"):
        apply_gate(new_state(2), Gate("H", (2,)))


# -------------------------------------------------- oracle cross-validation

def test_apply_matches_dense_oracle():
    rng = np.random.default_rng(7)
    for _ in range(60):
        n = int(rng.integers(1, 4))
        program = random_program(rng, n, int(rng.integers(1, 12)))
        state = new_state(n)
        for g in program:
            state = apply_gate(state, g)
        expected = run_dense(program, n)
        assert np.max(np.abs(state.amps - expected)) < 1e-12


def test_single_gate_against_dense_embedding():
    rng = np.random.default_rng(3)
    for _ in range(40):
        n = int(rng.integers(2, 5))
        g = random_program(rng, n, 1)[0]
        state = new_state(n)
        for warm in random_program(rng, n, 3):
            state = apply_gate(state, warm)
        direct = apply_gate(state, g)
        dense = dense_gate(g.kind, g.targets, g.angles, n) @ state.amps
        assert np.max(np.abs(direct.amps - dense)) < 1e-12


def test_norm_preserved_on_long_random_sequences():
    rng = np.random.default_rng(42)
    for _ in range(10):
        n = int(rng.integers(2, 7))
        state = new_state(n)
        for g in random_program(rng, n, 100):
            state = apply_gate(state, g)
        assert abs(state.norm_sq() - 1.0) < 1e-12


def test_involutions_round_trip():
    rng = np.random.default_rng(5)
    for _ in range(20):
        n = int(rng.integers(2, 5))
        state = new_state(n)
        for g in random_program(rng, n, 6):
            state = apply_gate(state, g)
        q = int(rng.integers(n))
        q2 = int(rng.integers(n - 1))
        q2 = q2 if q2 != q else n - 1
        theta = float(rng.uniform(-np.pi, np.pi))
        round_trips = [
            [Gate("H", (q,)), Gate("H", (q,))],
            [Gate("CZ", (q, q2)), Gate("CZ", (q, q2))],
            [Gate("RY", (q,), (theta,)), Gate("RY", (q,), (-theta,))],
        ]
        for pair in round_trips:
            out = apply_gate(apply_gate(state, pair[0]), pair[1])
            assert np.max(np.abs(out.amps - state.amps)) < 1e-12


# ------------------------------------------------------------- expectations

def test_z_expectation_on_basis_states():
    assert expectation(new_state(1), "Z", 0) == pytest.approx(1.0, abs=1e-15)
    plus = apply_gate(new_state(1), Gate("H", (0,)))
    assert expectation(plus, "Z", 0) == pytest.approx(0.0, abs=1e-15)
    assert expectation(plus, "X", 0) == pytest.approx(1.0, abs=1e-12)


def test_y_expectation():
    # RX(-pi/2)|0> is the +1 eigenstate of Y
    s = apply_gate(new_state(1), Gate("RX", (0,), (-np.pi / 2,)))
    assert expectation(s, "Y", 0) == pytest.approx(1.0, abs=1e-12)


def test_expectation_bounds_on_random_states():
    rng = np.random.default_rng(9)
    for _ in range(30):
        n = int(rng.integers(1, 5))
        state = new_state(n)
        for g in random_program(rng, n, 15):
            state = apply_gate(state, g)
        for q in range(n):
            for basis in "XYZ":
                v = expectation(state, basis, q)
                assert -1 - 1e-12 <= v <= 1 + 1e-12


def test_expectation_validation():
    with pytest.raises(ValueError, match="basis"):
        expectation(new_state(1), "W", 0)
    with pytest.raises(ValueError, match="out of range"):
        expectation(new_state(2), "Z", 2)


def test_apply_gate_is_functional():
    s = new_state(1)
    before = s.amps.copy()
    apply_gate(s, Gate("H", (0,)))
    assert np.array_equal(s.amps, before)
