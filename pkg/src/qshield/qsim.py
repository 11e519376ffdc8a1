"""Minimal statevector simulator.

A state is a dense vector of 2**n complex amplitudes over the
computational basis.  Qubit 0 is the least-significant bit of the
amplitude index, so for two qubits the basis order is
|00>, |01>, |10>, |11> with the right bit belonging to qubit 0.

Gates are small unitaries applied to one or two target qubits with the
identity everywhere else.  ``apply_gate`` is functional: it returns a
new Statevector and never mutates its argument, so distinct circuit
evaluations can run concurrently without shared state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_QUBITS = 12

# kind -> (target count, angle count)
GATE_ARITY = {
    "H": (1, 0),
    "RX": (1, 1),
    "RY": (1, 1),
    "RZ": (1, 1),
    "U1": (1, 1),
    "U2": (1, 2),
    "U3": (1, 3),
    "CNOT": (2, 0),
    "CZ": (2, 0),
    "CRX": (2, 1),
}

SINGLE_QUBIT_KINDS = frozenset(k for k, (t, _) in GATE_ARITY.items() if t == 1)
TWO_QUBIT_KINDS = frozenset(k for k, (t, _) in GATE_ARITY.items() if t == 2)

_SQ2 = 1.0 / np.sqrt(2.0)

PAULI = {
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


@dataclass(frozen=True)
class Gate:
    """One gate application.

    ``targets`` lists qubit indices; two-qubit kinds name the control
    first, then the target.  ``angles`` are radians, with the count
    fixed by the kind (H takes none, RX/RY/RZ/U1/CRX one, U2 two,
    U3 three).
    """

    kind: str
    targets: tuple[int, ...]
    angles: tuple[float, ...] = ()

    def __post_init__(self):
        arity = GATE_ARITY.get(self.kind)
        if arity is None:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        n_targets, n_angles = arity
        if len(self.targets) != n_targets:
            raise ValueError(
                f"{self.kind} takes {n_targets} target(s), got {self.targets!r}"
            )
        if len(set(self.targets)) != len(self.targets):
            raise ValueError(
                f"{self.kind} targets must be distinct, got {self.targets!r}"
            )
        if min(self.targets) < 0:
            raise ValueError(f"negative qubit index in {self.targets!r}")
        if len(self.angles) != n_angles:
            raise ValueError(
                f"{self.kind} takes {n_angles} angle(s), got {len(self.angles)}"
            )
        if not all(np.isfinite(a) for a in self.angles):
            raise ValueError(f"non-finite angle in {self.angles!r}")


def gate_matrix(kind: str, angles: tuple[float, ...] = ()) -> np.ndarray:
    """Unitary for a gate kind: 2x2, or 4x4 ordered control-bit-major.

    For two-qubit kinds the row/column index is ``2*control_bit +
    target_bit``; CZ is symmetric so the distinction is moot there.
    """
    if kind == "H":
        return np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=np.complex128)
    if kind == "RX":
        (theta,) = angles
        c, s = np.cos(theta / 2), np.sin(theta / 2)
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=np.complex128)
    if kind == "RY":
        (theta,) = angles
        c, s = np.cos(theta / 2), np.sin(theta / 2)
        return np.array([[c, -s], [s, c]], dtype=np.complex128)
    if kind == "RZ":
        (theta,) = angles
        return np.array(
            [[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]],
            dtype=np.complex128,
        )
    if kind == "U1":
        (lam,) = angles
        return np.array([[1, 0], [0, np.exp(1j * lam)]], dtype=np.complex128)
    if kind == "U2":
        phi, lam = angles
        return _SQ2 * np.array(
            [[1, -np.exp(1j * lam)], [np.exp(1j * phi), np.exp(1j * (phi + lam))]],
            dtype=np.complex128,
        )
    if kind == "U3":
        theta, phi, lam = angles
        c, s = np.cos(theta / 2), np.sin(theta / 2)
        return np.array(
            [[c, -np.exp(1j * lam) * s], [np.exp(1j * phi) * s, np.exp(1j * (phi + lam)) * c]],
            dtype=np.complex128,
        )
    if kind == "CNOT":
        return np.array(
            [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]],
            dtype=np.complex128,
        )
    if kind == "CZ":
        return np.diag([1, 1, 1, -1]).astype(np.complex128)
    if kind == "CRX":
        (theta,) = angles
        c, s = np.cos(theta / 2), np.sin(theta / 2)
        m = np.eye(4, dtype=np.complex128)
        m[2:, 2:] = [[c, -1j * s], [-1j * s, c]]
        return m
    raise ValueError(f"unknown gate kind {kind!r}")


@dataclass
class Statevector:
    """Pure quantum state: 2**n_qubits complex amplitudes, unit norm."""

    n_qubits: int
    amps: np.ndarray

    def __post_init__(self):
        if len(self.amps) != 2**self.n_qubits:
            raise ValueError(
                f"amplitude vector has length {len(self.amps)}, "
                f"expected {2**self.n_qubits}"
            )

    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.amps) ** 2))


def new_state(n_qubits: int) -> Statevector:
    """All-zeros register |0...0>."""
    if not isinstance(n_qubits, (int, np.integer)) or not 1 <= n_qubits <= MAX_QUBITS:
        raise ValueError(
            f"register capacity is 1..{MAX_QUBITS} qubits, got {n_qubits!r}"
        )
    amps = np.zeros(2**n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return Statevector(int(n_qubits), amps)


def _apply_matrix(
    amps: np.ndarray, mat: np.ndarray, targets: tuple[int, ...], n: int
) -> np.ndarray:
    """Apply a 2x2 or 4x4 unitary to the given qubits of a dense state."""
    t = amps.reshape((2,) * n)
    if len(targets) == 1:
        ax = n - 1 - targets[0]
        out = np.moveaxis(np.tensordot(mat, t, axes=([1], [ax])), 0, ax)
    else:
        ax0, ax1 = n - 1 - targets[0], n - 1 - targets[1]
        u = mat.reshape(2, 2, 2, 2)
        out = np.moveaxis(
            np.tensordot(u, t, axes=([2, 3], [ax0, ax1])), (0, 1), (ax0, ax1)
        )
    return np.ascontiguousarray(out).reshape(-1)


def apply_gate(state: Statevector, gate: Gate) -> Statevector:
    """Return the state transformed by ``gate``; the input is untouched."""
    n = state.n_qubits
    if max(gate.targets) >= n:
        raise ValueError(
            f"gate targets {gate.targets} out of range for {n} qubit(s)"
        )
    mat = gate_matrix(gate.kind, gate.angles)
    return Statevector(n, _apply_matrix(state.amps, mat, gate.targets, n))


def expectation(state: Statevector, basis: str, qubit: int) -> float:
    """Expectation <psi| P |psi> of Pauli ``basis`` on one qubit.

    The value is real up to floating-point residue; the imaginary part
    is discarded.  Result lies in [-1, 1].
    """
    pauli = PAULI.get(basis)
    if pauli is None:
        raise ValueError(f"basis must be one of X, Y, Z, got {basis!r}")
    if not 0 <= qubit < state.n_qubits:
        raise ValueError(f"qubit {qubit} out of range for {state.n_qubits} qubit(s)")
    transformed = _apply_matrix(state.amps, pauli, (qubit,), state.n_qubits)
    return float(np.vdot(state.amps, transformed).real)
