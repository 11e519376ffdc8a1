"""Statevector basics: registers, gates, and Z readout.

A register of n qubits is a vector of 2**n complex amplitudes.  Qubit 0
is the least significant bit of the amplitude index, so for two qubits
the order is |00>, |01> (qubit 0 set), |10>, |11>.
"""

import numpy as np

from qshield.qsim import Gate, apply_gate, expectation, new_state

# a fresh register starts in |00>: amplitude 1 on index 0
state = new_state(2)
print("initial amplitudes:", np.round(state.amps, 3))

# Hadamard on qubit 0 spreads the amplitude over |00> and |01>
state = apply_gate(state, Gate("H", (0,)))
print("after H on qubit 0:", np.round(state.amps, 3))

# CNOT with control 0 copies the excitation onto qubit 1: a Bell pair
state = apply_gate(state, Gate("CNOT", (0, 1)))
print("after CNOT(0, 1):  ", np.round(state.amps, 3))

# each qubit alone looks maximally mixed: <Z> = 0 on both
print("<Z0> =", round(expectation(state, "Z", 0), 12),
      " <Z1> =", round(expectation(state, "Z", 1), 12))

# rotations take angles; RY(pi) flips |0> to |1>
flipped = apply_gate(new_state(1), Gate("RY", (0,), (np.pi,)))
print("RY(pi) amplitudes:", np.round(flipped.amps, 3))
print("<Z> after the flip:", round(expectation(flipped, "Z", 0), 12))

# a rotation by theta tilts <Z> to cos(theta)
theta = 2 * np.pi / 3
tilted = apply_gate(new_state(1), Gate("RY", (0,), (theta,)))
print(f"<Z> after RY({theta:.3f}) = {expectation(tilted, 'Z', 0):.6f}"
      f"  (cos = {np.cos(theta):.6f})")

# gates never change the total probability
norm = np.linalg.norm(state.amps)
print("norm of the Bell state:", round(norm, 12))
