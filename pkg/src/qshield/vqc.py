"""Parameterized circuits with parameter-shift differentiation.

A CircuitSpec is an ordered gate program whose rotation angles are
either fixed constants, components of an input vector, or trainable
parameters.  The two circuit builders produce the layered ansatz used
by the classifier heads: a per-qubit RY embedding followed by blocks of
RY/RZ rotations entangled with a CZ chain, optionally wrapped in
Hadamards with an RX input re-upload.

Outputs are the Z expectations of every qubit.  Gradients come from the
parameter-shift rule, which is exact for single-Pauli rotations; a CRX
slot needs the four-point variant because its generator has eigenvalues
{0, +1/2, -1/2} and its expectation mixes two frequencies.

Execution is batched: many angle assignments for the same program run
as one set of vectorized matrix applications, which keeps the shift-rule
jacobian at a single engine call.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .qsim import GATE_ARITY, MAX_QUBITS, gate_matrix

# gate kinds allowed to carry an input or trainable angle
SOURCED_KINDS = frozenset({"RX", "RY", "RZ", "CRX"})

# four-point shift coefficients for a controlled rotation:
# d<Z>/dt = d1*(f(t+pi/2) - f(t-pi/2)) - d2*(f(t+3pi/2) - f(t-3pi/2))
_SQ2 = np.sqrt(2.0)
CRX_SHIFTS = (np.pi / 2, -np.pi / 2, 3 * np.pi / 2, -3 * np.pi / 2)
CRX_COEFFS = (
    (_SQ2 + 1) / (4 * _SQ2),
    -(_SQ2 + 1) / (4 * _SQ2),
    -(_SQ2 - 1) / (4 * _SQ2),
    (_SQ2 - 1) / (4 * _SQ2),
)

# two-point rule for plain Pauli rotations
ROT_SHIFTS = (np.pi / 2, -np.pi / 2)
ROT_COEFFS = (0.5, -0.5)


@dataclass(frozen=True)
class Slot:
    """One program step: a gate plus where its angle comes from.

    source is "none" for angle-free gates, "fixed" for constant angles
    (stored in ``angles``), or "input"/"param" with ``index`` selecting
    the component of the input or parameter vector.
    """

    kind: str
    targets: tuple
    source: str = "none"
    angles: tuple = ()
    index: int = 0

    def __post_init__(self):
        arity = GATE_ARITY.get(self.kind)
        if arity is None:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        n_targets, n_angles = arity
        targets = tuple(int(t) for t in self.targets)
        object.__setattr__(self, "targets", targets)
        if len(targets) != n_targets:
            raise ValueError(f"{self.kind} takes {n_targets} target(s), got {len(targets)}")
        if len(set(targets)) != len(targets):
            raise ValueError(f"{self.kind} targets must be distinct, got {targets}")
        if any(t < 0 for t in targets):
            raise ValueError(f"targets must be non-negative, got {targets}")
        if self.source == "none":
            if n_angles != 0:
                raise ValueError(f"{self.kind} needs an angle source")
            if self.angles:
                raise ValueError(f"{self.kind} takes no angles")
        elif self.source == "fixed":
            if len(self.angles) != n_angles:
                raise ValueError(f"{self.kind} takes {n_angles} angle(s), got {len(self.angles)}")
            if not all(np.isfinite(a) for a in self.angles):
                raise ValueError(f"non-finite fixed angle in {self.kind} slot")
        elif self.source in ("input", "param"):
            if self.kind not in SOURCED_KINDS:
                raise ValueError(
                    f"{self.kind} cannot carry a {self.source} angle; "
                    f"allowed kinds: {sorted(SOURCED_KINDS)}"
                )
            if self.index < 0:
                raise ValueError(f"{self.source} index must be non-negative, got {self.index}")
            if self.angles:
                raise ValueError("sourced slots store no fixed angles")
        else:
            raise ValueError(f"unknown angle source {self.source!r}")


@dataclass(frozen=True)
class CircuitSpec:
    """Ordered gate program with declared input and parameter counts."""

    n_qubits: int
    program: tuple
    n_inputs: int
    n_params: int

    def __post_init__(self):
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise ValueError(f"register capacity is 1..{MAX_QUBITS} qubits, got {self.n_qubits}")
        object.__setattr__(self, "program", tuple(self.program))
        seen_inputs = set()
        seen_params = set()
        for slot in self.program:
            if any(t >= self.n_qubits for t in slot.targets):
                raise ValueError(
                    f"slot {slot.kind}{slot.targets} out of range for {self.n_qubits} qubit(s)"
                )
            if slot.source == "input":
                seen_inputs.add(slot.index)
            elif slot.source == "param":
                seen_params.add(slot.index)
        if seen_inputs != set(range(self.n_inputs)):
            raise ValueError(
                f"input slots must cover indices 0..{self.n_inputs - 1}, got {sorted(seen_inputs)}"
            )
        if seen_params != set(range(self.n_params)):
            raise ValueError(
                f"param slots must cover indices 0..{self.n_params - 1}, got {sorted(seen_params)}"
            )


def program_text(spec: CircuitSpec) -> str:
    """Plain-text listing, one gate per line, for goldens and debugging."""
    lines = []
    for slot in spec.program:
        targets = ",".join(str(t) for t in slot.targets)
        if slot.source == "none":
            src = "-"
        elif slot.source == "fixed":
            src = "fixed(" + ",".join(f"{a:.12g}" for a in slot.angles) + ")"
        else:
            src = f"{slot.source}({slot.index})"
        lines.append(f"{slot.kind} {targets} {src}")
    return "\n".join(lines)


def _variational_block(n_qubits: int, n_layers: int, ring: bool) -> tuple:
    """n_layers of per-qubit RY,RZ rotations followed by a CZ chain."""
    slots = []
    p = 0
    for _ in range(n_layers):
        for q in range(n_qubits):
            slots.append(Slot("RY", (q,), "param", index=p))
            slots.append(Slot("RZ", (q,), "param", index=p + 1))
            p += 2
        for q in range(n_qubits - 1):
            slots.append(Slot("CZ", (q, q + 1)))
        if ring and n_qubits > 2:
            slots.append(Slot("CZ", (n_qubits - 1, 0)))
    return tuple(slots), p


def _check_shape(n_qubits: int, n_layers: int):
    if n_qubits < 2:
        raise ValueError(f"n_qubits must be at least 2, got {n_qubits}")
    if n_qubits > MAX_QUBITS:
        raise ValueError(f"register capacity is 1..{MAX_QUBITS} qubits, got {n_qubits}")
    if n_layers < 0:
        raise ValueError(f"n_layers must be non-negative, got {n_layers}")


def build_hybrid1(n_qubits: int, n_layers: int, ring: bool = False) -> CircuitSpec:
    """Angle-embedding ansatz: RY(x_q) per qubit, then variational blocks."""
    _check_shape(n_qubits, n_layers)
    slots = [Slot("RY", (q,), "input", index=q) for q in range(n_qubits)]
    block, n_params = _variational_block(n_qubits, n_layers, ring)
    slots.extend(block)
    return CircuitSpec(n_qubits, tuple(slots), n_inputs=n_qubits, n_params=n_params)


def build_hybrid2(n_qubits: int, n_layers: int, ring: bool = False) -> CircuitSpec:
    """Superposition variant: H wrap plus an RX re-upload of the inputs.

    Each input component i angles both its RY slot and its RX slot, so
    input gradients sum the two shift-rule contributions.
    """
    _check_shape(n_qubits, n_layers)
    slots = [Slot("H", (q,)) for q in range(n_qubits)]
    slots.extend(Slot("RY", (q,), "input", index=q) for q in range(n_qubits))
    block, n_params = _variational_block(n_qubits, n_layers, ring)
    slots.extend(block)
    slots.extend(Slot("RX", (q,), "input", index=q) for q in range(n_qubits))
    slots.extend(Slot("H", (q,)) for q in range(n_qubits))
    return CircuitSpec(n_qubits, tuple(slots), n_inputs=n_qubits, n_params=n_params)


def init_params(spec: CircuitSpec, rng: np.random.Generator) -> np.ndarray:
    """Seeded uniform(-pi, pi) draw, one angle per trainable slot index."""
    return rng.uniform(-np.pi, np.pi, size=spec.n_params)


@dataclass
class QuantumLayer:
    """A CircuitSpec bound to a concrete parameter vector.

    Treated as immutable during evaluation; updates to ``params``
    happen between forward/jacobian calls under exclusive access.
    """

    spec: CircuitSpec
    params: np.ndarray

    def __post_init__(self):
        params = np.asarray(self.params, dtype=float)
        if params.shape != (self.spec.n_params,):
            raise ValueError(
                f"params must have shape ({self.spec.n_params},), got {params.shape}"
            )
        if not np.all(np.isfinite(params)):
            raise ValueError("non-finite parameter angle")
        self.params = params


# ------------------------------------------------------------------
# batched execution engine
# ------------------------------------------------------------------

def _rotation_mats(kind: str, theta: np.ndarray) -> np.ndarray:
    """Per-row gate matrices, shape (B, 2, 2) or (B, 4, 4) for CRX."""
    half = theta / 2.0
    c = np.cos(half)
    s = np.sin(half)
    b = theta.shape[0]
    if kind == "RY":
        m = np.zeros((b, 2, 2), dtype=complex)
        m[:, 0, 0] = c
        m[:, 0, 1] = -s
        m[:, 1, 0] = s
        m[:, 1, 1] = c
        return m
    if kind == "RX":
        m = np.zeros((b, 2, 2), dtype=complex)
        m[:, 0, 0] = c
        m[:, 0, 1] = -1j * s
        m[:, 1, 0] = -1j * s
        m[:, 1, 1] = c
        return m
    if kind == "RZ":
        m = np.zeros((b, 2, 2), dtype=complex)
        m[:, 0, 0] = np.exp(-1j * half)
        m[:, 1, 1] = np.exp(1j * half)
        return m
    if kind == "CRX":
        m = np.zeros((b, 4, 4), dtype=complex)
        m[:, 0, 0] = 1.0
        m[:, 1, 1] = 1.0
        m[:, 2, 2] = c
        m[:, 2, 3] = -1j * s
        m[:, 3, 2] = -1j * s
        m[:, 3, 3] = c
        return m
    raise ValueError(f"no batched rotation for kind {kind!r}")


def _apply_1q(states: np.ndarray, mat: np.ndarray, q: int, n: int) -> np.ndarray:
    # states (B, 2**n); mat (2,2) constant or (B,2,2) per row
    b = states.shape[0]
    high = 1 << (n - 1 - q)
    low = 1 << q
    view = states.reshape(b, high, 2, low)
    if mat.ndim == 2:
        out = np.einsum("ij,bhjl->bhil", mat, view)
    else:
        out = np.einsum("bij,bhjl->bhil", mat, view)
    return out.reshape(b, -1)


def _apply_2q(states: np.ndarray, mat: np.ndarray, targets: tuple, n: int) -> np.ndarray:
    # mat rows/cols indexed by 2*bit(first target) + bit(second target)
    b = states.shape[0]
    q_first, q_second = targets
    hi, lo = (q_first, q_second) if q_first > q_second else (q_second, q_first)
    above = 1 << (n - 1 - hi)
    mid = 1 << (hi - lo - 1)
    below = 1 << lo
    view = states.reshape(b, above, 2, mid, 2, below)
    t = mat.reshape(mat.shape[:-2] + (2, 2, 2, 2))
    batched = mat.ndim == 3
    if q_first == hi:
        sub = "buvxy,baxmyl->baumvl" if batched else "uvxy,baxmyl->baumvl"
    else:
        sub = "buvxy,baymxl->bavmul" if batched else "uvxy,baymxl->bavmul"
    out = np.einsum(sub, t, view)
    return out.reshape(b, -1)


def _run_program(spec: CircuitSpec, slot_angles: np.ndarray) -> np.ndarray:
    """Execute the program once per row of sourced-slot angles.

    slot_angles has one column per input/param slot in program order.
    Returns the final statevectors, shape (B, 2**n_qubits).
    """
    b = slot_angles.shape[0]
    n = spec.n_qubits
    states = np.zeros((b, 1 << n), dtype=complex)
    states[:, 0] = 1.0
    col = 0
    for slot in spec.program:
        if slot.source in ("input", "param"):
            mats = _rotation_mats(slot.kind, slot_angles[:, col])
            col += 1
        else:
            mats = gate_matrix(slot.kind, slot.angles)
        if len(slot.targets) == 1:
            states = _apply_1q(states, mats, slot.targets[0], n)
        else:
            states = _apply_2q(states, mats, slot.targets, n)
    return states


def _z_signs(n: int) -> np.ndarray:
    idx = np.arange(1 << n)
    return 1.0 - 2.0 * ((idx[:, None] >> np.arange(n)[None, :]) & 1)


def _z_readout(states: np.ndarray, n: int) -> np.ndarray:
    probs = states.real**2 + states.imag**2
    # einsum keeps one accumulation order for every batch size, so a
    # row evaluated alone is bitwise-equal to the same row in a batch
    return np.einsum("bi,iq->bq", probs, _z_signs(n))


def _sourced_slots(spec: CircuitSpec) -> list:
    return [slot for slot in spec.program if slot.source in ("input", "param")]


def _base_angles(layer: QuantumLayer, inputs: np.ndarray) -> np.ndarray:
    """Angle matrix (B, n_sourced) for a batch of input rows."""
    sourced = _sourced_slots(layer.spec)
    b = inputs.shape[0]
    angles = np.empty((b, len(sourced)))
    for c, slot in enumerate(sourced):
        if slot.source == "input":
            angles[:, c] = inputs[:, slot.index]
        else:
            angles[:, c] = layer.params[slot.index]
    return angles


def _check_inputs(layer: QuantumLayer, inputs) -> np.ndarray:
    arr = np.asarray(inputs, dtype=float)
    if arr.ndim != 1 or arr.shape[0] != layer.spec.n_inputs:
        raise ValueError(
            f"inputs must have shape ({layer.spec.n_inputs},), got {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite input angle")
    return arr


def forward(layer: QuantumLayer, inputs) -> np.ndarray:
    """Z expectation of every qubit after running the program."""
    arr = _check_inputs(layer, inputs)
    states = _run_program(layer.spec, _base_angles(layer, arr[None, :]))
    return _z_readout(states, layer.spec.n_qubits)[0]


def forward_batch(layer: QuantumLayer, inputs: np.ndarray) -> np.ndarray:
    """Vectorized forward over rows of ``inputs``, shape (B, n_inputs)."""
    arr = np.asarray(inputs, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != layer.spec.n_inputs:
        raise ValueError(
            f"inputs must have shape (batch, {layer.spec.n_inputs}), got {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite input angle")
    states = _run_program(layer.spec, _base_angles(layer, arr))
    return _z_readout(states, layer.spec.n_qubits)


def _slot_shifts(slot: Slot) -> tuple:
    if slot.kind == "CRX":
        return CRX_SHIFTS, CRX_COEFFS
    return ROT_SHIFTS, ROT_COEFFS


def jacobian(layer: QuantumLayer, inputs) -> tuple:
    """Parameter-shift derivatives of every output.

    Returns (d_outputs/d_params, d_outputs/d_inputs) with shapes
    (n_qubits, n_params) and (n_qubits, n_inputs).  All shifted
    evaluations run as one batched engine call.  Slots sharing an input
    index contribute additively to that input's column.
    """
    arr = _check_inputs(layer, inputs)
    d_params, d_inputs = jacobian_batch(layer, arr[None, :])
    return d_params[0], d_inputs[0]


def jacobian_batch(layer: QuantumLayer, inputs: np.ndarray) -> tuple:
    """Shift-rule jacobians for a whole batch, shapes (B, n_qubits, n_*)."""
    spec = layer.spec
    arr = np.asarray(inputs, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != spec.n_inputs:
        raise ValueError(
            f"inputs must have shape (batch, {spec.n_inputs}), got {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite input angle")
    b = arr.shape[0]
    sourced = _sourced_slots(spec)
    base = _base_angles(layer, arr)

    # one block of b rows per (slot, shift); combined after a single run
    blocks = []
    combine = []  # (slot, coeff, block_offset)
    offset = 0
    for c, slot in enumerate(sourced):
        shifts, coeffs = _slot_shifts(slot)
        for shift, coeff in zip(shifts, coeffs):
            rows = base.copy()
            rows[:, c] += shift
            blocks.append(rows)
            combine.append((slot, coeff, offset))
            offset += b

    d_params = np.zeros((b, spec.n_qubits, spec.n_params))
    d_inputs = np.zeros((b, spec.n_qubits, spec.n_inputs))
    if not blocks:
        return d_params, d_inputs

    states = _run_program(spec, np.concatenate(blocks, axis=0))
    outs = _z_readout(states, spec.n_qubits)
    for slot, coeff, off in combine:
        contrib = coeff * outs[off:off + b]
        if slot.source == "param":
            d_params[:, :, slot.index] += contrib
        else:
            d_inputs[:, :, slot.index] += contrib
    return d_params, d_inputs
