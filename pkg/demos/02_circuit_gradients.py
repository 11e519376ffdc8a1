"""Variational circuits: programs, forward passes, and exact gradients.

The two circuit builders produce fixed gate programs whose rotation
angles come from three sources: fixed constants, the data vector, or
the trainable parameter vector.  The parameter-shift rule gives exact
derivatives of every Z readout, which we check against finite
differences.
"""

import numpy as np

from qshield.vqc import (
    QuantumLayer, build_hybrid1, forward, init_params, jacobian, program_text,
)

# a 3-qubit circuit with one variational block
spec = build_hybrid1(3, 1)
print(f"hybrid1(3, 1): {spec.n_inputs} inputs, {spec.n_params} parameters")
print(program_text(spec))
print()

rng = np.random.default_rng(42)
layer = QuantumLayer(spec, init_params(spec, rng))
inputs = rng.uniform(-np.pi, np.pi, spec.n_inputs)

# the forward pass returns one <Z> per qubit, each in [-1, 1]
outputs = forward(layer, inputs)
print("readout:", np.round(outputs, 6))

# parameter-shift jacobians: d outputs / d params and d outputs / d inputs
d_params, d_inputs = jacobian(layer, inputs)
print("jacobian shapes:", d_params.shape, d_inputs.shape)

# compare one parameter column against a central finite difference
h = 1e-6
k = 4
bumped_up = layer.params.copy()
bumped_dn = layer.params.copy()
bumped_up[k] += h
bumped_dn[k] -= h
fd = (forward(QuantumLayer(spec, bumped_up), inputs)
      - forward(QuantumLayer(spec, bumped_dn), inputs)) / (2 * h)
print(f"param {k} shift rule:", np.round(d_params[:, k], 8))
print(f"param {k} finite diff:", np.round(fd, 8))
print("max gap:", float(np.max(np.abs(d_params[:, k] - fd))))

# the same check over every input coordinate
worst = 0.0
for j in range(spec.n_inputs):
    up = inputs.copy()
    dn = inputs.copy()
    up[j] += h
    dn[j] -= h
    fd = (forward(layer, up) - forward(layer, dn)) / (2 * h)
    worst = max(worst, float(np.max(np.abs(d_inputs[:, j] - fd))))
print("worst input-gradient gap:", worst)
