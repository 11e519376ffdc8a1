"""Classical layers, Adam, and the dense-quantum-dense model composition.

Every model is dense_in -> head -> dense_out.  The classical head is a
ReLU6; the hybrid heads are parameterized circuits whose Z expectations
replace the activation.  Gradients flow end to end: softmax
cross-entropy, the output layer, then either the ReLU6 subgradient or
the circuit jacobian, then the input layer.  All trainable parameters
live in one flat vector (dense_in weights row-major, dense_in bias,
circuit params, dense_out weights row-major, dense_out bias) shared by
the optimizer, the gradient packing, and the checkpoint format.

Reductions over a batch run in a fixed order (einsum over sorted sample
indices), so a given seed reproduces training bitwise.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import vqc
from .vqc import QuantumLayer, build_hybrid1, build_hybrid2, init_params, program_text

HEAD_KINDS = ("classical", "hybrid1", "hybrid2")
_HEAD_CODES = {"classical": 0, "hybrid1": 1, "hybrid2": 2}
_HEAD_NAMES = {v: k for k, v in _HEAD_CODES.items()}

CHECKPOINT_MAGIC = b"QHM1"
_HEADER = struct.Struct("<5I")  # feature_dim, width, n_classes, n_qubits, n_layers


class NumericError(RuntimeError):
    """Training produced a non-finite loss or gradient."""


class CheckpointError(Exception):
    """Checkpoint file is malformed or inconsistent."""


# ------------------------------------------------------------- activations

def relu6(x):
    """Elementwise min(max(x, 0), 6)."""
    return np.minimum(np.maximum(np.asarray(x, dtype=float), 0.0), 6.0)


def relu6_grad(x):
    """Subgradient of relu6: 1 on the open interval (0, 6), else 0."""
    arr = np.asarray(x, dtype=float)
    return ((arr > 0.0) & (arr < 6.0)).astype(float)


# ------------------------------------------------------------------- loss

def softmax_cross_entropy_batch(logits: np.ndarray, labels: np.ndarray):
    """Per-row stable softmax cross-entropy and its logit gradient."""
    z = logits - logits.max(axis=1, keepdims=True)
    ez = np.exp(z)
    denom = ez.sum(axis=1, keepdims=True)
    rows = np.arange(logits.shape[0])
    losses = np.log(denom[:, 0]) - z[rows, labels]
    np.maximum(losses, 0.0, out=losses)  # guard the >= 0 contract against rounding
    grads = ez / denom
    grads[rows, labels] -= 1.0
    return losses, grads


def softmax_cross_entropy(logits, label):
    """Loss -log softmax(logits)[label] and gradient softmax - onehot."""
    arr = np.asarray(logits, dtype=float)
    if arr.ndim != 1 or arr.shape[0] < 2:
        raise ValueError(f"logits must be a vector of at least 2 classes, got shape {arr.shape}")
    label = int(label)
    if not 0 <= label < arr.shape[0]:
        raise ValueError(f"label {label} out of range for {arr.shape[0]} classes")
    losses, grads = softmax_cross_entropy_batch(arr[None, :], np.array([label]))
    return float(losses[0]), grads[0]


# ------------------------------------------------------------------ layers

@dataclass
class DenseLayer:
    """Affine map x -> weights @ x + bias with weights (out_dim, in_dim)."""

    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.bias = np.asarray(self.bias, dtype=float)
        if self.weights.ndim != 2:
            raise ValueError(f"weights must be 2-d, got shape {self.weights.shape}")
        if self.bias.shape != (self.weights.shape[0],):
            raise ValueError(
                f"bias shape {self.bias.shape} does not match {self.weights.shape[0]} outputs"
            )
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.bias))):
            raise ValueError("non-finite layer entries")

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]


@dataclass
class HybridModel:
    """dense_in -> (ReLU6 | quantum circuit) -> dense_out."""

    head_kind: str
    dense_in: DenseLayer
    quantum: QuantumLayer | None
    dense_out: DenseLayer

    def __post_init__(self):
        if self.head_kind not in HEAD_KINDS:
            raise ValueError(f"unknown head kind {self.head_kind!r}")
        width = self.dense_in.out_dim
        if self.head_kind == "classical":
            if self.quantum is not None:
                raise ValueError("classical head takes no quantum layer")
        else:
            if self.quantum is None:
                raise ValueError(f"{self.head_kind} head needs a quantum layer")
            spec = self.quantum.spec
            if spec.n_inputs != width or spec.n_qubits != width:
                raise ValueError(
                    f"quantum layer expects width {spec.n_inputs}/{spec.n_qubits}, "
                    f"dense_in produces {width}"
                )
        if self.dense_out.in_dim != width:
            raise ValueError(
                f"dense_out expects {self.dense_out.in_dim} inputs, head produces {width}"
            )

    @property
    def feature_dim(self) -> int:
        return self.dense_in.in_dim

    @property
    def width(self) -> int:
        return self.dense_in.out_dim

    @property
    def n_classes(self) -> int:
        return self.dense_out.out_dim

    @property
    def n_quantum_params(self) -> int:
        return 0 if self.quantum is None else self.quantum.spec.n_params


def _draw_dense(rng: np.random.Generator, in_dim: int, out_dim: int) -> DenseLayer:
    bound = 1.0 / np.sqrt(in_dim)
    weights = rng.uniform(-bound, bound, size=(out_dim, in_dim))
    bias = rng.uniform(-bound, bound, size=out_dim)
    return DenseLayer(weights, bias)


def build_model(
    head_kind: str,
    feature_dim: int,
    n_classes: int,
    n_qubits: int = 4,
    n_layers: int = 6,
    width: int | None = None,
    rng: np.random.Generator | None = None,
) -> HybridModel:
    """Seeded model factory.

    The classical hidden width defaults to n_qubits so the baseline and
    the hybrid heads compare at matching bottleneck size.  Dense layers
    draw uniform(-1/sqrt(in_dim), +1/sqrt(in_dim)); circuit parameters
    draw uniform(-pi, pi).  Draws happen in declaration order.
    """
    if head_kind not in HEAD_KINDS:
        raise ValueError(f"unknown head kind {head_kind!r}")
    if feature_dim < 1:
        raise ValueError(f"feature_dim must be positive, got {feature_dim}")
    if n_classes < 2:
        raise ValueError(f"n_classes must be at least 2, got {n_classes}")
    rng = np.random.default_rng() if rng is None else rng
    if head_kind == "classical":
        hidden = n_qubits if width is None else width
        if hidden < 1:
            raise ValueError(f"width must be positive, got {hidden}")
        dense_in = _draw_dense(rng, feature_dim, hidden)
        quantum = None
    else:
        if width is not None and width != n_qubits:
            raise ValueError(f"hybrid width is the qubit count ({n_qubits}), got {width}")
        hidden = n_qubits
        build = build_hybrid1 if head_kind == "hybrid1" else build_hybrid2
        spec = build(n_qubits, n_layers)
        dense_in = _draw_dense(rng, feature_dim, n_qubits)
        quantum = QuantumLayer(spec, init_params(spec, rng))
    dense_out = _draw_dense(rng, hidden, n_classes)
    return HybridModel(head_kind, dense_in, quantum, dense_out)


# ----------------------------------------------------------- forward pass

def _check_features(model: HybridModel, x: np.ndarray) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != model.feature_dim:
        raise ValueError(
            f"features must have shape (batch, {model.feature_dim}), got {arr.shape}"
        )
    return arr


def _hidden_batch(model: HybridModel, x: np.ndarray):
    """Pre-activation and head output for a feature batch."""
    pre = np.einsum("bf,wf->bw", x, model.dense_in.weights) + model.dense_in.bias
    if model.head_kind == "classical":
        return pre, relu6(pre)
    return pre, vqc.forward_batch(model.quantum, pre)


def model_forward_batch(model: HybridModel, x: np.ndarray) -> np.ndarray:
    """Logits for a batch of feature rows, shape (batch, n_classes)."""
    arr = _check_features(model, x)
    _, head = _hidden_batch(model, arr)
    return np.einsum("bw,cw->bc", head, model.dense_out.weights) + model.dense_out.bias


def model_forward(model: HybridModel, x) -> np.ndarray:
    """Logits for a single feature vector."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1 or arr.shape[0] != model.feature_dim:
        raise ValueError(f"x must have shape ({model.feature_dim},), got {arr.shape}")
    return model_forward_batch(model, arr[None, :])[0]


def predict(model: HybridModel, x: np.ndarray) -> np.ndarray:
    """Argmax class per row (lowest index wins ties)."""
    return np.argmax(model_forward_batch(model, x), axis=1)


def accuracy(model: HybridModel, x: np.ndarray, labels: np.ndarray) -> float:
    labels = np.asarray(labels)
    if labels.shape[0] == 0:
        raise ValueError("empty dataset")
    return float(np.mean(predict(model, x) == labels))


# ---------------------------------------------------------- backward pass

def model_backward_batch(model: HybridModel, x: np.ndarray, labels: np.ndarray):
    """Mean loss, flat mean parameter gradient, and d_loss/d_x per row."""
    arr = _check_features(model, x)
    labels = np.asarray(labels, dtype=int)
    if labels.shape != (arr.shape[0],):
        raise ValueError(f"labels must have shape ({arr.shape[0]},), got {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= model.n_classes):
        raise ValueError(f"label out of range for {model.n_classes} classes")
    b = arr.shape[0]

    pre, head = _hidden_batch(model, arr)
    logits = np.einsum("bw,cw->bc", head, model.dense_out.weights) + model.dense_out.bias
    losses, d_logits = softmax_cross_entropy_batch(logits, labels)

    d_w_out = np.einsum("bc,bw->cw", d_logits, head) / b
    d_b_out = np.einsum("bc->c", d_logits) / b
    d_head = np.einsum("bc,cw->bw", d_logits, model.dense_out.weights)

    if model.head_kind == "classical":
        d_pre = d_head * relu6_grad(pre)
        q_grads = np.zeros(0)
    else:
        jac_params, jac_inputs = vqc.jacobian_batch(model.quantum, pre)
        q_grads = np.einsum("bq,bqp->p", d_head, jac_params) / b
        d_pre = np.einsum("bq,bqw->bw", d_head, jac_inputs)

    d_w_in = np.einsum("bw,bf->wf", d_pre, arr) / b
    d_b_in = np.einsum("bw->w", d_pre) / b
    d_x = np.einsum("bw,wf->bf", d_pre, model.dense_in.weights)

    grads = np.concatenate([d_w_in.ravel(), d_b_in, q_grads, d_w_out.ravel(), d_b_out])
    return float(np.mean(losses)), grads, d_x


def model_backward(model: HybridModel, x, label):
    """Loss, flat parameter gradient, and d_loss/d_x for one sample."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1 or arr.shape[0] != model.feature_dim:
        raise ValueError(f"x must have shape ({model.feature_dim},), got {arr.shape}")
    loss, grads, d_x = model_backward_batch(model, arr[None, :], np.array([int(label)]))
    return loss, grads, d_x[0]


# -------------------------------------------------------- parameter vector

def params_vector(model: HybridModel) -> np.ndarray:
    """All trainable parameters as one flat array in declaration order."""
    parts = [model.dense_in.weights.ravel(), model.dense_in.bias]
    if model.quantum is not None:
        parts.append(model.quantum.params)
    parts.extend([model.dense_out.weights.ravel(), model.dense_out.bias])
    return np.concatenate(parts)


def set_params(model: HybridModel, vec: np.ndarray):
    """Write a flat parameter vector back into the model in place."""
    vec = np.asarray(vec, dtype=float)
    expected = params_vector(model).size
    if vec.shape != (expected,):
        raise ValueError(f"expected {expected} parameters, got shape {vec.shape}")
    if not np.all(np.isfinite(vec)):
        raise ValueError("non-finite parameter")
    w, f = model.width, model.feature_dim
    c = model.n_classes
    q = model.n_quantum_params
    pos = 0
    model.dense_in.weights = vec[pos:pos + w * f].reshape(w, f).copy()
    pos += w * f
    model.dense_in.bias = vec[pos:pos + w].copy()
    pos += w
    if model.quantum is not None:
        model.quantum.params = vec[pos:pos + q].copy()
        pos += q
    model.dense_out.weights = vec[pos:pos + c * w].reshape(c, w).copy()
    pos += c * w
    model.dense_out.bias = vec[pos:pos + c].copy()


# -------------------------------------------------------------------- adam

@dataclass
class AdamState:
    """Bias-corrected Adam accumulators for one flat parameter vector."""

    m: np.ndarray
    v: np.ndarray
    step: int = 0
    lr: float = 0.004
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def adam_init(n_params: int, lr: float = 0.004, beta1: float = 0.9,
              beta2: float = 0.999, eps: float = 1e-8) -> AdamState:
    return AdamState(np.zeros(n_params), np.zeros(n_params), 0, lr, beta1, beta2, eps)


def adam_step(state: AdamState, params: np.ndarray, grads: np.ndarray) -> np.ndarray:
    """One standard Adam update; mutates ``state``, returns new params."""
    params = np.asarray(params, dtype=float)
    grads = np.asarray(grads, dtype=float)
    if params.shape != state.m.shape or grads.shape != state.m.shape:
        raise ValueError(
            f"shape mismatch: state {state.m.shape}, params {params.shape}, grads {grads.shape}"
        )
    if not np.all(np.isfinite(grads)):
        raise ValueError("non-finite gradient")
    state.step += 1
    state.m = state.beta1 * state.m + (1 - state.beta1) * grads
    state.v = state.beta2 * state.v + (1 - state.beta2) * grads**2
    m_hat = state.m / (1 - state.beta1**state.step)
    v_hat = state.v / (1 - state.beta2**state.step)
    return params - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)


# ---------------------------------------------------------------- training

@dataclass
class TrainConfig:
    epochs: int = 30
    batch_size: int = 4
    seed: int = 0
    lr: float = 0.004

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError(f"epochs must be non-negative, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be positive, got {self.batch_size}")


def train(model: HybridModel, train_set, config: TrainConfig | None = None):
    """Mini-batch Adam training; returns (model, per-epoch trace).

    Shuffling is seeded and batches average gradients over samples
    sorted by index, so the whole run is reproducible bitwise.  Raises
    NumericError as soon as a loss or gradient goes non-finite.
    """
    config = TrainConfig() if config is None else config
    features = np.asarray(train_set.features, dtype=float)
    labels = np.asarray(train_set.labels, dtype=int)
    n = features.shape[0]
    if n == 0:
        raise ValueError("empty dataset")
    if features.ndim != 2 or features.shape[1] != model.feature_dim:
        raise ValueError(
            f"features must have shape (n, {model.feature_dim}), got {features.shape}"
        )
    if labels.min() < 0 or labels.max() >= model.n_classes:
        raise ValueError(f"label out of range for {model.n_classes} classes")

    rng = np.random.default_rng(config.seed)
    params = params_vector(model)
    state = adam_init(params.size, lr=config.lr)
    trace = []
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        loss_sum = 0.0
        for start in range(0, n, config.batch_size):
            idx = np.sort(order[start:start + config.batch_size])
            loss, grads, _ = model_backward_batch(model, features[idx], labels[idx])
            if not np.isfinite(loss) or not np.all(np.isfinite(grads)):
                raise NumericError(f"non-finite loss or gradient at epoch {epoch}")
            params = adam_step(state, params, grads)
            set_params(model, params)
            loss_sum += loss * idx.size
        trace.append(
            {
                "epoch": epoch,
                "loss": loss_sum / n,
                "accuracy": accuracy(model, features, labels),
            }
        )
    return model, trace


# ------------------------------------------------------------- checkpoints

def _standard_spec(head_kind: str, n_qubits: int, n_layers: int):
    build = build_hybrid1 if head_kind == "hybrid1" else build_hybrid2
    return build(n_qubits, n_layers)


def save_checkpoint(model: HybridModel, path):
    """Write the flat binary checkpoint.

    Only the standard chain-topology circuits serialize; the header has
    no room for custom programs.
    """
    if model.quantum is None:
        n_qubits = n_layers = 0
    else:
        n_qubits = model.quantum.spec.n_qubits
        n_params = model.quantum.spec.n_params
        n_layers = n_params // (2 * n_qubits)
        standard = _standard_spec(model.head_kind, n_qubits, n_layers)
        if program_text(model.quantum.spec) != program_text(standard):
            raise CheckpointError("only the standard circuit layouts serialize")
    header = CHECKPOINT_MAGIC + bytes([_HEAD_CODES[model.head_kind]]) + _HEADER.pack(
        model.feature_dim, model.width, model.n_classes, n_qubits, n_layers
    )
    payload = params_vector(model).astype("<f8").tobytes()
    Path(path).write_bytes(header + payload)


def _zero_model(head_kind: str, feature_dim: int, width: int, n_classes: int,
                n_qubits: int, n_layers: int) -> HybridModel:
    dense_in = DenseLayer(np.zeros((width, feature_dim)), np.zeros(width))
    dense_out = DenseLayer(np.zeros((n_classes, width)), np.zeros(n_classes))
    if head_kind == "classical":
        quantum = None
    else:
        spec = _standard_spec(head_kind, n_qubits, n_layers)
        quantum = QuantumLayer(spec, np.zeros(spec.n_params))
    return HybridModel(head_kind, dense_in, quantum, dense_out)


def checkpoint_header(path) -> dict:
    """Decode just the fixed-size checkpoint header."""
    data = Path(path).read_bytes()
    header_len = len(CHECKPOINT_MAGIC) + 1 + _HEADER.size
    if len(data) < header_len:
        raise CheckpointError(f"truncated header: {len(data)} bytes")
    if data[:4] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"bad magic {data[:4]!r}")
    code = data[4]
    if code not in _HEAD_NAMES:
        raise CheckpointError(f"unknown head kind code {code}")
    feature_dim, width, n_classes, n_qubits, n_layers = _HEADER.unpack_from(data, 5)
    head_kind = _HEAD_NAMES[code]
    if feature_dim < 1 or width < 1 or n_classes < 2:
        raise CheckpointError(
            f"bad dimensions: feature_dim {feature_dim}, width {width}, n_classes {n_classes}"
        )
    if head_kind == "classical":
        if n_qubits != 0 or n_layers != 0:
            raise CheckpointError("classical head carries zero qubit fields")
        n_quantum = 0
    else:
        if n_qubits != width:
            raise CheckpointError(f"qubit count {n_qubits} must equal width {width}")
        if not 2 <= n_qubits <= 12:
            raise CheckpointError(f"qubit count {n_qubits} outside 2..12")
        n_quantum = 2 * n_qubits * n_layers
    n_params = (
        feature_dim * width + width + n_quantum + width * n_classes + n_classes
    )
    return {
        "head_kind": head_kind,
        "feature_dim": feature_dim,
        "width": width,
        "n_classes": n_classes,
        "n_qubits": n_qubits,
        "n_layers": n_layers,
        "n_params": n_params,
        "header_bytes": header_len,
    }


def load_checkpoint(path) -> HybridModel:
    """Read a checkpoint back into a model, validating every field."""
    info = checkpoint_header(path)
    data = Path(path).read_bytes()
    expected = info["header_bytes"] + 8 * info["n_params"]
    if len(data) != expected:
        raise CheckpointError(f"payload length {len(data)} bytes, expected {expected}")
    params = np.frombuffer(data[info["header_bytes"]:], dtype="<f8").astype(float)
    if not np.all(np.isfinite(params)):
        raise CheckpointError("non-finite parameter")
    model = _zero_model(
        info["head_kind"], info["feature_dim"], info["width"],
        info["n_classes"], info["n_qubits"], info["n_layers"],
    )
    set_params(model, params)
    return model
