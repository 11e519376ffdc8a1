"""Hybrid classical-quantum classifier testbed with adversarial evaluation."""

__version__ = "0.1.0"

from .qsim import Gate, MAX_QUBITS, apply_gate, expectation, gate_matrix, new_state
from .vqc import (
    CircuitSpec,
    QuantumLayer,
    Slot,
    build_hybrid1,
    build_hybrid2,
    forward,
    forward_batch,
    init_params,
    jacobian,
    jacobian_batch,
    program_text,
)
from .nn import (
    AdamState,
    CheckpointError,
    DenseLayer,
    HybridModel,
    NumericError,
    TrainConfig,
    accuracy,
    adam_init,
    adam_step,
    build_model,
    checkpoint_header,
    load_checkpoint,
    model_backward,
    model_backward_batch,
    model_forward,
    model_forward_batch,
    params_vector,
    predict,
    save_checkpoint,
    set_params,
    train,
)
from .data import (
    FeatureFormatError,
    FeatureSet,
    SplitSpec,
    StandardizeStats,
    load_features,
    save_features,
    split,
    standardize,
    synth_gaussian,
)
from .attacks import (
    METHODS,
    AttackConfig,
    craft,
    craft_set,
    evaluate_under_attack,
    fgsm,
    gradient_attack,
    make_grad_oracle,
    make_loss_oracle,
    pgd_l2,
    project_l1,
    sparse_l1_descent,
    spsa,
)

__all__ = [
    "__version__",
    "Gate", "MAX_QUBITS", "apply_gate", "expectation", "gate_matrix", "new_state",
    "CircuitSpec", "QuantumLayer", "Slot", "build_hybrid1", "build_hybrid2",
    "forward", "forward_batch", "init_params", "jacobian", "jacobian_batch",
    "program_text",
    "AdamState", "CheckpointError", "DenseLayer", "HybridModel", "NumericError",
    "TrainConfig", "accuracy", "adam_init", "adam_step", "build_model",
    "checkpoint_header", "load_checkpoint", "model_backward",
    "model_backward_batch", "model_forward", "model_forward_batch",
    "params_vector", "predict", "save_checkpoint", "set_params", "train",
    "FeatureFormatError", "FeatureSet", "SplitSpec", "StandardizeStats",
    "load_features", "save_features", "split", "standardize", "synth_gaussian",
    "METHODS", "AttackConfig", "craft", "craft_set", "evaluate_under_attack",
    "fgsm", "gradient_attack", "make_grad_oracle", "make_loss_oracle",
    "pgd_l2", "project_l1", "sparse_l1_descent", "spsa",
]
