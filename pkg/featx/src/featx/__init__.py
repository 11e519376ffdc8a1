"""featx: frozen-ResNet18 feature extraction for annotated sign crops.

Reads a CSV of annotated boxes, crops each region with a margin, runs
it through a frozen 18-layer residual network, and writes the
512-dimensional pooled penultimate activations as a QFV1 feature file.
"""

__version__ = "0.1.0"

from featx.extract import (
    FEATURE_DIM,
    INPUT_SIZE,
    WEIGHT_MODES,
    WeightsError,
    build_network,
    crop_box,
    extract,
    load_crop,
)
from featx.qfv import MAGIC, write_features
from featx.records import (
    MIN_BOX_SIDE,
    AnnotationError,
    AnnotationRecord,
    binary_stop_sign,
    read_annotations,
    read_class_map,
)

__all__ = [
    "FEATURE_DIM",
    "INPUT_SIZE",
    "MAGIC",
    "MIN_BOX_SIDE",
    "WEIGHT_MODES",
    "AnnotationError",
    "AnnotationRecord",
    "WeightsError",
    "binary_stop_sign",
    "build_network",
    "crop_box",
    "extract",
    "load_crop",
    "read_annotations",
    "read_class_map",
    "write_features",
]
