"""QFV1 feature-set writer.

Byte layout, little-endian, packed, no padding or trailing bytes:

    magic        4 bytes   b"QFV1"
    n_samples    u32       >= 1
    feature_dim  u32       >= 1
    n_classes    u32       exactly max(label) + 1
    features     f32 * n_samples * feature_dim, row-major
    labels       u32 * n_samples, each < n_classes

The class count is written tight (max label + 1) so strict loaders can
detect any single-byte header corruption.
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"QFV1"
_COUNTS = struct.Struct("<3I")


def write_features(path, features, labels) -> None:
    """Write one feature set; raises ValueError on malformed inputs.

    Features must be a finite nonempty 2-D array whose values survive
    narrowing to float32; labels must be non-negative integers, one per
    row.
    """
    feats = np.asarray(features, dtype=np.float64)
    labs = np.asarray(labels)
    if feats.ndim != 2 or feats.shape[0] < 1 or feats.shape[1] < 1:
        raise ValueError(
            f"features must be a nonempty 2-D array, got shape {feats.shape}"
        )
    if labs.shape != (feats.shape[0],):
        raise ValueError(
            f"need one label per row: {feats.shape[0]} rows, {labs.shape} labels"
        )
    if not np.issubdtype(labs.dtype, np.integer):
        raise ValueError(f"labels must be integers, got dtype {labs.dtype}")
    if labs.min() < 0:
        raise ValueError(f"labels must be non-negative, got min {labs.min()}")
    if not np.all(np.isfinite(feats)):
        raise ValueError("features must be finite")
    # narrowing can overflow to inf even when the float64 input is finite;
    # the check below turns that into an error, so the warning is noise
    with np.errstate(over="ignore"):
        f32 = feats.astype("<f4")
    if not np.all(np.isfinite(f32)):
        raise ValueError("features overflow float32")
    n_samples, feature_dim = f32.shape
    n_classes = int(labs.max()) + 1
    blob = (
        MAGIC
        + _COUNTS.pack(n_samples, feature_dim, n_classes)
        + f32.tobytes(order="C")
        + labs.astype("<u4").tobytes()
    )
    with open(path, "wb") as fh:
        fh.write(blob)
