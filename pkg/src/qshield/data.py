"""Feature-set persistence, splitting, standardization, synthetic data.

The on-disk format is deliberately rigid: magic "QFV1", three u32
little-endian counts (n_samples, feature_dim, n_classes), n_samples *
feature_dim f32 features row-major, n_samples u32 labels, nothing else.
The loader additionally requires the class count to be tight
(n_classes == max(label) + 1).  Together with exact length accounting
this makes every single-byte corruption of the 16-byte header
rejectable; an inflated class count would otherwise slip through.

Standardization statistics always come from the training split so a
perturbation budget in standardized units means the same thing for
train, test, and adversarial points.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"QFV1"
_COUNTS = struct.Struct("<3I")


class FeatureFormatError(Exception):
    """Feature file is malformed: bad magic, wrong length, bad labels."""


@dataclass
class FeatureSet:
    """Immutable-by-convention bundle of feature rows and class labels."""

    features: np.ndarray
    labels: np.ndarray
    n_classes: int

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        if self.features.ndim != 2 or self.features.shape[0] < 1:
            raise ValueError(f"features must be (n >= 1, dim), got shape {self.features.shape}")
        if self.labels.shape != (self.features.shape[0],):
            raise ValueError(
                f"labels shape {self.labels.shape} does not match {self.features.shape[0]} samples"
            )
        if not np.all(np.isfinite(self.features)):
            raise ValueError("non-finite feature value")
        if self.n_classes < 1:
            raise ValueError(f"n_classes must be positive, got {self.n_classes}")
        if self.labels.min() < 0 or self.labels.max() >= self.n_classes:
            raise ValueError(
                f"labels must lie in 0..{self.n_classes - 1}, "
                f"got range {self.labels.min()}..{self.labels.max()}"
            )

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]


# -------------------------------------------------------------- file format

def save_features(fset: FeatureSet, path):
    """Write the binary feature file; see the module docstring for layout."""
    top = int(fset.labels.max())
    if top + 1 != fset.n_classes:
        raise FeatureFormatError(
            f"cannot save: n_classes is {fset.n_classes} but the largest label is {top}; "
            "the format requires a tight class count"
        )
    blob = (
        MAGIC
        + _COUNTS.pack(fset.n_samples, fset.feature_dim, fset.n_classes)
        + fset.features.astype("<f4").tobytes()
        + fset.labels.astype("<u4").tobytes()
    )
    Path(path).write_bytes(blob)


def load_features(path) -> FeatureSet:
    """Read and fully validate a feature file."""
    data = Path(path).read_bytes()
    if len(data) < 16:
        raise FeatureFormatError(f"truncated header: {len(data)} bytes, need 16")
    if data[:4] != MAGIC:
        raise FeatureFormatError(f"bad magic {data[:4]!r}, expected {MAGIC!r}")
    n_samples, feature_dim, n_classes = _COUNTS.unpack_from(data, 4)
    if n_samples < 1:
        raise FeatureFormatError("n_samples must be positive")
    if feature_dim < 1:
        raise FeatureFormatError("feature_dim must be positive")
    if n_classes < 1:
        raise FeatureFormatError("n_classes must be positive")
    expected = 16 + 4 * n_samples * feature_dim + 4 * n_samples
    if len(data) != expected:
        raise FeatureFormatError(f"file is {len(data)} bytes, expected {expected}")
    features = np.frombuffer(
        data, dtype="<f4", count=n_samples * feature_dim, offset=16
    ).astype(float).reshape(n_samples, feature_dim)
    labels = np.frombuffer(
        data, dtype="<u4", count=n_samples, offset=16 + 4 * n_samples * feature_dim
    ).astype(int)
    if not np.all(np.isfinite(features)):
        raise FeatureFormatError("non-finite feature value")
    top = int(labels.max())
    if top >= n_classes:
        raise FeatureFormatError(f"label {top} out of range for {n_classes} classes")
    if top + 1 != n_classes:
        raise FeatureFormatError(
            f"n_classes is {n_classes} but the largest label is {top}; "
            "the format requires a tight class count"
        )
    return FeatureSet(features, labels, n_classes)


# ------------------------------------------------------------------- split

@dataclass
class SplitSpec:
    train_fraction: float
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError(f"train_fraction must be in (0, 1), got {self.train_fraction}")


def split(fset: FeatureSet, spec: SplitSpec):
    """Seeded disjoint-and-exhaustive partition into (train, test).

    Stratified mode rounds train_fraction * count per class (numpy
    rounding), which reproduces published per-class split arithmetic.
    """
    rng = np.random.default_rng(spec.seed)
    order = rng.permutation(fset.n_samples)
    train_idx = []
    test_idx = []
    if spec.stratified:
        labels_in_order = fset.labels[order]
        for c in range(fset.n_classes):
            members = order[labels_in_order == c]
            if members.size == 0:
                raise ValueError(f"class {c} has no samples; cannot stratify")
            k = int(np.round(spec.train_fraction * members.size))
            train_idx.append(members[:k])
            test_idx.append(members[k:])
        train_idx = np.concatenate(train_idx)
        test_idx = np.concatenate(test_idx)
    else:
        k = int(np.round(spec.train_fraction * fset.n_samples))
        train_idx = order[:k]
        test_idx = order[k:]
    if train_idx.size == 0 or test_idx.size == 0:
        raise ValueError(
            f"train_fraction {spec.train_fraction} leaves one side of the split empty"
        )
    train = FeatureSet(fset.features[train_idx], fset.labels[train_idx], fset.n_classes)
    test = FeatureSet(fset.features[test_idx], fset.labels[test_idx], fset.n_classes)
    return train, test


# --------------------------------------------------------- standardization

@dataclass
class StandardizeStats:
    """Per-dimension affine transform x -> (x - mean) / scale."""

    mean: np.ndarray
    scale: np.ndarray

    def apply(self, features: np.ndarray) -> np.ndarray:
        return (np.asarray(features, dtype=float) - self.mean) / self.scale

    def invert(self, features: np.ndarray) -> np.ndarray:
        return np.asarray(features, dtype=float) * self.scale + self.mean


def standardize(train: FeatureSet, test: FeatureSet):
    """Zero-mean unit-variance transform fit on train, applied to both."""
    feats = train.features
    mean = feats.mean(axis=0)
    constant = feats.max(axis=0) == feats.min(axis=0)
    # a constant column must map to exactly 0, so pin its mean to the
    # exact shared value instead of the rounded arithmetic mean
    mean[constant] = feats.min(axis=0)[constant]
    std = np.sqrt(np.mean((feats - mean) ** 2, axis=0))
    stats = StandardizeStats(mean, np.maximum(std, 1e-8))
    train_out = FeatureSet(stats.apply(train.features), train.labels, train.n_classes)
    test_out = FeatureSet(stats.apply(test.features), test.labels, test.n_classes)
    return train_out, test_out, stats


# ----------------------------------------------------------- synthetic data

def _simplex_directions(n_classes: int, feature_dim: int, rng) -> np.ndarray:
    """Unit-norm class directions, pairwise equidistant, seeded embedding."""
    k = n_classes
    centered = np.eye(k) - 1.0 / k  # rows span the sum-zero hyperplane
    helmert = np.zeros((k - 1, k))
    for j in range(1, k):
        helmert[j - 1, :j] = 1.0
        helmert[j - 1, j] = -j
        helmert[j - 1] /= np.sqrt(j * (j + 1))
    coords = centered @ helmert.T  # (k, k-1)
    basis, _ = np.linalg.qr(rng.standard_normal((feature_dim, k - 1)))
    directions = coords @ basis.T  # (k, feature_dim)
    return directions / np.linalg.norm(directions, axis=1, keepdims=True)


def synth_gaussian(
    n_per_class: int,
    feature_dim: int,
    n_classes: int,
    class_separation: float,
    seed: int = 0,
) -> FeatureSet:
    """Isotropic Gaussian blobs at separation * direction per class."""
    if n_classes < 2:
        raise ValueError(f"n_classes must be at least 2, got {n_classes}")
    if n_per_class < 1:
        raise ValueError(f"n_per_class must be positive, got {n_per_class}")
    if feature_dim < n_classes - 1:
        raise ValueError(
            f"equidistant class centers need feature_dim >= n_classes - 1 "
            f"({feature_dim} < {n_classes - 1})"
        )
    if class_separation < 0:
        raise ValueError(f"class_separation must be non-negative, got {class_separation}")
    rng = np.random.default_rng(seed)
    directions = _simplex_directions(n_classes, feature_dim, rng)
    features = []
    labels = []
    for c in range(n_classes):
        noise = rng.standard_normal((n_per_class, feature_dim))
        features.append(class_separation * directions[c] + noise)
        labels.append(np.full(n_per_class, c))
    return FeatureSet(np.concatenate(features), np.concatenate(labels), n_classes)
