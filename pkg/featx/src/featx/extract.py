"""Frozen ResNet18 feature extraction over annotated crops.

Each annotated box is cropped with a configurable margin, stretched to
the network's 224x224 input (stretch, not letterbox: the aspect change
is accepted in exchange for using every input pixel), normalized with
the pretrained model's published statistics, and pushed through an
18-layer residual network whose classifier head has been removed. The
512-dimensional pooled penultimate activation is the feature vector.

Weights come in two modes:

    pretrained  the pinned torchvision checkpoint (see weights.lock);
                unavailable offline, and the failure is explicit
    seeded      architecture initialized from a fixed torch seed; no
                network access, deterministic for a fixed torch version

Inference runs frozen, single threaded, batched in file order, so the
same inputs always produce bitwise-identical output files.
"""

from __future__ import annotations

import os

import numpy as np

from featx.qfv import write_features
from featx.records import AnnotationError, AnnotationRecord, read_annotations

FEATURE_DIM = 512
INPUT_SIZE = 224

# published normalization of the pretrained checkpoint, RGB order
IMAGENET_MEAN = np.array([0.485, 0.456, 0.406], dtype=np.float32)
IMAGENET_STD = np.array([0.229, 0.224, 0.225], dtype=np.float32)

WEIGHT_MODES = ("pretrained", "seeded")


class WeightsError(Exception):
    """Requested weights cannot be loaded."""


def build_network(weights: str = "seeded", seed: int = 0):
    """Return the frozen feature network (classifier head removed).

    The returned module maps a (batch, 3, 224, 224) float tensor to
    (batch, 512) pooled features. Thread count is pinned to one so
    reduction order, and therefore output bytes, cannot vary between
    runs.
    """
    import torch
    from torchvision.models import resnet18

    torch.set_num_threads(1)
    if weights == "pretrained":
        from torchvision.models import ResNet18_Weights

        try:
            net = resnet18(weights=ResNet18_Weights.IMAGENET1K_V1)
        except Exception as exc:
            raise WeightsError(
                "pretrained weights unavailable: "
                f"{exc}; place the artifact named in weights.lock into the "
                "torch hub cache, or use --weights seeded"
            ) from exc
    elif weights == "seeded":
        torch.manual_seed(seed)
        net = resnet18(weights=None)
    else:
        raise ValueError(
            f"weights must be one of {WEIGHT_MODES}, got {weights!r}"
        )
    net.fc = torch.nn.Identity()
    net.eval()
    for param in net.parameters():
        param.requires_grad_(False)
    return net


def crop_box(record: AnnotationRecord, margin: float, size) -> tuple:
    """Expand the tight box by `margin` of its size on every side, then
    clamp to the image; returns (left, top, right, bottom).

    Raises AnnotationError when nothing of the box survives clamping.
    """
    width, height = size
    pad_x = int(round(margin * record.w))
    pad_y = int(round(margin * record.h))
    left = max(record.x - pad_x, 0)
    top = max(record.y - pad_y, 0)
    right = min(record.x + record.w + pad_x, width)
    bottom = min(record.y + record.h + pad_y, height)
    if right - left < 1 or bottom - top < 1:
        raise AnnotationError(
            f"box outside image {width}x{height} ({record.describe()})"
        )
    return left, top, right, bottom


def load_crop(record: AnnotationRecord, images_dir, margin: float) -> np.ndarray:
    """Load, crop, resize, and normalize one annotation; returns CHW
    float32."""
    from PIL import Image

    path = os.path.join(images_dir, record.image)
    if not os.path.isfile(path):
        raise AnnotationError(f"missing image {path} ({record.describe()})")
    with Image.open(path) as im:
        im = im.convert("RGB")
        box = crop_box(record, margin, im.size)
        crop = im.crop(box).resize((INPUT_SIZE, INPUT_SIZE), Image.BILINEAR)
    arr = np.asarray(crop, dtype=np.float32) / 255.0
    arr = (arr - IMAGENET_MEAN) / IMAGENET_STD
    return arr.transpose(2, 0, 1)


def extract(
    annotations_csv,
    images_dir,
    class_map,
    out_path,
    margin: float = 0.1,
    weights: str = "seeded",
    seed: int = 0,
    batch_size: int = 32,
):
    """Extract features for every annotation and write them as QFV1.

    class_map is either a mapping from class name to label or a
    callable returning the label for a name. Row order in the output
    matches annotation-file order exactly. Returns (features, labels)
    as numpy arrays of shape (n, 512) and (n,).
    """
    if margin < 0:
        raise ValueError(f"margin must be non-negative, got {margin}")
    if batch_size < 1:
        raise ValueError(f"batch_size must be positive, got {batch_size}")
    records = read_annotations(annotations_csv)
    lookup = class_map if callable(class_map) else class_map.get
    labels = np.empty(len(records), dtype=np.uint32)
    for i, rec in enumerate(records):
        label = lookup(rec.class_name)
        if label is None:
            raise AnnotationError(f"unmapped class name ({rec.describe()})")
        if int(label) < 0:
            raise AnnotationError(
                f"class maps to negative label {label} ({rec.describe()})"
            )
        labels[i] = int(label)

    import torch

    net = build_network(weights=weights, seed=seed)
    features = np.empty((len(records), FEATURE_DIM), dtype=np.float32)
    with torch.no_grad():
        for start in range(0, len(records), batch_size):
            chunk = records[start : start + batch_size]
            batch = np.stack([load_crop(r, images_dir, margin) for r in chunk])
            out = net(torch.from_numpy(batch))
            features[start : start + len(chunk)] = out.numpy()
    write_features(out_path, features, labels)
    return features, labels
