"""Builders for tiny synthetic frames and annotation files."""

import numpy as np
from PIL import Image, ImageDraw

HEADER = "image,x,y,w,h,class"


def write_frame(path, size=(96, 64), box=(20, 10, 30, 25),
                fill=(200, 30, 30), seed=0):
    """Noise background with one solid rectangle at box (x, y, w, h).

    box=None writes pure noise; fill=None draws nothing either way.
    """
    rng = np.random.default_rng(seed)
    arr = rng.integers(0, 256, size=(size[1], size[0], 3), dtype=np.uint8)
    im = Image.fromarray(arr)
    if box is not None and fill is not None:
        x, y, w, h = box
        ImageDraw.Draw(im).rectangle([x, y, x + w - 1, y + h - 1], fill=fill)
    im.save(path)


def write_solid(path, color, size=(48, 48)):
    Image.new("RGB", size, color).save(path)


def write_annotations(path, rows):
    path.write_text("\n".join([HEADER, *rows]) + "\n")
