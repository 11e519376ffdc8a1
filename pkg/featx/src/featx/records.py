"""Annotation records and class coding.

An annotation names one sign instance: the image it lives in, a tight
pixel box, and a class name. The input is a CSV file with a header row
and columns image,x,y,w,h,class (extra columns are ignored so raw
annotation exports work unmodified).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

# Boxes smaller than this on either side carry too little structure to
# embed; they are rejected at parse time rather than producing a
# near-empty crop downstream.
MIN_BOX_SIDE = 6

REQUIRED_COLUMNS = ("image", "x", "y", "w", "h", "class")


class AnnotationError(Exception):
    """Unreadable, incomplete, or out-of-range annotation input."""


@dataclass(frozen=True)
class AnnotationRecord:
    """One annotated box: image path (relative to the images dir), tight
    pixel box, class name, and the source line for error reports."""

    image: str
    x: int
    y: int
    w: int
    h: int
    class_name: str
    line: int

    def describe(self) -> str:
        return (
            f"line {self.line}: image={self.image!r} "
            f"box=({self.x},{self.y},{self.w},{self.h}) class={self.class_name!r}"
        )


def _int_field(row: dict, name: str, line: int) -> int:
    raw = row[name]
    try:
        return int(raw)
    except (TypeError, ValueError):
        raise AnnotationError(
            f"line {line}: column {name!r} must be an integer, got {raw!r}"
        ) from None


def read_annotations(path) -> list[AnnotationRecord]:
    """Read and validate all records from a CSV annotation file.

    Raises AnnotationError for a missing header, missing columns, rows
    with unparseable fields, boxes below the minimum side length, or a
    file with no data rows. Record order follows file order.
    """
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise AnnotationError(f"{path}: empty annotation file")
        missing = [c for c in REQUIRED_COLUMNS if c not in reader.fieldnames]
        if missing:
            raise AnnotationError(
                f"{path}: missing columns: {', '.join(missing)}"
            )
        records = []
        for row in reader:
            line = reader.line_num
            image = (row["image"] or "").strip()
            if not image:
                raise AnnotationError(f"line {line}: empty image path")
            class_name = (row["class"] or "").strip()
            if not class_name:
                raise AnnotationError(f"line {line}: empty class name")
            x = _int_field(row, "x", line)
            y = _int_field(row, "y", line)
            w = _int_field(row, "w", line)
            h = _int_field(row, "h", line)
            rec = AnnotationRecord(image, x, y, w, h, class_name, line)
            if w < MIN_BOX_SIDE or h < MIN_BOX_SIDE:
                raise AnnotationError(
                    f"box must be at least {MIN_BOX_SIDE}x{MIN_BOX_SIDE} px "
                    f"({rec.describe()})"
                )
            records.append(rec)
    if not records:
        raise AnnotationError(f"{path}: no annotation rows")
    return records


def binary_stop_sign(name: str) -> int:
    """Binary coding: the stop class maps to 1, every other class to 0."""
    return 1 if name.strip().lower() == "stop" else 0


def read_class_map(path) -> dict:
    """Parse a class-map file of `name = index` lines.

    Blank lines and `#` comments are ignored. Indices must be
    non-negative integers; duplicate names are an error.
    """
    mapping: dict = {}
    with open(path) as fh:
        for line_num, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise AnnotationError(
                    f"{path}: line {line_num}: expected 'name = index', got {line!r}"
                )
            name, _, value = line.partition("=")
            name = name.strip()
            value = value.strip()
            if not name:
                raise AnnotationError(f"{path}: line {line_num}: empty class name")
            try:
                index = int(value)
            except ValueError:
                raise AnnotationError(
                    f"{path}: line {line_num}: index must be an integer, got {value!r}"
                ) from None
            if index < 0:
                raise AnnotationError(
                    f"{path}: line {line_num}: index must be non-negative, got {index}"
                )
            if name in mapping:
                raise AnnotationError(
                    f"{path}: line {line_num}: duplicate class name {name!r}"
                )
            mapping[name] = index
    if not mapping:
        raise AnnotationError(f"{path}: empty class map")
    return mapping
