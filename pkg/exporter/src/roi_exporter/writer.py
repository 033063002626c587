"""Emission of the engine's interchange formats.

The manifest is compact-separator JSON with a fixed key order and float box
coordinates; the feature file is the little-endian binary layout with the
"CSODFEAT" magic. Both byte-match what the engine itself writes, so a
load/save round trip over exported files is an identity.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .annotations import AnnotationSet

FEATURE_MAGIC = b"CSODFEAT"
FEATURE_VERSION = 1
MANIFEST_VERSION = 1
_HEADER = struct.Struct("<8sIIQ")


class ExportError(RuntimeError):
    """Export produced rows that violate the interchange contract."""


def manifest_payload(annotations: AnnotationSet) -> dict:
    payload_images = []
    row = 0
    for img in annotations.images:
        objects = []
        for o in img.objects:
            objects.append(
                {
                    "class": o.class_id,
                    "box": [float(o.left), float(o.top), float(o.right), float(o.bottom)],
                    "row": row,
                }
            )
            row += 1
        payload_images.append({"id": img.image_id, "objects": objects})
    return {
        "version": MANIFEST_VERSION,
        "num_classes": len(annotations.class_names),
        "class_names": list(annotations.class_names),
        "images": payload_images,
    }


def write_outputs(annotations: AnnotationSet, rows: np.ndarray, manifest_path, feature_path) -> None:
    """Write manifest + features; rows must follow manifest annotation order."""
    rows = np.asarray(rows, dtype=np.float32)
    if rows.ndim != 2 or rows.shape[0] != annotations.total_objects():
        raise ExportError(
            f"expected {annotations.total_objects()} feature rows, got {rows.shape}"
        )
    if not np.all(np.isfinite(rows)):
        raise ExportError("feature rows must be finite")
    if bool(np.any(~rows.any(axis=1))):
        raise ExportError("feature rows must not be all-zero")

    text = json.dumps(manifest_payload(annotations), separators=(",", ":"), ensure_ascii=False)
    Path(manifest_path).write_text(text + "\n", encoding="utf-8")
    header = _HEADER.pack(FEATURE_MAGIC, FEATURE_VERSION, rows.shape[1], rows.shape[0])
    Path(feature_path).write_bytes(header + rows.astype("<f4", copy=False).tobytes(order="C"))
