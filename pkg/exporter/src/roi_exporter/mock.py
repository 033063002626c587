"""Deterministic mock feature generation.

Each object's pseudo-feature is seeded by a hash of (run seed, dense image
id, class id, exact box bytes), so exports are reproducible per object and
independent of batch boundaries or iteration order.
"""

from __future__ import annotations

import hashlib
import struct

import numpy as np

from .annotations import AnnotationSet


def mock_feature(seed: int, image_id: int, class_id: int, box, dim: int) -> np.ndarray:
    digest = hashlib.sha256(
        struct.pack(
            "<qqq4d", seed, image_id, class_id,
            float(box[0]), float(box[1]), float(box[2]), float(box[3]),
        )
    ).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
    while True:
        row = rng.standard_normal(dim).astype(np.float32)
        if row.any():
            return row


def mock_rows(annotations: AnnotationSet, seed: int, dim: int) -> np.ndarray:
    rows = np.empty((annotations.total_objects(), dim), dtype=np.float32)
    k = 0
    for img in annotations.images:
        for o in img.objects:
            rows[k] = mock_feature(
                seed, img.image_id, o.class_id, (o.left, o.top, o.right, o.bottom), dim
            )
            k += 1
    return rows
