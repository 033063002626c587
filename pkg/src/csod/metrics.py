"""Dataset-analysis metrics: size buckets, KL divergence, class entropy and
a facility-location style coverage proxy for subset quality.

Entropy and KL are reported in nats. The coverage objective is only a proxy
for downstream detector quality; it makes no claim beyond monotone coverage
of object features by the subset's class prototypes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .model import Dataset

SIZE_ORDER = ("small", "medium", "large")


@dataclass(frozen=True)
class SizeThresholds:
    """Box-area cutoffs: area <= small_max is small, <= medium_max medium."""

    small_max: float = 1024.0
    medium_max: float = 9216.0

    def __post_init__(self) -> None:
        if not 0 < self.small_max < self.medium_max:
            raise ValueError(
                f"need 0 < small_max < medium_max, got ({self.small_max}, {self.medium_max})"
            )

    def bucket(self, area: float) -> str:
        if area <= self.small_max:
            return "small"
        if area <= self.medium_max:
            return "medium"
        return "large"


@dataclass
class SubsetReport:
    image_count: int
    annotation_count: int
    size_histogram: dict[str, int]
    size_ratio: dict[str, float]
    per_class_annotation_counts: list[int]
    class_ratio_entropy: float
    kl_to_reference: dict[str, float]

    def to_json(self) -> str:
        payload = {
            "image_count": self.image_count,
            "annotation_count": self.annotation_count,
            "size_histogram": self.size_histogram,
            "size_ratio": self.size_ratio,
            "per_class_annotation_counts": self.per_class_annotation_counts,
            "class_ratio_entropy": self.class_ratio_entropy,
            "kl_to_reference": self.kl_to_reference,
            "units": "nats",
        }
        return json.dumps(payload, separators=(",", ":"), ensure_ascii=False) + "\n"


def _check_subset(dataset: Dataset, image_ids) -> list[int]:
    ids = sorted(set(int(i) for i in image_ids))
    if not ids:
        raise ValueError("subset must not be empty")
    if ids[0] < 0 or ids[-1] >= dataset.num_images:
        bad = [i for i in ids if not 0 <= i < dataset.num_images]
        raise ValueError(f"image ids not in dataset: {bad}")
    return ids


def size_histogram(dataset: Dataset, image_ids, thresholds: SizeThresholds) -> dict[str, int]:
    """Bucket counts over the subset's annotations; every box lands in one."""
    ids = _check_subset(dataset, image_ids)
    counts = {size: 0 for size in SIZE_ORDER}
    for i in ids:
        for o in dataset.manifest.images[i].objects:
            counts[thresholds.bucket(o.box.area())] += 1
    return counts


def size_ratio(dataset: Dataset, image_ids, thresholds: SizeThresholds) -> dict[str, float]:
    counts = size_histogram(dataset, image_ids, thresholds)
    total = sum(counts.values())
    return {size: counts[size] / total for size in SIZE_ORDER}


def kl_divergence(p, q) -> float:
    """KL(p || q) in nats with the 0*ln(0/q) = 0 convention."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape or p.ndim != 1:
        raise ValueError("p and q must be 1-D with the same support size")
    if np.any(p < 0) or np.any(q < 0):
        raise ValueError("probabilities must be non-negative")
    mask = p > 0
    if np.any(q[mask] == 0):
        raise ValueError("q must be strictly positive wherever p > 0")
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def class_annotation_counts(dataset: Dataset, image_ids) -> np.ndarray:
    ids = _check_subset(dataset, image_ids)
    counts = np.zeros(dataset.num_classes, dtype=np.int64)
    for i in ids:
        for o in dataset.manifest.images[i].objects:
            counts[o.class_id] += 1
    return counts


def class_ratio_entropy(dataset: Dataset, image_ids) -> float:
    """Shannon entropy (nats) of the subset's per-class annotation ratio."""
    counts = class_annotation_counts(dataset, image_ids)
    ratios = counts / counts.sum()
    nz = ratios[ratios > 0]
    return float(-np.sum(nz * np.log(nz)))


def coverage_objective(dataset: Dataset, image_ids) -> float:
    """Mean over all objects of the best cosine to a same-class prototype of
    the subset; classes absent from the subset contribute the floor -1.

    Monotone non-decreasing under subset growth; range (-1, 1].
    """
    ids = _check_subset(dataset, image_ids)
    rows = dataset.features.rows

    # Imagewise class prototypes restricted to the subset.
    proto_vecs: dict[int, list[np.ndarray]] = {}
    for i in ids:
        groups: dict[int, list[int]] = {}
        for o in dataset.manifest.images[i].objects:
            groups.setdefault(o.class_id, []).append(o.feature_row)
        for c, members in groups.items():
            block = rows[np.array(sorted(members), dtype=np.int64)].astype(np.float64)
            proto_vecs.setdefault(c, []).append(block.sum(axis=0) / len(members))

    total = dataset.manifest.total_objects()
    acc = 0.0
    for c in range(dataset.num_classes):
        obj_rows = dataset.class_object_rows(c)
        if obj_rows.size == 0:
            continue
        if c not in proto_vecs:
            acc += -1.0 * obj_rows.size
            continue
        protos = np.stack(proto_vecs[c])
        protos = protos / np.linalg.norm(protos, axis=1)[:, None]
        objs = rows[obj_rows].astype(np.float64)
        objs = objs / np.linalg.norm(objs, axis=1)[:, None]
        acc += float((objs @ protos.T).max(axis=1).sum())
    return acc / total


def subset_report(
    dataset: Dataset, image_ids, thresholds: SizeThresholds = SizeThresholds()
) -> SubsetReport:
    """Full analysis of a subset against the whole dataset as reference."""
    ids = _check_subset(dataset, image_ids)
    hist = size_histogram(dataset, ids, thresholds)
    ratio = size_ratio(dataset, ids, thresholds)
    counts = class_annotation_counts(dataset, ids)
    entropy = class_ratio_entropy(dataset, ids)

    all_ids = range(dataset.num_images)
    ref_size = size_ratio(dataset, all_ids, thresholds)
    ref_counts = class_annotation_counts(dataset, all_ids)

    subset_size_p = np.array([ratio[s] for s in SIZE_ORDER])
    ref_size_q = np.array([ref_size[s] for s in SIZE_ORDER])
    subset_class_p = counts / counts.sum()
    ref_class_q = ref_counts / ref_counts.sum()

    return SubsetReport(
        image_count=len(ids),
        annotation_count=int(counts.sum()),
        size_histogram=hist,
        size_ratio=ratio,
        per_class_annotation_counts=[int(v) for v in counts],
        class_ratio_entropy=entropy,
        kl_to_reference={
            "size": kl_divergence(subset_size_p, ref_size_q),
            "class": kl_divergence(subset_class_p, ref_class_q),
        },
    )
