"""Prototype construction: the per-image, per-class mean feature vectors.

The selection unit is the arithmetic mean of an image's raw object features
of one class. Means accumulate in float64 over member rows in ascending row
order, so rebuilding an index is bit-stable regardless of annotation order.
The objectwise variant skips averaging and keeps one candidate per object.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .model import Dataset

if TYPE_CHECKING:
    from .metrics import SizeThresholds

IMAGEWISE = "imagewise"
OBJECTWISE = "objectwise"


@dataclass(frozen=True, eq=False)
class Prototype:
    """Mean feature of `member_rows`; one candidate in a class pool."""

    image_id: int
    class_id: int
    vector: np.ndarray
    member_count: int
    member_rows: tuple[int, ...]

    @property
    def key(self) -> tuple[int, int, int]:
        return (self.class_id, self.image_id, self.member_rows[0])


@dataclass
class PrototypeIndex:
    """Prototypes grouped by class (image-ascending) and by image."""

    mode: str
    by_class: dict[int, list[Prototype]]
    by_image: dict[int, dict[int, Prototype]]
    per_image: dict[int, list[Prototype]]

    def prototype_count(self) -> int:
        return sum(len(v) for v in self.by_class.values())


def _mean_rows(rows: np.ndarray, member_rows: tuple[int, ...]) -> np.ndarray:
    block = rows[np.array(member_rows, dtype=np.int64)].astype(np.float64)
    return block.sum(axis=0) / len(member_rows)


def build_imagewise(dataset: Dataset) -> PrototypeIndex:
    """One prototype per (image, class) pair present in the image."""
    rows = dataset.features.rows
    by_class: dict[int, list[Prototype]] = {c: [] for c in range(dataset.num_classes)}
    by_image: dict[int, dict[int, Prototype]] = {}
    per_image: dict[int, list[Prototype]] = {}
    for img in dataset.manifest.images:
        groups: dict[int, list[int]] = {}
        for o in img.objects:
            groups.setdefault(o.class_id, []).append(o.feature_row)
        class_map: dict[int, Prototype] = {}
        protos: list[Prototype] = []
        for c in sorted(groups):
            member_rows = tuple(sorted(groups[c]))
            proto = Prototype(
                image_id=img.image_id,
                class_id=c,
                vector=_mean_rows(rows, member_rows),
                member_count=len(member_rows),
                member_rows=member_rows,
            )
            by_class[c].append(proto)
            class_map[c] = proto
            protos.append(proto)
        by_image[img.image_id] = class_map
        per_image[img.image_id] = protos
    return PrototypeIndex(IMAGEWISE, by_class, by_image, per_image)


def build_objectwise(dataset: Dataset) -> PrototypeIndex:
    """One single-member prototype per object; every object is a candidate."""
    rows = dataset.features.rows
    by_class: dict[int, list[Prototype]] = {c: [] for c in range(dataset.num_classes)}
    by_image: dict[int, dict[int, Prototype]] = {}
    per_image: dict[int, list[Prototype]] = {}
    for img in dataset.manifest.images:
        groups: dict[int, list[int]] = {}
        for o in img.objects:
            groups.setdefault(o.class_id, []).append(o.feature_row)
        class_map: dict[int, Prototype] = {}
        protos: list[Prototype] = []
        for c in sorted(groups):
            for row in sorted(groups[c]):
                proto = Prototype(
                    image_id=img.image_id,
                    class_id=c,
                    vector=rows[row].astype(np.float64),
                    member_count=1,
                    member_rows=(row,),
                )
                by_class[c].append(proto)
                protos.append(proto)
                if c not in class_map:
                    class_map[c] = proto
        by_image[img.image_id] = class_map
        per_image[img.image_id] = protos
    return PrototypeIndex(OBJECTWISE, by_class, by_image, per_image)


def build(dataset: Dataset, mode: str) -> PrototypeIndex:
    if mode == IMAGEWISE:
        return build_imagewise(dataset)
    if mode == OBJECTWISE:
        return build_objectwise(dataset)
    raise ValueError(f"unknown candidate mode {mode!r}")


def class_prototype(dataset: Dataset, class_id: int) -> np.ndarray:
    """Mean over every object feature of the class across the whole dataset."""
    rows_idx = dataset.class_object_rows(class_id)
    if rows_idx.size == 0:
        raise ValueError(f"class {class_id} has no objects")
    block = dataset.features.rows[rows_idx].astype(np.float64)
    return block.sum(axis=0) / rows_idx.size


@dataclass(frozen=True, eq=False)
class BucketPrototype:
    """Mean feature of one image's class objects within one size bucket."""

    image_id: int
    class_id: int
    size: str
    vector: np.ndarray
    member_count: int
    member_rows: tuple[int, ...]


def sizewise_prototypes(
    dataset: Dataset, class_id: int, thresholds: "SizeThresholds"
) -> dict[int, dict[str, BucketPrototype]]:
    """Per-image mean vectors of the class, split by box-area bucket."""
    rows = dataset.features.rows
    out: dict[int, dict[str, BucketPrototype]] = {}
    for image_id in dataset.images_with_class(class_id):
        buckets: dict[str, list[int]] = {}
        for o in dataset.manifest.images[image_id].objects:
            if o.class_id != class_id:
                continue
            buckets.setdefault(thresholds.bucket(o.box.area()), []).append(o.feature_row)
        out[image_id] = {
            size: BucketPrototype(
                image_id=image_id,
                class_id=class_id,
                size=size,
                vector=_mean_rows(rows, tuple(sorted(members))),
                member_count=len(members),
                member_rows=tuple(sorted(members)),
            )
            for size, members in buckets.items()
        }
    return out


COUNT_BINS = (("1", 1, 1), ("2-4", 2, 4), ("5+", 5, None))
SIZE_ORDER = ("small", "medium", "large")


def _count_bin(count: int) -> str:
    for label, lo, hi in COUNT_BINS:
        if count >= lo and (hi is None or count <= hi):
            return label
    raise AssertionError(f"no bin for count {count}")


def sizewise_similarity_report(
    dataset: Dataset, class_id: int, thresholds: "SizeThresholds"
) -> dict:
    """Mean cosine between the class prototype and per-image size-bucket
    prototypes, grouped by (size bucket, object-count bin)."""
    from .model import cosine

    ref = class_prototype(dataset, class_id)
    cells: dict[tuple[str, str], list[float]] = {}
    for per_bucket in sizewise_prototypes(dataset, class_id, thresholds).values():
        for size, proto in per_bucket.items():
            cells.setdefault((size, _count_bin(proto.member_count)), []).append(
                cosine(ref, proto.vector)
            )
    groups = []
    for size in SIZE_ORDER:
        for label, _, _ in COUNT_BINS:
            values = cells.get((size, label))
            if values:
                groups.append(
                    {
                        "size": size,
                        "count_bin": label,
                        "mean_cosine": float(np.mean(values)),
                        "n": len(values),
                    }
                )
    return {"class_id": class_id, "groups": groups}
