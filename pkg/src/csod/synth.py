"""Synthetic multi-object dataset generation.

Images draw a class set from per-class presence probabilities, each present
class draws an object count, and object features are cluster centers plus
isotropic Gaussian noise, left unnormalized. Boxes land on a fixed
1000x1000 canvas with log-uniform areas. One sequential RNG stream drives
everything, so a seed pins the output byte-for-byte. The ground-truth
(class, cluster) assignment of every object is recorded in a sidecar.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import (
    BoundingBox,
    Dataset,
    DatasetManifest,
    FeatureStore,
    ImageAnnotations,
    ObjectRecord,
    save_dataset,
)

CANVAS = 1000.0

# Cluster choice granularity: per object, or shared by all of an image's
# objects of one class.
PER_OBJECT = "object"
PER_IMAGE_CLASS = "image"


@dataclass(frozen=True)
class SynthSpec:
    num_classes: int
    num_images: int
    dim: int
    objects_per_image: tuple[int, int]
    class_presence_prob: tuple[float, ...]
    cluster_centers: tuple[tuple[tuple[float, ...], ...], ...]
    cluster_spread: float
    box_area_range: tuple[float, float]
    seed: int
    cluster_assignment: str = PER_OBJECT

    def __post_init__(self) -> None:
        if self.num_classes < 1 or self.num_images < 1:
            raise ValueError("need at least one class and one image")
        if self.dim < 2:
            raise ValueError("dim must be >= 2")
        lo, hi = self.objects_per_image
        if not 1 <= lo <= hi:
            raise ValueError(f"bad objects_per_image range ({lo}, {hi})")
        if len(self.class_presence_prob) != self.num_classes:
            raise ValueError("one presence probability per class required")
        if not all(0.0 < p <= 1.0 for p in self.class_presence_prob):
            raise ValueError("presence probabilities must lie in (0, 1]")
        if len(self.cluster_centers) != self.num_classes:
            raise ValueError("one cluster-center list per class required")
        if not all(len(centers) >= 1 for centers in self.cluster_centers):
            raise ValueError("every class needs at least one cluster center")
        if not all(
            len(center) == self.dim for centers in self.cluster_centers for center in centers
        ):
            raise ValueError("cluster centers must match dim")
        if self.cluster_spread < 0.0:
            raise ValueError("cluster_spread must be >= 0")
        a_lo, a_hi = self.box_area_range
        if not 0.0 < a_lo < a_hi:
            raise ValueError(f"bad box area range ({a_lo}, {a_hi})")
        if math.sqrt(a_hi * 2.0) > CANVAS:
            raise ValueError(f"max box area {a_hi} cannot fit the {CANVAS:g} canvas")
        if self.cluster_assignment not in (PER_OBJECT, PER_IMAGE_CLASS):
            raise ValueError(f"unknown cluster assignment {self.cluster_assignment!r}")


def random_unit_centers(
    num_classes: int, clusters_per_class: int, dim: int, seed: int
) -> tuple[tuple[tuple[float, ...], ...], ...]:
    """Random unit-norm cluster centers, one tuple of tuples per class."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(num_classes):
        centers = rng.standard_normal((clusters_per_class, dim))
        centers /= np.linalg.norm(centers, axis=1)[:, None]
        out.append(tuple(tuple(float(v) for v in c) for c in centers))
    return tuple(out)


def _draw_box(rng: np.random.Generator, area_range: tuple[float, float]) -> BoundingBox:
    lo, hi = area_range
    area = math.exp(rng.uniform(math.log(lo), math.log(hi)))
    aspect = math.exp(rng.uniform(math.log(0.5), math.log(2.0)))
    width = min(math.sqrt(area * aspect), CANVAS)
    height = min(area / width, CANVAS)
    left = rng.uniform(0.0, CANVAS - width)
    top = rng.uniform(0.0, CANVAS - height)
    return BoundingBox(left, top, left + width, top + height)


def generate(spec: SynthSpec) -> tuple[Dataset, dict]:
    """Deterministically generate a dataset plus its ground-truth sidecar."""
    rng = np.random.default_rng(spec.seed)
    centers = [np.array(c, dtype=np.float64) for c in spec.cluster_centers]
    lo, hi = spec.objects_per_image

    images: list[ImageAnnotations] = []
    feature_rows: list[np.ndarray] = []
    truth: dict[str, list[dict]] = {}
    row = 0
    for image_id in range(spec.num_images):
        while True:
            present = [
                c
                for c in range(spec.num_classes)
                if rng.random() < spec.class_presence_prob[c]
            ]
            if present:
                break
        objects: list[ObjectRecord] = []
        truth_entries: list[dict] = []
        for c in present:
            count = int(rng.integers(lo, hi + 1))
            shared_cluster = None
            if spec.cluster_assignment == PER_IMAGE_CLASS:
                shared_cluster = int(rng.integers(len(centers[c])))
            for _ in range(count):
                cluster = (
                    shared_cluster
                    if shared_cluster is not None
                    else int(rng.integers(len(centers[c])))
                )
                while True:
                    feat = centers[c][cluster] + spec.cluster_spread * rng.standard_normal(
                        spec.dim
                    )
                    feat32 = feat.astype(np.float32)
                    if feat32.any():
                        break
                box = _draw_box(rng, spec.box_area_range)
                objects.append(ObjectRecord(image_id, c, box, row))
                truth_entries.append({"class": c, "cluster": cluster, "row": row})
                feature_rows.append(feat32)
                row += 1
        images.append(ImageAnnotations(image_id, objects))
        truth[str(image_id)] = truth_entries

    class_names = [f"class_{c}" for c in range(spec.num_classes)]
    manifest = DatasetManifest(spec.num_classes, class_names, images)
    features = FeatureStore(np.stack(feature_rows))
    return Dataset(manifest, features), truth


def truth_json(truth: dict) -> str:
    return json.dumps(truth, separators=(",", ":"), ensure_ascii=False) + "\n"


def generate_files(spec: SynthSpec, manifest_path, feature_path, truth_path) -> Dataset:
    """Generate and write manifest, features and the truth sidecar."""
    dataset, truth = generate(spec)
    save_dataset(dataset, manifest_path, feature_path)
    Path(truth_path).write_text(truth_json(truth), encoding="utf-8")
    return dataset
