"""Comparison selection methods over whole-image features.

Each image is summarized by one vector, the mean of its object features.
Five random variants plus herding, k-center greedy and facility-location
greedy; all deterministic given their inputs and seed, ties breaking toward
the lowest image id, and all emitting the same result shape as the main
selector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import Dataset, SelectionResult
from .selection import SelectionError

RETRY_BUDGET = 10_000


@dataclass(frozen=True, eq=False)
class ImageFeature:
    """One whole-image feature: the float64 mean of the image's object rows."""

    image_id: int
    vector: np.ndarray


def image_feature_matrix(dataset: Dataset) -> np.ndarray:
    """(D, dim) float64 matrix of per-image mean features, id order."""
    rows = dataset.features.rows
    out = np.empty((dataset.num_images, dataset.features.dim), dtype=np.float64)
    for img in dataset.manifest.images:
        members = np.array(sorted(o.feature_row for o in img.objects), dtype=np.int64)
        out[img.image_id] = rows[members].astype(np.float64).sum(axis=0) / members.size
        if not out[img.image_id].any():
            raise ValueError(f"image {img.image_id} has a zero mean feature")
    return out


def image_features(dataset: Dataset) -> list[ImageFeature]:
    mat = image_feature_matrix(dataset)
    return [ImageFeature(i, mat[i]) for i in range(dataset.num_images)]


def _check_n(dataset: Dataset, n: int) -> None:
    if not 1 <= n <= dataset.num_images:
        raise ValueError(f"n must be in [1, {dataset.num_images}], got {n}")


def _result(method: str, picked: list[int], echo: dict, counts=None, partial=False) -> SelectionResult:
    stats = {"picks": len(picked), "partial": bool(partial)}
    if counts is not None:
        stats["per_class_pick_counts"] = {str(c): counts[c] for c in sorted(counts)}
    return SelectionResult(method, picked, {"method": method, **echo}, stats)


def _rotate(dataset: Dataset, n: int, choose, quotas=None):
    """Round-robin over classes; `choose(class_id, avail)` picks one image."""
    taken: set[int] = set()
    picked: list[int] = []
    counts = {c: 0 for c in range(dataset.num_classes)}
    while len(picked) < n:
        progressed = False
        for c in range(dataset.num_classes):
            if len(picked) == n:
                break
            if quotas is not None and counts[c] >= quotas[c]:
                continue
            avail = [i for i in dataset.images_with_class(c) if i not in taken]
            if not avail:
                continue
            image_id = choose(c, avail)
            picked.append(image_id)
            taken.add(image_id)
            counts[c] += 1
            progressed = True
        if not progressed:
            break
    return picked, counts, len(picked) < n


def largest_remainder_quotas(weights: list[int], n: int) -> list[int]:
    """Integer quotas proportional to weights, summing exactly to n."""
    total = sum(weights)
    if total <= 0:
        raise ValueError("weights must sum to a positive value")
    shares = [n * w / total for w in weights]
    base = [math.floor(s) for s in shares]
    leftover = n - sum(base)
    order = sorted(range(len(weights)), key=lambda c: (-(shares[c] - base[c]), c))
    for c in order[:leftover]:
        base[c] += 1
    return base


def random_full(dataset: Dataset, n: int, seed: int) -> SelectionResult:
    """Uniform sample of n images, redrawn until every class is present."""
    _check_n(dataset, n)
    rng = np.random.default_rng(seed)
    wanted = set(range(dataset.num_classes))
    for _ in range(RETRY_BUDGET):
        picked = [int(i) for i in rng.choice(dataset.num_images, size=n, replace=False)]
        present = {
            o.class_id for i in picked for o in dataset.manifest.images[i].objects
        }
        if present == wanted:
            return _result("random-full", picked, {"target_count": n, "seed": seed})
    raise SelectionError(
        f"random-full: no class-complete sample of size {n} within {RETRY_BUDGET} draws"
    )


def _uniform_rotation(dataset: Dataset, n: int, rng: np.random.Generator):
    return _rotate(dataset, n, lambda c, avail: avail[int(rng.integers(len(avail)))])


def random_uniform(dataset: Dataset, n: int, seed: int) -> SelectionResult:
    """Class rotation, one uniformly drawn untaken image per class turn."""
    _check_n(dataset, n)
    picked, counts, partial = _uniform_rotation(dataset, n, np.random.default_rng(seed))
    return _result(
        "random-uniform", picked, {"target_count": n, "seed": seed}, counts, partial
    )


def random_ratio(dataset: Dataset, n: int, seed: int) -> SelectionResult:
    """Like random_uniform, with class turn quotas proportional to class size."""
    _check_n(dataset, n)
    rng = np.random.default_rng(seed)
    weights = [len(dataset.images_with_class(c)) for c in range(dataset.num_classes)]
    quotas = largest_remainder_quotas(weights, n)
    picked, counts, partial = _rotate(
        dataset, n, lambda c, avail: avail[int(rng.integers(len(avail)))], quotas=quotas
    )
    return _result(
        "random-ratio",
        picked,
        {"target_count": n, "seed": seed, "quotas": quotas},
        counts,
        partial,
    )


def random_annotation_range(
    dataset: Dataset, n: int, seed: int, lo: int, hi: int
) -> SelectionResult:
    """Redraw random_uniform until the sample's annotation total is in [lo, hi]."""
    _check_n(dataset, n)
    if lo > hi:
        raise ValueError(f"invalid annotation range [{lo}, {hi}]")
    rng = np.random.default_rng(seed)
    for _ in range(RETRY_BUDGET):
        picked, counts, partial = _uniform_rotation(dataset, n, rng)
        total = sum(dataset.annotation_count(i) for i in picked)
        if lo <= total <= hi:
            return _result(
                "random-anno-range",
                picked,
                {"target_count": n, "seed": seed, "lo": lo, "hi": hi},
                counts,
                partial,
            )
    raise SelectionError(
        f"random-anno-range: no sample with annotation total in [{lo}, {hi}] "
        f"within {RETRY_BUDGET} draws"
    )


def random_annotation_max(dataset: Dataset, n: int) -> SelectionResult:
    """Class rotation picking the untaken image with the most annotations."""
    _check_n(dataset, n)
    anno = [dataset.annotation_count(i) for i in range(dataset.num_images)]
    picked, counts, partial = _rotate(
        dataset, n, lambda c, avail: max(avail, key=lambda i: (anno[i], -i))
    )
    return _result("random-anno-max", picked, {"target_count": n}, counts, partial)


def herding(dataset: Dataset, n: int) -> SelectionResult:
    """Classwise herding: each class turn maximizes <w_c, x> and nudges w_c
    back toward the class mean."""
    _check_n(dataset, n)
    feats = image_feature_matrix(dataset)
    mu: dict[int, np.ndarray] = {}
    w: dict[int, np.ndarray] = {}
    for c in range(dataset.num_classes):
        members = dataset.images_with_class(c)
        if members:
            mu[c] = feats[np.array(members, dtype=np.int64)].sum(axis=0) / len(members)
            w[c] = mu[c].copy()

    def choose(c: int, avail: list[int]) -> int:
        dots = feats[np.array(avail, dtype=np.int64)] @ w[c]
        pick = avail[int(np.argmax(dots))]
        w[c] += mu[c] - feats[pick]
        return pick

    picked, counts, partial = _rotate(dataset, n, choose)
    return _result("herding", picked, {"target_count": n}, counts, partial)


def kcenter_greedy(dataset: Dataset, n: int) -> SelectionResult:
    """k-center greedy under Euclidean distance, seeded at the mean-nearest
    image, then repeatedly taking the point farthest from the taken set."""
    _check_n(dataset, n)
    feats = image_feature_matrix(dataset)
    center = feats.mean(axis=0)
    first = int(np.argmin(np.linalg.norm(feats - center, axis=1)))
    picked = [first]
    taken = np.zeros(dataset.num_images, dtype=bool)
    taken[first] = True
    min_dist = np.linalg.norm(feats - feats[first], axis=1)
    while len(picked) < n:
        nxt = int(np.argmax(np.where(taken, -np.inf, min_dist)))
        picked.append(nxt)
        taken[nxt] = True
        min_dist = np.minimum(min_dist, np.linalg.norm(feats - feats[nxt], axis=1))
    return _result("kcenter", picked, {"target_count": n})


def facility_location_greedy(dataset: Dataset, n: int) -> SelectionResult:
    """Greedy facility location over cosine similarity with class rotation.

    The objective is sum_i max_{j in S} cos(x_i, x_j); the empty-set max is
    the cosine floor -1, which keeps marginal gains diminishing from the
    first pick on. Each class turn adds the untaken candidate of that class
    with the largest marginal gain over the whole dataset.
    """
    _check_n(dataset, n)
    feats = image_feature_matrix(dataset)
    units = feats / np.linalg.norm(feats, axis=1)[:, None]
    cur_max = np.full(dataset.num_images, -1.0)

    def choose(c: int, avail: list[int]) -> int:
        idx = np.array(avail, dtype=np.int64)
        sims = units @ units[idx].T
        gains = np.maximum(sims - cur_max[:, None], 0.0).sum(axis=0)
        j = int(np.argmax(gains))
        np.maximum(cur_max, sims[:, j], out=cur_max)
        return avail[j]

    picked, counts, partial = _rotate(dataset, n, choose)
    return _result("facility-location", picked, {"target_count": n}, counts, partial)
