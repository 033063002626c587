"""Domain types and the on-disk dataset formats.

A dataset is a pair of files: a strict JSON manifest describing images,
classes, boxes and feature-row assignments, plus a little-endian binary
feature file holding one float32 vector per annotated object. Features are
stored raw (not normalized); cosine similarity normalizes at evaluation
time, and accumulations run in float64.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MANIFEST_VERSION = 1
FEATURE_MAGIC = b"CSODFEAT"
FEATURE_VERSION = 1

_HEADER = struct.Struct("<8sIIQ")  # magic, u32 version, u32 dim, u64 row_count


class DatasetError(ValueError):
    """A manifest/feature file pair violates the interchange format."""


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in image coordinates; left < right and top < bottom."""

    left: float
    top: float
    right: float
    bottom: float

    def __post_init__(self) -> None:
        if not (self.left < self.right and self.top < self.bottom):
            raise DatasetError(
                f"degenerate box ({self.left}, {self.top}, {self.right}, {self.bottom})"
            )

    def area(self) -> float:
        return (self.right - self.left) * (self.bottom - self.top)


@dataclass(frozen=True)
class ObjectRecord:
    """One annotated object: its class, box and row in the feature store."""

    image_id: int
    class_id: int
    box: BoundingBox
    feature_row: int


@dataclass
class ImageAnnotations:
    image_id: int
    objects: list[ObjectRecord]


@dataclass
class FeatureStore:
    """Dense float32 matrix with one feature vector per annotated object."""

    rows: np.ndarray

    def __post_init__(self) -> None:
        rows = np.asarray(self.rows, dtype=np.float32)
        if rows.ndim != 2 or rows.shape[1] < 1:
            raise DatasetError("feature rows must form a non-empty 2-D matrix")
        if not np.all(np.isfinite(rows)):
            raise DatasetError("feature rows must be finite")
        if rows.shape[0] and bool(np.any(~rows.any(axis=1))):
            raise DatasetError("feature rows must not be all-zero")
        self.rows = rows

    @property
    def dim(self) -> int:
        return int(self.rows.shape[1])

    @property
    def row_count(self) -> int:
        return int(self.rows.shape[0])


@dataclass
class DatasetManifest:
    num_classes: int
    class_names: list[str]
    images: list[ImageAnnotations]

    @property
    def num_images(self) -> int:
        return len(self.images)

    def total_objects(self) -> int:
        return sum(len(img.objects) for img in self.images)


@dataclass
class Dataset:
    """A validated manifest plus its feature store; read-only after load."""

    manifest: DatasetManifest
    features: FeatureStore
    _images_by_class: dict[int, list[int]] = field(default_factory=dict, repr=False)
    _rows_by_class: dict[int, np.ndarray] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        by_class: dict[int, list[int]] = {c: [] for c in range(self.manifest.num_classes)}
        rows_by_class: dict[int, list[int]] = {c: [] for c in range(self.manifest.num_classes)}
        for img in self.manifest.images:
            present = sorted({o.class_id for o in img.objects})
            for c in present:
                by_class[c].append(img.image_id)
            for o in img.objects:
                rows_by_class[o.class_id].append(o.feature_row)
        self._images_by_class = by_class
        self._rows_by_class = {
            c: np.array(sorted(r), dtype=np.int64) for c, r in rows_by_class.items()
        }

    @property
    def num_classes(self) -> int:
        return self.manifest.num_classes

    @property
    def num_images(self) -> int:
        return self.manifest.num_images

    def images_with_class(self, class_id: int) -> list[int]:
        """Ascending image ids that contain at least one object of the class."""
        return self._images_by_class[class_id]

    def class_object_rows(self, class_id: int) -> np.ndarray:
        """Ascending feature-row indices of every object of the class."""
        return self._rows_by_class[class_id]

    def annotation_count(self, image_id: int) -> int:
        return len(self.manifest.images[image_id].objects)


@dataclass
class SelectionResult:
    """Outcome of one selection run; image ids are in pick order."""

    method: str
    selected_image_ids: list[int]
    config_echo: dict
    stats: dict

    def __post_init__(self) -> None:
        if len(set(self.selected_image_ids)) != len(self.selected_image_ids):
            raise ValueError("selection result contains duplicate image ids")

    def to_json(self) -> str:
        payload = {
            "method": self.method,
            "selected_image_ids": list(self.selected_image_ids),
            "config_echo": self.config_echo,
            "stats": self.stats,
        }
        return json.dumps(payload, separators=(",", ":"), ensure_ascii=False) + "\n"


def cosine(a, b) -> float:
    """Cosine similarity of two nonzero vectors, clamped to [-1, 1]."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 1 or a.shape != b.shape:
        raise ValueError(f"cosine expects two vectors of equal dimension, got {a.shape} and {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine is undefined for zero-norm vectors")
    return float(min(1.0, max(-1.0, float(np.dot(a, b)) / (na * nb))))


def _reject_constant(value: str):
    raise DatasetError(f"manifest must not contain {value}")


def _expect_keys(obj: dict, keys: tuple[str, ...], where: str) -> None:
    if set(obj) != set(keys):
        missing = sorted(set(keys) - set(obj))
        unknown = sorted(set(obj) - set(keys))
        raise DatasetError(f"{where}: missing keys {missing}, unknown keys {unknown}")


def _as_int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise DatasetError(f"{where}: expected an integer, got {value!r}")
    return value


def _as_number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DatasetError(f"{where}: expected a number, got {value!r}")
    return float(value)


def parse_manifest(text: str) -> DatasetManifest:
    """Parse and structurally validate manifest JSON (strict keys, dense ids)."""
    try:
        data = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise DatasetError(f"manifest is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise DatasetError("manifest top level must be a JSON object")
    _expect_keys(data, ("version", "num_classes", "class_names", "images"), "manifest")
    if _as_int(data["version"], "manifest.version") != MANIFEST_VERSION:
        raise DatasetError(f"unsupported manifest version {data['version']!r}")
    num_classes = _as_int(data["num_classes"], "manifest.num_classes")
    if num_classes < 1:
        raise DatasetError("num_classes must be positive")
    names = data["class_names"]
    if not isinstance(names, list) or len(names) != num_classes or not all(
        isinstance(n, str) for n in names
    ):
        raise DatasetError("class_names must list one string per class")
    raw_images = data["images"]
    if not isinstance(raw_images, list) or not raw_images:
        raise DatasetError("images must be a non-empty list")

    images: list[ImageAnnotations] = []
    for idx, entry in enumerate(raw_images):
        where = f"images[{idx}]"
        if not isinstance(entry, dict):
            raise DatasetError(f"{where}: expected an object")
        _expect_keys(entry, ("id", "objects"), where)
        image_id = _as_int(entry["id"], f"{where}.id")
        if image_id != idx:
            raise DatasetError(
                f"{where}: image ids must be dense and ascending (got {image_id}, expected {idx})"
            )
        raw_objects = entry["objects"]
        if not isinstance(raw_objects, list) or not raw_objects:
            raise DatasetError(f"{where}: every image needs at least one object")
        objects: list[ObjectRecord] = []
        for j, raw in enumerate(raw_objects):
            ow = f"{where}.objects[{j}]"
            if not isinstance(raw, dict):
                raise DatasetError(f"{ow}: expected an object")
            _expect_keys(raw, ("class", "box", "row"), ow)
            class_id = _as_int(raw["class"], f"{ow}.class")
            if not 0 <= class_id < num_classes:
                raise DatasetError(f"{ow}: class {class_id} outside [0, {num_classes})")
            box_raw = raw["box"]
            if not isinstance(box_raw, list) or len(box_raw) != 4:
                raise DatasetError(f"{ow}: box must be [left, top, right, bottom]")
            box = BoundingBox(*(_as_number(v, f"{ow}.box") for v in box_raw))
            row = _as_int(raw["row"], f"{ow}.row")
            if row < 0:
                raise DatasetError(f"{ow}: negative feature row {row}")
            objects.append(ObjectRecord(image_id, class_id, box, row))
        images.append(ImageAnnotations(image_id, objects))
    return DatasetManifest(num_classes, list(names), images)


def validate_dataset(manifest: DatasetManifest, features: FeatureStore) -> None:
    """Cross-check manifest row references against the feature store."""
    seen_rows: set[int] = set()
    total = 0
    for idx, img in enumerate(manifest.images):
        if img.image_id != idx:
            raise DatasetError("image ids must be dense 0..D-1")
        if not img.objects:
            raise DatasetError(f"image {idx} has no objects")
        for o in img.objects:
            if not 0 <= o.class_id < manifest.num_classes:
                raise DatasetError(f"image {idx}: class {o.class_id} out of range")
            if not 0 <= o.feature_row < features.row_count:
                raise DatasetError(
                    f"image {idx}: dangling feature row {o.feature_row} "
                    f"(store has {features.row_count} rows)"
                )
            if o.feature_row in seen_rows:
                raise DatasetError(f"feature row {o.feature_row} referenced more than once")
            seen_rows.add(o.feature_row)
            total += 1
    if features.row_count != total:
        raise DatasetError(
            f"feature row count {features.row_count} does not match object count {total}"
        )


def read_features(path) -> FeatureStore:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise DatasetError("feature file shorter than its header")
    magic, version, dim, row_count = _HEADER.unpack_from(raw)
    if magic != FEATURE_MAGIC:
        raise DatasetError(f"bad feature file magic {magic!r}")
    if version != FEATURE_VERSION:
        raise DatasetError(f"unsupported feature file version {version}")
    if dim < 1:
        raise DatasetError("feature dimension must be positive")
    expected = _HEADER.size + 4 * dim * row_count
    if len(raw) != expected:
        raise DatasetError(
            f"feature payload is {len(raw) - _HEADER.size} bytes, "
            f"header declares {expected - _HEADER.size}"
        )
    rows = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).reshape(row_count, dim)
    return FeatureStore(rows.copy())


def feature_bytes(store: FeatureStore) -> bytes:
    header = _HEADER.pack(FEATURE_MAGIC, FEATURE_VERSION, store.dim, store.row_count)
    return header + store.rows.astype("<f4", copy=False).tobytes(order="C")


def manifest_json(manifest: DatasetManifest) -> str:
    """Canonical manifest serialization (compact separators, fixed key order)."""
    payload = {
        "version": MANIFEST_VERSION,
        "num_classes": manifest.num_classes,
        "class_names": list(manifest.class_names),
        "images": [
            {
                "id": img.image_id,
                "objects": [
                    {
                        "class": o.class_id,
                        "box": [o.box.left, o.box.top, o.box.right, o.box.bottom],
                        "row": o.feature_row,
                    }
                    for o in img.objects
                ],
            }
            for img in manifest.images
        ],
    }
    return json.dumps(payload, separators=(",", ":"), ensure_ascii=False) + "\n"


def load_dataset(manifest_path, feature_path) -> Dataset:
    """Load and fully validate a manifest/feature file pair."""
    features = read_features(feature_path)
    manifest = parse_manifest(Path(manifest_path).read_text(encoding="utf-8"))
    validate_dataset(manifest, features)
    return Dataset(manifest, features)


def save_dataset(dataset: Dataset, manifest_path, feature_path) -> None:
    """Write the canonical on-disk form; load(save(d)) is byte-stable."""
    validate_dataset(dataset.manifest, dataset.features)
    Path(manifest_path).write_text(manifest_json(dataset.manifest), encoding="utf-8")
    Path(feature_path).write_bytes(feature_bytes(dataset.features))
