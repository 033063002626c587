"""Annotation ingestion: COCO-style JSON or a directory of VOC XML files.

Both sources normalize to the same shape: class names sorted into dense
indices, images kept in a deterministic order with dense ids, and images
without annotations dropped (the downstream format rejects empty images).
"""

from __future__ import annotations

import json
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path


class AnnotationError(ValueError):
    """The annotation source cannot be parsed into a valid export set."""


@dataclass(frozen=True)
class SourceObject:
    class_id: int
    left: float
    top: float
    right: float
    bottom: float


@dataclass
class SourceImage:
    image_id: int          # dense id in the exported manifest
    source_key: str        # original id or file stem
    file_name: str
    objects: list[SourceObject]


@dataclass
class AnnotationSet:
    class_names: list[str]
    images: list[SourceImage]

    def total_objects(self) -> int:
        return sum(len(img.objects) for img in self.images)


def _check_box(left, top, right, bottom, where: str) -> tuple[float, float, float, float]:
    try:
        box = (float(left), float(top), float(right), float(bottom))
    except (TypeError, ValueError) as exc:
        raise AnnotationError(f"{where}: non-numeric box") from exc
    if not (box[0] < box[2] and box[1] < box[3]):
        raise AnnotationError(f"{where}: degenerate box {box}")
    return box


def load_coco(path) -> AnnotationSet:
    """COCO detection JSON: categories, images, annotations with xywh boxes."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise AnnotationError(f"{path} is not valid JSON: {exc}") from exc
    for key in ("images", "annotations", "categories"):
        if key not in data or not isinstance(data[key], list):
            raise AnnotationError(f"{path}: missing COCO section {key!r}")

    categories = sorted(data["categories"], key=lambda c: c["id"])
    if not categories:
        raise AnnotationError(f"{path}: no categories")
    class_index = {c["id"]: i for i, c in enumerate(categories)}
    class_names = [str(c["name"]) for c in categories]

    by_image: dict = {}
    for ann in sorted(data["annotations"], key=lambda a: a.get("id", 0)):
        where = f"annotation {ann.get('id', '?')}"
        if ann.get("category_id") not in class_index:
            raise AnnotationError(f"{where}: unknown category {ann.get('category_id')!r}")
        bbox = ann.get("bbox")
        if not isinstance(bbox, list) or len(bbox) != 4:
            raise AnnotationError(f"{where}: bbox must be [x, y, w, h]")
        x, y, w, h = (float(v) for v in bbox)
        box = _check_box(x, y, x + w, y + h, where)
        by_image.setdefault(ann["image_id"], []).append(
            SourceObject(class_index[ann["category_id"]], *box)
        )

    images: list[SourceImage] = []
    for entry in sorted(data["images"], key=lambda im: im["id"]):
        objects = by_image.pop(entry["id"], None)
        if not objects:
            continue  # images without annotations cannot be exported
        images.append(
            SourceImage(
                image_id=len(images),
                source_key=str(entry["id"]),
                file_name=str(entry.get("file_name", "")),
                objects=objects,
            )
        )
    if by_image:
        raise AnnotationError(f"{path}: annotations reference unknown images {sorted(by_image)}")
    if not images:
        raise AnnotationError(f"{path}: no annotated images")
    return AnnotationSet(class_names, images)


def load_voc_dir(path) -> AnnotationSet:
    """Directory of VOC XML files, one per image, ordered by filename."""
    xml_files = sorted(Path(path).glob("*.xml"))
    if not xml_files:
        raise AnnotationError(f"{path}: no XML files found")

    parsed = []
    names: set[str] = set()
    for xml_path in xml_files:
        try:
            root = ET.parse(xml_path).getroot()
        except ET.ParseError as exc:
            raise AnnotationError(f"{xml_path}: XML parse error: {exc}") from exc
        raw_objects = []
        for obj in root.findall("object"):
            name = obj.findtext("name")
            if not name:
                raise AnnotationError(f"{xml_path}: object without a name")
            bnd = obj.find("bndbox")
            if bnd is None:
                raise AnnotationError(f"{xml_path}: object without a bndbox")
            box = _check_box(
                bnd.findtext("xmin"), bnd.findtext("ymin"),
                bnd.findtext("xmax"), bnd.findtext("ymax"),
                str(xml_path),
            )
            raw_objects.append((name, box))
            names.add(name)
        if raw_objects:
            file_name = root.findtext("filename") or xml_path.with_suffix(".jpg").name
            parsed.append((xml_path.stem, file_name, raw_objects))

    if not parsed:
        raise AnnotationError(f"{path}: no annotated images")
    class_names = sorted(names)
    class_index = {n: i for i, n in enumerate(class_names)}
    images = [
        SourceImage(
            image_id=i,
            source_key=stem,
            file_name=file_name,
            objects=[SourceObject(class_index[n], *box) for n, box in raw_objects],
        )
        for i, (stem, file_name, raw_objects) in enumerate(parsed)
    ]
    return AnnotationSet(class_names, images)


def load_annotations(path) -> AnnotationSet:
    """Dispatch on the source: a JSON file is COCO, a directory is VOC XML."""
    p = Path(path)
    if p.is_dir():
        return load_voc_dir(p)
    if p.suffix.lower() == ".json":
        return load_coco(p)
    raise AnnotationError(f"{path}: expected a COCO .json file or a VOC XML directory")
