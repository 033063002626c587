import json

import pytest

from roi_exporter.annotations import (
    AnnotationError,
    load_annotations,
    load_coco,
    load_voc_dir,
)

from coco_fixtures import coco_payload


class TestCoco:
    def test_classes_sorted_by_category_id(self, coco_file):
        ann = load_coco(coco_file)
        assert ann.class_names == ["person", "car", "dog"]
        assert len(ann.images) == 10

    def test_dense_ids_follow_source_order(self, coco_file):
        ann = load_coco(coco_file)
        assert [img.image_id for img in ann.images] == list(range(10))
        assert [img.source_key for img in ann.images] == [str(100 + k) for k in range(10)]

    def test_xywh_to_corner_conversion(self, coco_file):
        ann = load_coco(coco_file)
        first = ann.images[0].objects[0]
        assert (first.left, first.top) == (2.0, 4.0)
        assert (first.right, first.bottom) == (14.0, 13.0)

    def test_unannotated_images_dropped(self, tmp_path):
        payload = coco_payload(num_images=3)
        payload["images"].append({"id": 999, "file_name": "empty.png"})
        path = tmp_path / "coco.json"
        path.write_text(json.dumps(payload))
        ann = load_coco(path)
        assert len(ann.images) == 3
        assert all(img.source_key != "999" for img in ann.images)

    def test_degenerate_box_rejected(self, tmp_path):
        payload = coco_payload(num_images=2)
        payload["annotations"][0]["bbox"] = [5.0, 5.0, 0.0, 4.0]
        path = tmp_path / "coco.json"
        path.write_text(json.dumps(payload))
        with pytest.raises(AnnotationError, match="degenerate"):
            load_coco(path)

    def test_unknown_category_rejected(self, tmp_path):
        payload = coco_payload(num_images=2)
        payload["annotations"][0]["category_id"] = 777
        path = tmp_path / "coco.json"
        path.write_text(json.dumps(payload))
        with pytest.raises(AnnotationError, match="unknown category"):
            load_coco(path)


VOC_XML = """<annotation>
  <filename>{name}.jpg</filename>
  <object><name>{cls1}</name>
    <bndbox><xmin>4</xmin><ymin>6</ymin><xmax>20</xmax><ymax>18</ymax></bndbox>
  </object>
  <object><name>{cls2}</name>
    <bndbox><xmin>1</xmin><ymin>2</ymin><xmax>9</xmax><ymax>11</ymax></bndbox>
  </object>
</annotation>
"""


class TestVoc:
    def test_directory_parse(self, tmp_path):
        voc = tmp_path / "voc"
        voc.mkdir()
        for i, (a, b) in enumerate([("dog", "cat"), ("cat", "bird"), ("dog", "bird")]):
            (voc / f"im_{i}.xml").write_text(VOC_XML.format(name=f"im_{i}", cls1=a, cls2=b))
        ann = load_voc_dir(voc)
        assert ann.class_names == ["bird", "cat", "dog"]
        assert len(ann.images) == 3
        assert ann.total_objects() == 6
        assert ann.images[0].file_name == "im_0.jpg"

    def test_dispatch(self, tmp_path, coco_file):
        assert load_annotations(coco_file).total_objects() > 0
        voc = tmp_path / "voc"
        voc.mkdir()
        (voc / "a.xml").write_text(VOC_XML.format(name="a", cls1="dog", cls2="cat"))
        assert load_annotations(voc).total_objects() == 2
        with pytest.raises(AnnotationError):
            load_annotations(tmp_path / "nope.txt")
