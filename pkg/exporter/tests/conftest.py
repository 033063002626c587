import json

import pytest

from coco_fixtures import coco_payload


@pytest.fixture
def coco_file(tmp_path):
    path = tmp_path / "instances.json"
    path.write_text(json.dumps(coco_payload()), encoding="utf-8")
    return path
