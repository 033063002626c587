import json


def coco_payload(num_images=10, classes=("person", "car", "dog")):
    """Small COCO-style annotation dict with 2-3 boxes per image."""
    categories = [{"id": 10 * (i + 1), "name": name} for i, name in enumerate(classes)]
    images = []
    annotations = []
    ann_id = 1
    for k in range(num_images):
        image_id = 100 + k
        images.append(
            {"id": image_id, "file_name": f"img_{k:03d}.png", "width": 64, "height": 64}
        )
        for j in range(2 + k % 2):
            cat = categories[(k + j) % len(classes)]["id"]
            x, y = 2.0 + 3 * j, 4.0 + 2 * j
            annotations.append(
                {
                    "id": ann_id,
                    "image_id": image_id,
                    "category_id": cat,
                    "bbox": [x, y, 12.0 + j, 9.0 + j],
                }
            )
            ann_id += 1
    return {"images": images, "annotations": annotations, "categories": categories}
