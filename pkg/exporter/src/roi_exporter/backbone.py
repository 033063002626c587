"""Real feature extraction: backbone trunk, RoI pooling over ground-truth
boxes (never proposals), per-RoI head, then global average pooling.

The ResNet50 C4 layout runs the trunk through layer3 (stride 16), pools each
ground-truth box to 14x14, pushes it through layer4 and global-average-pools
to one 2048-wide vector per annotation. The emitted feature width is
whatever the head actually yields; nothing downstream assumes 2048.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .annotations import AnnotationSet

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)

BACKBONES = ("resnet50",)


def extract_rows(
    annotations: AnnotationSet,
    images_root,
    backbone: str = "resnet50",
    weights_path=None,
) -> np.ndarray:
    """One pooled feature row per annotation, in manifest order."""
    import torch
    from PIL import Image
    from torchvision.models import resnet50
    from torchvision.ops import roi_align

    if backbone not in BACKBONES:
        raise ValueError(f"unknown backbone {backbone!r}; available: {BACKBONES}")
    model = resnet50(weights=None)
    if weights_path is not None:
        state = torch.load(weights_path, map_location="cpu")
        model.load_state_dict(state)
    model.eval()

    trunk = torch.nn.Sequential(
        model.conv1, model.bn1, model.relu, model.maxpool,
        model.layer1, model.layer2, model.layer3,
    )
    head = model.layer4
    mean = torch.tensor(IMAGENET_MEAN).view(3, 1, 1)
    std = torch.tensor(IMAGENET_STD).view(3, 1, 1)

    images_root = Path(images_root)
    all_rows: list[np.ndarray] = []
    with torch.no_grad():
        for img in annotations.images:
            path = images_root / img.file_name
            with Image.open(path) as pil:
                rgb = pil.convert("RGB")
                tensor = torch.from_numpy(np.asarray(rgb, dtype=np.float32) / 255.0)
            tensor = (tensor.permute(2, 0, 1) - mean) / std
            fmap = trunk(tensor.unsqueeze(0))
            boxes = torch.tensor(
                [[o.left, o.top, o.right, o.bottom] for o in img.objects],
                dtype=torch.float32,
            )
            pooled = roi_align(
                fmap, [boxes], output_size=(14, 14), spatial_scale=1.0 / 16.0,
                sampling_ratio=2, aligned=True,
            )
            feats = head(pooled).mean(dim=(2, 3))
            all_rows.append(feats.cpu().numpy().astype(np.float32))
    return np.concatenate(all_rows, axis=0)
