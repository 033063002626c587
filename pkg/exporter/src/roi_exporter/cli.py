"""The export command: annotations in, manifest + feature files out."""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

from .annotations import AnnotationError, load_annotations
from .mock import mock_rows
from .writer import ExportError, write_outputs

DEFAULT_MOCK_DIM = 2048


@dataclass(frozen=True)
class ExportJob:
    annotations_path: Path
    out_manifest: Path
    out_features: Path
    mock: bool = False
    mock_seed: int = 0
    mock_dim: int = DEFAULT_MOCK_DIM
    backbone: str = "resnet50"
    images_root: Path | None = None
    weights_path: Path | None = None


def run_export(job: ExportJob) -> int:
    annotations = load_annotations(job.annotations_path)
    if job.mock:
        rows = mock_rows(annotations, seed=job.mock_seed, dim=job.mock_dim)
    else:
        from .backbone import extract_rows

        images_root = job.images_root or Path(job.annotations_path).parent
        rows = extract_rows(
            annotations, images_root, backbone=job.backbone, weights_path=job.weights_path
        )
    write_outputs(annotations, rows, job.out_manifest, job.out_features)
    print(
        f"exported {len(annotations.images)} images / {annotations.total_objects()} "
        f"objects, dim {rows.shape[1]} -> {job.out_manifest}, {job.out_features}",
        file=sys.stderr,
    )
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="roi-export",
        description="Export per-object features from detection annotations",
    )
    parser.add_argument("--annotations", required=True,
                        help="COCO .json file or VOC XML directory")
    parser.add_argument("--out-manifest", required=True)
    parser.add_argument("--out-features", required=True)
    parser.add_argument("--mock", action="store_true",
                        help="deterministic pseudo-features, no backbone needed")
    parser.add_argument("--seed", type=int, default=0, help="mock feature seed")
    parser.add_argument("--dim", type=int, default=DEFAULT_MOCK_DIM,
                        help="mock feature width")
    parser.add_argument("--backbone", default="resnet50")
    parser.add_argument("--images-root", default=None,
                        help="image directory (defaults next to the annotations)")
    parser.add_argument("--weights", default=None,
                        help="optional backbone state-dict path")
    args = parser.parse_args(argv)

    job = ExportJob(
        annotations_path=Path(args.annotations),
        out_manifest=Path(args.out_manifest),
        out_features=Path(args.out_features),
        mock=args.mock,
        mock_seed=args.seed,
        mock_dim=args.dim,
        backbone=args.backbone,
        images_root=Path(args.images_root) if args.images_root else None,
        weights_path=Path(args.weights) if args.weights else None,
    )
    try:
        return run_export(job)
    except (AnnotationError, ExportError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
