#!/usr/bin/env python3
"""Sweep the balance weight over its standard grid on a synthetic dataset and
print coverage per lambda, showing the representativeness/diversity trade-off.
"""

import argparse
import sys

import csod

GRID = [1e-10, 0.0005, 0.005, 0.0125, 0.025, 0.0375, 0.04375,
        0.05, 0.0625, 0.1, 0.125, 0.25, 0.5, 1e10]


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--images", type=int, default=1000)
    parser.add_argument("--classes", type=int, default=10)
    parser.add_argument("--n", type=int, default=100)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    spec = csod.SynthSpec(
        num_classes=args.classes,
        num_images=args.images,
        dim=8,
        objects_per_image=(1, 3),
        class_presence_prob=(0.15,) * args.classes,
        cluster_centers=csod.random_unit_centers(args.classes, 2, 8, args.seed),
        cluster_spread=0.1,
        box_area_range=(100.0, 40000.0),
        seed=args.seed,
    )
    ds, _ = csod.generate(spec)
    index = csod.build_imagewise(ds)
    results = csod.sweep_lambda(
        ds, index, csod.SelectionConfig(target_count=args.n), GRID
    )

    print(f"{'lambda':>12} {'coverage':>9} {'annotations':>12} {'entropy':>8}")
    for lam, result in zip(GRID, results):
        report = csod.subset_report(ds, result.selected_image_ids)
        cov = csod.coverage_objective(ds, result.selected_image_ids)
        print(f"{lam!r:>12} {cov:>9.4f} {report.annotation_count:>12} "
              f"{report.class_ratio_entropy:>8.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
