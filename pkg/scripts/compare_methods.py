#!/usr/bin/env python3
"""Run every selection method on one synthetic dataset and rank them by the
coverage proxy. Usage: python scripts/compare_methods.py [--images N] [--n K]
"""

import argparse
import sys

import numpy as np

import csod


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--images", type=int, default=1000)
    parser.add_argument("--classes", type=int, default=10)
    parser.add_argument("--n", type=int, default=50)
    parser.add_argument("--dim", type=int, default=8)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    spec = csod.SynthSpec(
        num_classes=args.classes,
        num_images=args.images,
        dim=args.dim,
        objects_per_image=(1, 3),
        class_presence_prob=(0.15,) * args.classes,
        cluster_centers=csod.random_unit_centers(args.classes, 2, args.dim, args.seed),
        cluster_spread=0.1,
        box_area_range=(100.0, 40000.0),
        seed=args.seed,
    )
    ds, _ = csod.generate(spec)
    index_iw = csod.build_imagewise(ds)
    index_ow = csod.build_objectwise(ds)
    n = args.n

    runs = {
        "csod": lambda: csod.select(ds, index_iw, csod.SelectionConfig(target_count=n)),
        "csod-objectwise": lambda: csod.select(
            ds, index_ow, csod.SelectionConfig(target_count=n, candidate_mode="objectwise")
        ),
        "random-full": lambda: csod.random_full(ds, n, seed=args.seed),
        "random-uniform": lambda: csod.random_uniform(ds, n, seed=args.seed),
        "random-ratio": lambda: csod.random_ratio(ds, n, seed=args.seed),
        "random-anno-max": lambda: csod.random_annotation_max(ds, n),
        "herding": lambda: csod.herding(ds, n),
        "kcenter": lambda: csod.kcenter_greedy(ds, n),
        "facility-location": lambda: csod.facility_location_greedy(ds, n),
    }

    scores = []
    for name, run in runs.items():
        result = run()
        report = csod.subset_report(ds, result.selected_image_ids)
        scores.append(
            (
                csod.coverage_objective(ds, result.selected_image_ids),
                name,
                report.annotation_count,
                report.class_ratio_entropy,
                report.kl_to_reference["size"],
            )
        )
    scores.sort(reverse=True)
    print(f"{'method':<20} {'coverage':>9} {'annos':>6} {'entropy':>8} {'kl_size':>8}")
    for cov, name, annos, entropy, kl in scores:
        print(f"{name:<20} {cov:>9.4f} {annos:>6} {entropy:>8.4f} {kl:>8.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
