#!/usr/bin/env python3
"""Emit the per-class size-bucket similarity report as JSON: for one class,
the mean cosine between the class prototype and each image's per-size-bucket
mean feature, grouped by (size bucket, object-count bin).
"""

import argparse
import json
import sys

import csod


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--manifest", required=True)
    parser.add_argument("--features", required=True)
    parser.add_argument("--class-id", type=int, required=True)
    parser.add_argument("--size-thresholds", default=None, metavar="S,M")
    args = parser.parse_args()

    if args.size_thresholds:
        small, medium = (float(v) for v in args.size_thresholds.split(","))
        thresholds = csod.SizeThresholds(small, medium)
    else:
        thresholds = csod.SizeThresholds()

    ds = csod.load_dataset(args.manifest, args.features)
    report = csod.sizewise_similarity_report(ds, args.class_id, thresholds)
    json.dump(report, sys.stdout, indent=2)
    print()
    return 0


if __name__ == "__main__":
    sys.exit(main())
