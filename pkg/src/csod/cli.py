"""Command-line surface: select | sweep | analyze | synth | bench.

Machine-readable outputs (JSON/CSV) go to files; human summaries go to
stderr. Exit codes: 0 success, 1 usage error, 2 validation error, 3 partial
result. All randomness flows from --seed, defaulting to 0.
"""

from __future__ import annotations

import argparse
import csv
import json
import statistics
import sys
import time
from pathlib import Path

from . import baselines, metrics, selection, synth
from .model import Dataset, DatasetError, SelectionResult, load_dataset
from .prototypes import IMAGEWISE, OBJECTWISE, build
from .selection import SelectionConfig, SelectionError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_PARTIAL = 3

METHODS = (
    "csod",
    "csod-objectwise",
    "random-full",
    "random-uniform",
    "random-ratio",
    "random-anno-range",
    "random-anno-max",
    "herding",
    "kcenter",
    "facility-location",
)

DEFAULT_LAMBDA_GRID = (
    1e-10, 0.0005, 0.005, 0.0125, 0.025, 0.0375, 0.04375,
    0.05, 0.0625, 0.1, 0.125, 0.25, 0.5, 1e10,
)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        raise _UsageError(message)


def _csv_ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v != ""]
    except ValueError as exc:
        raise _UsageError(f"expected comma-separated integers, got {text!r}") from exc


def _csv_floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v != ""]
    except ValueError as exc:
        raise _UsageError(f"expected comma-separated numbers, got {text!r}") from exc


def _pair(text: str, caster, what: str):
    parts = text.split(",")
    if len(parts) != 2:
        raise _UsageError(f"expected {what} as 'a,b', got {text!r}")
    return caster(parts[0]), caster(parts[1])


def _lambda_class(entries) -> dict[int, float] | None:
    if not entries:
        return None
    out: dict[int, float] = {}
    for entry in entries:
        left, sep, right = entry.partition("=")
        if not sep:
            raise _UsageError(f"expected --lambda-class as c=v, got {entry!r}")
        out[int(left)] = float(right)
    return out


def _read_exclude(path: str) -> frozenset[int]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(data, dict) and "selected_image_ids" in data:
        data = data["selected_image_ids"]
    if not isinstance(data, list) or not all(isinstance(i, int) for i in data):
        raise DatasetError(f"exclusion file {path} must hold an id list or a selection result")
    return frozenset(data)


def _write_run_record(out_path: Path, argv: list[str], config: dict, seconds: float, outputs):
    record = {
        "command": argv,
        "config": config,
        "timings": {"total_seconds": seconds},
        "outputs": [str(p) for p in outputs],
    }
    path = out_path.with_suffix(".run.json")
    path.write_text(json.dumps(record, indent=2) + "\n", encoding="utf-8")
    return path


def _write_result(result: SelectionResult, out: Path) -> None:
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(result.to_json(), encoding="utf-8")


def _forbid(args, names: list[str]) -> None:
    for name in names:
        if getattr(args, name.replace("-", "_"), None):
            raise _UsageError(f"--{name} only applies to csod methods")


def _run_selected_method(dataset: Dataset, args) -> SelectionResult:
    n = args.n
    if args.method in ("csod", "csod-objectwise"):
        mode = IMAGEWISE if args.method == "csod" else OBJECTWISE
        config = SelectionConfig(
            target_count=n,
            lam=getattr(args, "lambda"),
            lam_per_class=_lambda_class(args.lambda_class),
            class_order=tuple(_csv_ints(args.class_order)) if args.class_order else None,
            presample_per_class=args.presample,
            excluded_image_ids=_read_exclude(args.exclude) if args.exclude else frozenset(),
            seed=args.seed,
            candidate_mode=mode,
        )
        index = build(dataset, mode)
        step_sink = None
        step_file = None
        if args.step_log:
            step_file = open(args.step_log, "w", encoding="utf-8")

            def step_sink(record: dict) -> None:
                step_file.write(json.dumps(record, separators=(",", ":")) + "\n")

        try:
            return selection.select(dataset, index, config, step_sink=step_sink)
        finally:
            if step_file is not None:
                step_file.close()

    _forbid(args, ["lambda", "lambda-class", "presample", "exclude", "class-order", "step-log"])
    if args.method == "random-full":
        return baselines.random_full(dataset, n, args.seed)
    if args.method == "random-uniform":
        return baselines.random_uniform(dataset, n, args.seed)
    if args.method == "random-ratio":
        return baselines.random_ratio(dataset, n, args.seed)
    if args.method == "random-anno-range":
        if not args.anno_range:
            raise _UsageError("random-anno-range requires --anno-range lo,hi")
        lo, hi = _pair(args.anno_range, int, "--anno-range")
        return baselines.random_annotation_range(dataset, n, args.seed, lo, hi)
    if args.method == "random-anno-max":
        return baselines.random_annotation_max(dataset, n)
    if args.method == "herding":
        return baselines.herding(dataset, n)
    if args.method == "kcenter":
        return baselines.kcenter_greedy(dataset, n)
    if args.method == "facility-location":
        return baselines.facility_location_greedy(dataset, n)
    raise _UsageError(f"unknown method {args.method!r}")


def _cmd_select(args, argv) -> int:
    t0 = time.perf_counter()
    dataset = load_dataset(args.manifest, args.features)
    result = _run_selected_method(dataset, args)
    out = Path(args.out)
    _write_result(result, out)
    _write_run_record(out, argv, result.config_echo, time.perf_counter() - t0, [out])
    print(
        f"{result.method}: picked {len(result.selected_image_ids)} images"
        + (" (partial)" if result.stats["partial"] else ""),
        file=sys.stderr,
    )
    return EXIT_PARTIAL if result.stats["partial"] else EXIT_OK


def _cmd_sweep(args, argv) -> int:
    t0 = time.perf_counter()
    dataset = load_dataset(args.manifest, args.features)
    grid = _csv_floats(args.lambda_grid) if args.lambda_grid else list(DEFAULT_LAMBDA_GRID)
    mode = IMAGEWISE if args.method == "csod" else OBJECTWISE
    config = SelectionConfig(
        target_count=args.n,
        class_order=tuple(_csv_ints(args.class_order)) if args.class_order else None,
        presample_per_class=args.presample,
        excluded_image_ids=_read_exclude(args.exclude) if args.exclude else frozenset(),
        seed=args.seed,
        candidate_mode=mode,
    )
    index = build(dataset, mode)
    results = selection.sweep_lambda(dataset, index, config, grid)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = []
    summary = out_dir / "summary.csv"
    with open(summary, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "lambda", "picks", "partial", "coverage_objective",
                "annotation_count", "class_ratio_entropy", "kl_size", "kl_class",
            ]
        )
        for lam, result in zip(grid, results):
            path = out_dir / f"result_lambda_{lam!r}.json"
            _write_result(result, path)
            outputs.append(path)
            report = metrics.subset_report(dataset, result.selected_image_ids)
            writer.writerow(
                [
                    repr(lam),
                    len(result.selected_image_ids),
                    int(result.stats["partial"]),
                    f"{metrics.coverage_objective(dataset, result.selected_image_ids):.6f}",
                    report.annotation_count,
                    f"{report.class_ratio_entropy:.6f}",
                    f"{report.kl_to_reference['size']:.6f}",
                    f"{report.kl_to_reference['class']:.6f}",
                ]
            )
    outputs.append(summary)
    _write_run_record(summary, argv, config.echo(), time.perf_counter() - t0, outputs)
    print(f"sweep: {len(grid)} lambda points -> {out_dir}", file=sys.stderr)
    return EXIT_OK


def _cmd_analyze(args, argv) -> int:
    t0 = time.perf_counter()
    dataset = load_dataset(args.manifest, args.features)
    if args.result:
        data = json.loads(Path(args.result).read_text(encoding="utf-8"))
        ids = data["selected_image_ids"]
    elif args.ids == "all":
        ids = list(range(dataset.num_images))
    elif args.ids:
        ids = _csv_ints(args.ids)
    else:
        raise _UsageError("analyze needs --result or --ids")
    thresholds = (
        metrics.SizeThresholds(*_pair(args.size_thresholds, float, "--size-thresholds"))
        if args.size_thresholds
        else metrics.SizeThresholds()
    )
    report = metrics.subset_report(dataset, ids, thresholds)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(report.to_json(), encoding="utf-8")
    _write_run_record(
        out,
        argv,
        {"ids": sorted(set(ids)), "size_thresholds": [thresholds.small_max, thresholds.medium_max]},
        time.perf_counter() - t0,
        [out],
    )
    print(
        f"analyze: {report.image_count} images, {report.annotation_count} annotations",
        file=sys.stderr,
    )
    return EXIT_OK


def _cmd_synth(args, argv) -> int:
    t0 = time.perf_counter()
    if args.presence:
        presence = _csv_floats(args.presence)
        if len(presence) == 1:
            presence = presence * args.classes
    else:
        presence = [min(1.0, 2.0 / args.classes)] * args.classes
    spec = synth.SynthSpec(
        num_classes=args.classes,
        num_images=args.images,
        dim=args.dim,
        objects_per_image=_pair(args.objects, int, "--objects"),
        class_presence_prob=tuple(presence),
        cluster_centers=synth.random_unit_centers(
            args.classes, args.clusters, args.dim, args.seed
        ),
        cluster_spread=args.spread,
        box_area_range=_pair(args.area, float, "--area"),
        seed=args.seed,
        cluster_assignment=args.cluster_assignment,
    )
    dataset = synth.generate_files(spec, args.out_manifest, args.out_features, args.out_truth)
    _write_run_record(
        Path(args.out_manifest),
        argv,
        {"images": args.images, "classes": args.classes, "dim": args.dim, "seed": args.seed},
        time.perf_counter() - t0,
        [args.out_manifest, args.out_features, args.out_truth],
    )
    print(
        f"synth: {dataset.num_images} images, {dataset.manifest.total_objects()} objects",
        file=sys.stderr,
    )
    return EXIT_OK


def _cmd_bench(args, argv) -> int:
    t0 = time.perf_counter()
    dataset = load_dataset(args.manifest, args.features)
    counts = _csv_ints(args.counts)
    index = build(dataset, IMAGEWISE)
    rows = []
    for n in counts:
        config = SelectionConfig(
            target_count=n, lam=getattr(args, "lambda"), seed=args.seed
        )
        times = []
        for _ in range(args.repeats):
            start = time.perf_counter()
            selection.select(dataset, index, config)
            times.append(time.perf_counter() - start)
        rows.append((n, statistics.median(times)))
        print(f"bench: n={n} median {rows[-1][1]:.4f}s over {args.repeats} runs", file=sys.stderr)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["count", "seconds"])
        for n, seconds in rows:
            writer.writerow([n, f"{seconds:.6f}"])
    _write_run_record(
        out, argv, {"counts": counts, "repeats": args.repeats}, time.perf_counter() - t0, [out]
    )
    return EXIT_OK


def _build_parser() -> _Parser:
    parser = _Parser(prog="csod", description="Coreset selection for detection datasets")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_dataset_flags(p):
        p.add_argument("--manifest", required=True)
        p.add_argument("--features", required=True)

    p = sub.add_parser("select", help="run one selection method")
    add_dataset_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--method", required=True, choices=METHODS)
    p.add_argument("--n", required=True, type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lambda", type=float, default=None, dest="lambda")
    p.add_argument("--lambda-class", action="append", default=[], metavar="C=V")
    p.add_argument("--presample", type=int, default=None)
    p.add_argument("--exclude", default=None, help="JSON id list or prior result file")
    p.add_argument("--class-order", default=None, metavar="CSV")
    p.add_argument("--anno-range", default=None, metavar="LO,HI")
    p.add_argument("--step-log", default=None, help="per-step JSONL stream")
    p.set_defaults(run=_cmd_select)

    p = sub.add_parser("sweep", help="run select over a lambda grid")
    add_dataset_flags(p)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--n", required=True, type=int)
    p.add_argument("--method", default="csod", choices=("csod", "csod-objectwise"))
    p.add_argument("--lambda-grid", default=None, metavar="CSV")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--presample", type=int, default=None)
    p.add_argument("--exclude", default=None)
    p.add_argument("--class-order", default=None, metavar="CSV")
    p.set_defaults(run=_cmd_sweep)

    p = sub.add_parser("analyze", help="report subset statistics")
    add_dataset_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--result", default=None, help="selection result JSON")
    p.add_argument("--ids", default=None, help="comma-separated ids or 'all'")
    p.add_argument("--size-thresholds", default=None, metavar="S,M")
    p.set_defaults(run=_cmd_analyze)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--out-manifest", required=True)
    p.add_argument("--out-features", required=True)
    p.add_argument("--out-truth", required=True)
    p.add_argument("--images", required=True, type=int)
    p.add_argument("--classes", required=True, type=int)
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--clusters", type=int, default=1)
    p.add_argument("--spread", type=float, default=0.1)
    p.add_argument("--objects", default="1,4", metavar="LO,HI")
    p.add_argument("--presence", default=None, metavar="P or CSV")
    p.add_argument("--area", default="100,40000", metavar="LO,HI")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--cluster-assignment", default=synth.PER_OBJECT,
        choices=(synth.PER_OBJECT, synth.PER_IMAGE_CLASS),
    )
    p.set_defaults(run=_cmd_synth)

    p = sub.add_parser("bench", help="time selection at several target counts")
    add_dataset_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--counts", required=True, metavar="CSV")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--lambda", type=float, default=None, dest="lambda")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(run=_cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.run(args, argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DatasetError, SelectionError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
