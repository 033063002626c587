import csv
import json

import pytest

from csod.cli import EXIT_OK, EXIT_PARTIAL, EXIT_USAGE, EXIT_VALIDATION, main


@pytest.fixture
def dataset_files(tmp_path):
    manifest = tmp_path / "m.json"
    features = tmp_path / "f.bin"
    truth = tmp_path / "t.json"
    code = main(
        [
            "synth",
            "--out-manifest", str(manifest),
            "--out-features", str(features),
            "--out-truth", str(truth),
            "--images", "40",
            "--classes", "4",
            "--dim", "8",
            "--clusters", "2",
            "--seed", "3",
        ]
    )
    assert code == EXIT_OK
    return manifest, features


def run_select(tmp_path, manifest, features, out_name, *extra):
    out = tmp_path / out_name
    code = main(
        [
            "select",
            "--manifest", str(manifest),
            "--features", str(features),
            "--out", str(out),
            *extra,
        ]
    )
    return code, out


class TestSelect:
    def test_every_method_runs(self, tmp_path, dataset_files):
        manifest, features = dataset_files
        methods = [
            ("csod", []),
            ("csod-objectwise", []),
            ("random-full", []),
            ("random-uniform", []),
            ("random-ratio", []),
            ("random-anno-range", ["--anno-range", "0,100000"]),
            ("random-anno-max", []),
            ("herding", []),
            ("kcenter", []),
            ("facility-location", []),
        ]
        for method, extra in methods:
            code, out = run_select(
                tmp_path, manifest, features, f"{method}.json",
                "--method", method, "--n", "8", *extra,
            )
            assert code == EXIT_OK, method
            payload = json.loads(out.read_text())
            assert payload["method"] == method
            assert len(payload["selected_image_ids"]) == 8
            assert out.with_suffix(".run.json").exists()

    def test_identical_invocations_byte_identical(self, tmp_path, dataset_files):
        manifest, features = dataset_files
        _, out1 = run_select(
            tmp_path, manifest, features, "r1.json",
            "--method", "csod", "--n", "10", "--lambda", "0.04375",
        )
        _, out2 = run_select(
            tmp_path, manifest, features, "r2.json",
            "--method", "csod", "--n", "10", "--lambda", "0.04375",
        )
        assert out1.read_bytes() == out2.read_bytes()

    def test_select_all_images(self, tmp_path, dataset_files):
        manifest, features = dataset_files
        code, out = run_select(
            tmp_path, manifest, features, "all.json",
            "--method", "csod", "--n", "40",
        )
        assert code == EXIT_OK
        payload = json.loads(out.read_text())
        assert sorted(payload["selected_image_ids"]) == list(range(40))

    def test_reference_configuration_200_images(self, tmp_path):
        # the standard 200-image run: --n 200 --lambda 0.04375
        manifest = tmp_path / "m.json"
        features = tmp_path / "f.bin"
        assert main(
            [
                "synth",
                "--out-manifest", str(manifest), "--out-features", str(features),
                "--out-truth", str(tmp_path / "t.json"),
                "--images", "300", "--classes", "10", "--dim", "8",
                "--clusters", "2", "--seed", "11",
            ]
        ) == EXIT_OK
        code, out = run_select(
            tmp_path, manifest, features, "main.json",
            "--method", "csod", "--n", "200", "--lambda", "0.04375",
        )
        assert code == EXIT_OK
        payload = json.loads(out.read_text())
        assert len(payload["selected_image_ids"]) == 200
        assert payload["config_echo"]["lambda"] == 0.04375

    def test_default_lambda_written_to_echo(self, tmp_path, dataset_files):
        manifest, features = dataset_files
        _, out = run_select(
            tmp_path, manifest, features, "d.json", "--method", "csod", "--n", "10"
        )
        payload = json.loads(out.read_text())
        assert payload["config_echo"]["lambda"] == 0.025  # clamped low anchor

    def test_partial_exit_code(self, tmp_path, dataset_files):
        manifest, features = dataset_files
        code, out = run_select(
            tmp_path, manifest, features, "p.json",
            "--method", "csod", "--n", "35", "--presample", "2",
        )
        assert code == EXIT_PARTIAL
        assert json.loads(out.read_text())["stats"]["partial"] is True

    def test_usage_errors(self, tmp_path, dataset_files):
        manifest, features = dataset_files
        code, _ = run_select(
            tmp_path, manifest, features, "u.json",
            "--method", "no-such-method", "--n", "5",
        )
        assert code == EXIT_USAGE
        code, _ = run_select(
            tmp_path, manifest, features, "u2.json",
            "--method", "herding", "--n", "5", "--lambda", "0.5",
        )
        assert code == EXIT_USAGE
        code, _ = run_select(
            tmp_path, manifest, features, "u3.json",
            "--method", "random-anno-range", "--n", "5",
        )
        assert code == EXIT_USAGE

    def test_validation_errors(self, tmp_path, dataset_files):
        manifest, features = dataset_files
        code, _ = run_select(
            tmp_path, manifest, features, "v.json",
            "--method", "csod", "--n", "999",
        )
        assert code == EXIT_VALIDATION
        bad = tmp_path / "bad.bin"
        bad.write_bytes(b"NOTAFILE")
        code = main(
            [
                "select",
                "--manifest", str(manifest),
                "--features", str(bad),
                "--out", str(tmp_path / "x.json"),
                "--method", "csod",
                "--n", "5",
            ]
        )
        assert code == EXIT_VALIDATION

    def test_exclude_reselect_disjoint(self, tmp_path, dataset_files):
        manifest, features = dataset_files
        _, first = run_select(
            tmp_path, manifest, features, "first.json",
            "--method", "csod", "--n", "12",
        )
        code, second = run_select(
            tmp_path, manifest, features, "second.json",
            "--method", "csod", "--n", "12", "--exclude", str(first),
        )
        assert code == EXIT_OK
        a = set(json.loads(first.read_text())["selected_image_ids"])
        b = set(json.loads(second.read_text())["selected_image_ids"])
        assert not a & b
        assert len(a | b) == 24

    def test_step_log_stream(self, tmp_path, dataset_files):
        manifest, features = dataset_files
        log = tmp_path / "steps.jsonl"
        code, _ = run_select(
            tmp_path, manifest, features, "s.json",
            "--method", "csod", "--n", "6", "--step-log", str(log),
        )
        assert code == EXIT_OK
        lines = [json.loads(line) for line in log.read_text().splitlines()]
        assert len(lines) == 6
        assert all(
            {"step", "class_id", "picked_image_id", "pool_sizes", "micros"} <= set(line)
            for line in lines
        )

    def test_lambda_class_override(self, tmp_path, dataset_files):
        manifest, features = dataset_files
        code, out = run_select(
            tmp_path, manifest, features, "lc.json",
            "--method", "csod", "--n", "8",
            "--lambda", "0.1", "--lambda-class", "2=0.9",
        )
        assert code == EXIT_OK
        echo = json.loads(out.read_text())["config_echo"]
        assert echo["lambda_per_class"] == {"2": 0.9}


class TestSweep:
    def test_summary_rows_match_grid(self, tmp_path, dataset_files):
        manifest, features = dataset_files
        out_dir = tmp_path / "sweep"
        code = main(
            [
                "sweep",
                "--manifest", str(manifest),
                "--features", str(features),
                "--out-dir", str(out_dir),
                "--n", "8",
                "--lambda-grid", "1e-10,0.05,1e10",
            ]
        )
        assert code == EXIT_OK
        with open(out_dir / "summary.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 3
        # lambda column carries repr(float): exact round-trip
        assert [float(row["lambda"]) for row in rows] == [1e-10, 0.05, 1e10]
        assert len(list(out_dir.glob("result_lambda_*.json"))) == 3
        assert (out_dir / "summary.run.json").exists()

    def test_default_grid_size(self, tmp_path, dataset_files):
        manifest, features = dataset_files
        out_dir = tmp_path / "sweep_default"
        code = main(
            [
                "sweep",
                "--manifest", str(manifest),
                "--features", str(features),
                "--out-dir", str(out_dir),
                "--n", "5",
            ]
        )
        assert code == EXIT_OK
        with open(out_dir / "summary.csv", newline="") as fh:
            assert len(list(csv.DictReader(fh))) == 14


class TestAnalyze:
    def test_full_dataset_kl_zero(self, tmp_path, dataset_files):
        manifest, features = dataset_files
        out = tmp_path / "report.json"
        code = main(
            [
                "analyze",
                "--manifest", str(manifest),
                "--features", str(features),
                "--out", str(out),
                "--ids", "all",
            ]
        )
        assert code == EXIT_OK
        report = json.loads(out.read_text())
        assert report["kl_to_reference"]["size"] == pytest.approx(0.0, abs=1e-12)
        assert report["image_count"] == 40
        assert out.with_suffix(".run.json").exists()

    def test_unknown_id_is_validation_error(self, tmp_path, dataset_files):
        manifest, features = dataset_files
        code = main(
            [
                "analyze",
                "--manifest", str(manifest),
                "--features", str(features),
                "--out", str(tmp_path / "r.json"),
                "--ids", "0,999",
            ]
        )
        assert code == EXIT_VALIDATION

    def test_hand_computed_subset(self, tmp_path):
        manifest = tmp_path / "m.json"
        features = tmp_path / "f.bin"
        from dataset_builders import make_dataset
        from csod.model import save_dataset

        ds = make_dataset(
            [
                [(0, (1.0, 0.0), 100.0)],
                [(0, (0.9, 0.1), 5000.0), (1, (0.0, 1.0), 5000.0)],
                [(1, (0.1, 1.0), 20000.0)],
            ],
            2,
        )
        save_dataset(ds, manifest, features)
        out = tmp_path / "r.json"
        code = main(
            [
                "analyze",
                "--manifest", str(manifest),
                "--features", str(features),
                "--out", str(out),
                "--ids", "0,1",
            ]
        )
        assert code == EXIT_OK
        report = json.loads(out.read_text())
        assert report["image_count"] == 2
        assert report["annotation_count"] == 3
        assert report["size_histogram"] == {"small": 1, "medium": 2, "large": 0}
        assert report["per_class_annotation_counts"] == [2, 1]


class TestBench:
    def test_counts_and_rows(self, tmp_path, dataset_files):
        manifest, features = dataset_files
        out = tmp_path / "bench.csv"
        code = main(
            [
                "bench",
                "--manifest", str(manifest),
                "--features", str(features),
                "--out", str(out),
                "--counts", "1,5,10",
                "--repeats", "2",
            ]
        )
        assert code == EXIT_OK
        with open(out, newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert [row["count"] for row in rows] == ["1", "5", "10"]
        assert all(float(row["seconds"]) >= 0.0 for row in rows)
        assert out.with_suffix(".run.json").exists()
