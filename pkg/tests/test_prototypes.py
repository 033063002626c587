import numpy as np
import pytest

from csod.metrics import SizeThresholds
from csod.model import cosine
from csod.prototypes import (
    build_imagewise,
    build_objectwise,
    class_prototype,
    sizewise_prototypes,
    sizewise_similarity_report,
)

from dataset_builders import make_dataset, random_dataset


def brute_class_means(dataset, image_id):
    """Independent per-class mean over one image's raw object features."""
    sums: dict[int, np.ndarray] = {}
    counts: dict[int, int] = {}
    for o in dataset.manifest.images[image_id].objects:
        vec = dataset.features.rows[o.feature_row].astype(np.float64)
        sums[o.class_id] = sums.get(o.class_id, 0.0) + vec
        counts[o.class_id] = counts.get(o.class_id, 0) + 1
    return {c: sums[c] / counts[c] for c in sums}


class TestImagewise:
    def test_single_object_mean(self):
        ds = make_dataset([[(0, (2.0, 4.0))]], 1)
        index = build_imagewise(ds)
        proto = index.by_image[0][0]
        assert proto.member_count == 1
        np.testing.assert_allclose(proto.vector, [2.0, 4.0])

    def test_two_object_mean(self):
        ds = make_dataset([[(0, (1.0, 0.0)), (0, (0.0, 1.0))]], 1)
        proto = build_imagewise(ds).by_image[0][0]
        assert proto.member_count == 2
        np.testing.assert_allclose(proto.vector, [0.5, 0.5])

    def test_matches_brute_force_means(self):
        rng = np.random.default_rng(3)
        objects = [(int(rng.integers(3)), rng.normal(size=4)) for _ in range(10)]
        ds = make_dataset([objects], 3)
        index = build_imagewise(ds)
        expected = brute_class_means(ds, 0)
        assert set(index.by_image[0]) == set(expected)
        for c, vec in expected.items():
            np.testing.assert_allclose(index.by_image[0][c].vector, vec, atol=1e-6)

    def test_one_prototype_per_image_class_pair(self):
        ds = random_dataset(np.random.default_rng(5), 30, 4, 5)
        index = build_imagewise(ds)
        for c in range(4):
            assert len(index.by_class[c]) == len(ds.images_with_class(c))
            ids = [p.image_id for p in index.by_class[c]]
            assert ids == sorted(ids)

    def test_member_rows_partition_all_rows(self):
        ds = random_dataset(np.random.default_rng(6), 25, 3, 4)
        index = build_imagewise(ds)
        seen: list[int] = []
        for protos in index.by_class.values():
            for p in protos:
                seen.extend(p.member_rows)
        assert sorted(seen) == list(range(ds.features.row_count))

    def test_mean_recovery(self):
        ds = random_dataset(np.random.default_rng(7), 40, 3, 6, max_objects_per_class=3)
        index = build_imagewise(ds)
        for protos in index.by_class.values():
            for p in protos:
                block = ds.features.rows[list(p.member_rows)].astype(np.float64)
                err = np.abs(p.vector - block.mean(axis=0)).max()
                assert err < 1e-5

    def test_object_order_does_not_change_vectors(self):
        rng = np.random.default_rng(8)
        objects = [(int(rng.integers(2)), rng.normal(size=3)) for _ in range(8)]
        ds1 = make_dataset([objects], 2)
        # permute listing order but keep (class, feature) pairs attached to rows:
        # rebuild with shuffled object order; member rows then differ, so compare
        # against per-class sums over the same multiset of features.
        perm = rng.permutation(len(objects))
        ds2 = make_dataset([[objects[i] for i in perm]], 2)
        p1 = build_imagewise(ds1).by_image[0]
        p2 = build_imagewise(ds2).by_image[0]
        for c in p1:
            np.testing.assert_allclose(p1[c].vector, p2[c].vector, atol=1e-12)


class TestObjectwise:
    def test_two_objects_two_prototypes(self):
        ds = make_dataset([[(0, (1.0, 0.0)), (0, (0.0, 1.0))]], 1)
        protos = build_objectwise(ds).by_class[0]
        assert len(protos) == 2
        assert all(p.image_id == 0 and p.member_count == 1 for p in protos)

    def test_equals_imagewise_on_singletons(self):
        ds = make_dataset(
            [[(0, (1.0, 2.0)), (1, (3.0, 4.0))], [(0, (5.0, 6.0))]], 2
        )
        iw = build_imagewise(ds)
        ow = build_objectwise(ds)
        for c in range(2):
            assert len(iw.by_class[c]) == len(ow.by_class[c])
            for a, b in zip(iw.by_class[c], ow.by_class[c]):
                np.testing.assert_allclose(a.vector, b.vector)

    def test_prototype_count_equals_annotation_count(self):
        ds = random_dataset(np.random.default_rng(9), 30, 3, 4, max_objects_per_class=3)
        index = build_objectwise(ds)
        assert index.prototype_count() == ds.manifest.total_objects()


class TestClassPrototype:
    def test_mean_across_images(self):
        ds = make_dataset([[(0, (1.0, 0.0))], [(0, (0.0, 1.0))]], 1)
        np.testing.assert_allclose(class_prototype(ds, 0), [0.5, 0.5])

    def test_single_object_class(self):
        ds = make_dataset([[(0, (3.0, 7.0)), (1, (1.0, 1.0))]], 2)
        np.testing.assert_allclose(class_prototype(ds, 1), [1.0, 1.0])

    def test_matches_brute_force(self):
        rng = np.random.default_rng(10)
        images = [[(0, rng.normal(size=5))] for _ in range(50)]
        ds = make_dataset(images, 1)
        expected = ds.features.rows.astype(np.float64).sum(axis=0) / 50
        np.testing.assert_allclose(class_prototype(ds, 0), expected, atol=1e-6)

    def test_empty_class_rejected(self):
        ds = make_dataset([[(0, (1.0, 0.0))]], 2)
        with pytest.raises(ValueError):
            class_prototype(ds, 1)


class TestSizewise:
    thresholds = SizeThresholds(1024.0, 9216.0)

    def test_single_large_object(self):
        ds = make_dataset([[(0, (1.0, 2.0), 10000.0)]], 1)
        buckets = sizewise_prototypes(ds, 0, self.thresholds)[0]
        assert list(buckets) == ["large"]
        np.testing.assert_allclose(buckets["large"].vector, [1.0, 2.0])
        assert buckets["large"].member_count == 1

    def test_bucketing_by_area(self):
        ds = make_dataset([[(0, (1.0, 0.0), 100.0), (0, (0.0, 1.0), 10000.0)]], 1)
        buckets = sizewise_prototypes(ds, 0, self.thresholds)[0]
        assert set(buckets) == {"small", "large"}
        np.testing.assert_allclose(buckets["small"].vector, [1.0, 0.0])
        np.testing.assert_allclose(buckets["large"].vector, [0.0, 1.0])

    def test_report_matches_group_by_recomputation(self):
        rng = np.random.default_rng(11)
        images = []
        for _ in range(40):
            k = int(rng.integers(1, 7))
            images.append([(0, rng.normal(size=4) + 2.0, float(rng.uniform(100, 40000)))
                           for _ in range(k)])
        ds = make_dataset(images, 1)
        report = sizewise_similarity_report(ds, 0, self.thresholds)

        # independent group-by: recompute every (size, count-bin) cell from raw data
        ref = class_prototype(ds, 0)
        cells: dict[tuple[str, str], list[float]] = {}
        for image_id in range(ds.num_images):
            groups: dict[str, list[int]] = {}
            for o in ds.manifest.images[image_id].objects:
                groups.setdefault(self.thresholds.bucket(o.box.area()), []).append(
                    o.feature_row
                )
            for size, rows in groups.items():
                mean = ds.features.rows[sorted(rows)].astype(np.float64).mean(axis=0)
                n = len(rows)
                label = "1" if n == 1 else "2-4" if n <= 4 else "5+"
                cells.setdefault((size, label), []).append(cosine(ref, mean))

        assert len(report["groups"]) == len(cells)
        for group in report["groups"]:
            values = cells[(group["size"], group["count_bin"])]
            assert group["n"] == len(values)
            assert group["mean_cosine"] == pytest.approx(np.mean(values), abs=1e-9)
