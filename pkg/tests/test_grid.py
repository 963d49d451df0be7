import numpy as np
import pytest

from mcrfsim.errors import DataError, EmptyInputError
from mcrfsim.grid import (
    NODATA,
    ClassInfo,
    Raster,
    SampleSet,
    cell_center,
    class_proportions,
    generate_blob_reference,
    random_sample,
    snap_to_cell,
)


def make_raster(labels, cell_size=1.0, origin_x=0.0, origin_y=0.0):
    labels = np.asarray(labels)
    return Raster(labels.shape[0], labels.shape[1], cell_size,
                  origin_x, origin_y, labels)


class TestRaster:
    def test_shape_mismatch_rejected(self):
        with pytest.raises(DataError):
            Raster(2, 3, 1.0, 0.0, 0.0, np.zeros((3, 2), dtype=np.int32))

    def test_bad_dimensions(self):
        with pytest.raises(ValueError):
            Raster(0, 3, 1.0, 0.0, 0.0, np.zeros((0, 3)))
        with pytest.raises(ValueError):
            Raster(2, 2, -1.0, 0.0, 0.0, np.zeros((2, 2)))

    def test_blank_is_all_nodata(self):
        r = Raster.blank(4, 5)
        assert r.labels.shape == (4, 5)
        assert np.all(r.labels == NODATA)
        assert r.n_data_cells() == 0

    def test_labels_cast_to_int32(self):
        r = make_raster([[0, 1], [1, 0]])
        assert r.labels.dtype == np.int32


class TestCellCenter:
    def test_known_value(self):
        # origin (100, 50), cell 25: cell (row=2, col=3) centers at
        # x = 100 + 3.5 * 25, y = 50 + 2.5 * 25.
        r = Raster.blank(10, 10, cell_size=25.0, origin_x=100.0, origin_y=50.0)
        assert cell_center(r, 2, 3) == (187.5, 112.5)

    def test_out_of_range(self):
        r = Raster.blank(3, 3)
        with pytest.raises(IndexError):
            cell_center(r, 3, 0)
        with pytest.raises(IndexError):
            cell_center(r, 0, -1)

    def test_snap_inverts_center(self):
        r = Raster.blank(7, 9, cell_size=2.5, origin_x=-4.0, origin_y=11.0)
        for row in (0, 3, 6):
            for col in (0, 5, 8):
                x, y = cell_center(r, row, col)
                assert snap_to_cell(r, x, y) == (row, col)

    def test_snap_outside(self):
        r = Raster.blank(3, 3)
        with pytest.raises(IndexError):
            snap_to_cell(r, -0.5, 1.0)
        with pytest.raises(IndexError):
            snap_to_cell(r, 1.0, 3.5)


class TestSampleSet:
    def test_duplicate_coordinates_rejected(self):
        with pytest.raises(DataError):
            SampleSet(np.array([1.0, 1.0]), np.array([2.0, 2.0]),
                      np.array([0, 1]), 2)

    def test_length_mismatch_rejected(self):
        with pytest.raises(DataError):
            SampleSet(np.array([1.0]), np.array([2.0, 3.0]),
                      np.array([0, 1]), 2)

    def test_class_out_of_range_rejected(self):
        with pytest.raises(DataError):
            SampleSet(np.array([1.0]), np.array([2.0]), np.array([5]), 2)

    def test_empty_classes_reported(self):
        s = SampleSet(np.array([0.0, 1.0, 2.0]), np.array([0.0, 0.0, 0.0]),
                      np.array([0, 0, 2]), 4)
        assert s.empty_classes == [1, 3]


class TestProportions:
    def test_known_value(self):
        s = SampleSet(np.arange(4.0), np.zeros(4), np.array([0, 0, 1, 2]), 3)
        assert np.allclose(class_proportions(s), [0.5, 0.25, 0.25])

    def test_sums_to_one(self):
        rng = np.random.default_rng(7)
        cls = rng.integers(0, 5, size=101).astype(np.int32)
        s = SampleSet(np.arange(101.0), np.zeros(101), cls, 5)
        assert class_proportions(s).sum() == pytest.approx(1.0, abs=1e-12)

    def test_empty_raises(self):
        s = SampleSet(np.array([]), np.array([]), np.array([], dtype=int), 2)
        with pytest.raises(EmptyInputError):
            class_proportions(s)


class TestRandomSample:
    def test_deterministic_and_distinct(self):
        ref = generate_blob_reference(30, 30, 3, [0.5, 0.3, 0.2], 12, seed=4)
        a = random_sample(ref, 50, seed=9)
        b = random_sample(ref, 50, seed=9)
        assert np.array_equal(a.x, b.x) and np.array_equal(a.classes, b.classes)
        assert len({(x, y) for x, y in zip(a.x, a.y)}) == 50

    def test_classes_match_reference(self):
        ref = generate_blob_reference(20, 20, 4, [0.4, 0.3, 0.2, 0.1], 15, seed=1)
        s = random_sample(ref, 80, seed=2)
        for x, y, k in zip(s.x, s.y, s.classes):
            row, col = snap_to_cell(ref, x, y)
            assert ref.labels[row, col] == k

    def test_capacity_check(self):
        ref = make_raster([[0, 1], [NODATA, 1]])
        with pytest.raises(ValueError):
            random_sample(ref, 4, seed=0)
        s = random_sample(ref, 3, seed=0)
        assert len(s) == 3

    def test_nodata_never_drawn(self):
        labels = np.full((10, 10), NODATA, dtype=np.int32)
        labels[2:5, 2:5] = 1
        ref = make_raster(labels)
        s = random_sample(ref, 9, seed=3)
        assert np.all(s.classes == 1)


class TestBlobReference:
    def test_deterministic(self):
        a = generate_blob_reference(40, 40, 3, [0.5, 0.3, 0.2], 20, seed=11)
        b = generate_blob_reference(40, 40, 3, [0.5, 0.3, 0.2], 20, seed=11)
        assert np.array_equal(a.labels, b.labels)

    def test_all_classes_present(self):
        # Even a tiny weight gets at least one seed.
        r = generate_blob_reference(50, 50, 4, [0.6, 0.25, 0.13, 0.02],
                                    25, seed=5)
        present = np.unique(r.labels)
        assert set(present.tolist()) == {0, 1, 2, 3}

    def test_proportions_near_weights(self):
        weights = np.array([0.45, 0.30, 0.15, 0.10])
        errs = []
        for seed in range(20):
            r = generate_blob_reference(60, 60, 4, weights, 120, seed=seed)
            counts = np.bincount(r.labels.ravel(), minlength=4)
            errs.append(np.abs(counts / counts.sum() - weights).max())
        assert max(errs) < 0.15

    def test_seed_count_guard(self):
        with pytest.raises(ValueError):
            generate_blob_reference(10, 10, 5, [0.2] * 5, 3, seed=0)


class TestClassInfo:
    def test_roles(self):
        assert ClassInfo(2).role == "moderate"
        assert ClassInfo(0, "sand", "minor").role == "minor"
        with pytest.raises(ValueError):
            ClassInfo(1, role="huge")
        with pytest.raises(ValueError):
            ClassInfo(-1)

    def test_default_name(self):
        assert ClassInfo(3).name == "class_3"
