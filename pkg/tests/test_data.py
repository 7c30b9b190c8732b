import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from regpoison.data import (
    Dataset,
    FeasibilityDomain,
    RawDataset,
    append_and_shuffle,
    apply_scaler,
    fit_scaler,
    invert_target,
    load_csv,
    save_splits,
    split,
    subsample,
    write_dataset_csv,
)
from regpoison.attacks import PoisonSet
from regpoison.exceptions import (
    ConstantTargetColumn,
    DegenerateDomain,
    DimensionMismatch,
    EmptyAfterFiltering,
    MissingFile,
    MissingTargetColumn,
    TooFewRows,
)


def _write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestLoadCsv:
    def test_basic_parse(self, tmp_path):
        raw = load_csv(_write(tmp_path, "x,y\n1,2\n3,4\n5,6\n"), "y")
        assert raw.features.tolist() == [[1.0], [3.0], [5.0]]
        assert raw.targets.tolist() == [2.0, 4.0, 6.0]
        assert raw.column_names == ("x", "y")

    def test_all_rows_filtered(self, tmp_path):
        with pytest.raises(EmptyAfterFiltering):
            load_csv(_write(tmp_path, "x,y\n1,NaN\n"), "y")

    def test_large_file_passes_through(self, tmp_path):
        rows = "\n".join(f"{i},{i * 2}" for i in range(12000))
        raw = load_csv(_write(tmp_path, "x,y\n" + rows + "\n"), "y")
        assert raw.n == 12000

    def test_missing_file(self, tmp_path):
        with pytest.raises(MissingFile):
            load_csv(tmp_path / "absent.csv", "y")

    def test_missing_target(self, tmp_path):
        with pytest.raises(MissingTargetColumn):
            load_csv(_write(tmp_path, "x,y\n1,2\n"), "z")

    def test_target_by_index(self, tmp_path):
        raw = load_csv(_write(tmp_path, "a,b\n1,2\n3,4\n"), 0)
        assert raw.targets.tolist() == [1.0, 3.0]

    def test_non_numeric_column_dropped_rows_counted(self, tmp_path):
        text = "city,x,y\nrome,1,2\nparis,3,4\n,bad,6\n"
        raw = load_csv(_write(tmp_path, text), "y")
        assert raw.column_names == ("x", "y")
        assert raw.n == 2
        assert raw.dropped_rows == 1


class TestScaler:
    def test_fit_min_max(self):
        raw = RawDataset(np.array([[2.0], [4.0], [6.0]]), np.array([0.0, 1.0, 2.0]))
        params = fit_scaler(raw)
        assert params.minimum.tolist() == [2.0, 0.0]
        assert params.maximum.tolist() == [6.0, 2.0]

    def test_constant_column_flagged(self):
        raw = RawDataset(np.array([[5.0], [5.0], [5.0]]), np.array([1.0, 2.0, 3.0]))
        params = fit_scaler(raw)
        assert params.constant_columns.tolist() == [True, False]

    def test_two_columns(self):
        raw = RawDataset(
            np.array([[0.0, -1.0], [10.0, 1.0]]), np.array([0.0, 1.0])
        )
        params = fit_scaler(raw)
        assert params.minimum.tolist() == [0.0, -1.0, 0.0]
        assert params.maximum.tolist() == [10.0, 1.0, 1.0]

    def test_apply_midpoint_and_clamp(self):
        train = RawDataset(np.array([[2.0], [6.0]]), np.array([0.0, 1.0]))
        params = fit_scaler(train)
        probe = RawDataset(np.array([[4.0], [8.0]]), np.array([0.5, 0.5]))
        scaled = apply_scaler(probe, params)
        assert scaled.features[0, 0] == pytest.approx(0.5)
        assert scaled.features[1, 0] == 1.0  # clamped

    def test_constant_column_maps_to_zero(self):
        raw = RawDataset(np.array([[5.0], [5.0]]), np.array([0.0, 1.0]))
        scaled = apply_scaler(raw, fit_scaler(raw))
        assert np.all(scaled.features == 0.0)

    def test_dimension_mismatch(self):
        raw = RawDataset(np.array([[1.0, 2.0]]), np.array([0.0]))
        params = fit_scaler(RawDataset(np.array([[1.0]]), np.array([0.0])))
        with pytest.raises(DimensionMismatch):
            apply_scaler(raw, params)

    def test_fit_range_attains_endpoints(self, rng):
        raw = RawDataset(rng.normal(size=(40, 3)), rng.normal(size=40))
        scaled = apply_scaler(raw, fit_scaler(raw))
        cols = np.column_stack([scaled.features, scaled.targets])
        assert np.all(cols.min(axis=0) == 0.0)
        assert np.all(cols.max(axis=0) == 1.0)

    def test_invert_target(self):
        params = fit_scaler(
            RawDataset(np.array([[0.0], [1.0]]), np.array([2.0, 6.0]))
        )
        assert invert_target(params, 0.5) == pytest.approx(4.0)
        assert invert_target(params, 0.0) == pytest.approx(2.0)

    def test_invert_constant_target_errors(self):
        params = fit_scaler(
            RawDataset(np.array([[0.0], [1.0]]), np.array([3.0, 3.0]))
        )
        with pytest.raises(ConstantTargetColumn):
            invert_target(params, 0.5)

    @given(
        st.floats(min_value=-5.0, max_value=5.0),
        st.floats(min_value=-5.0, max_value=4.0),
        st.floats(min_value=0.5, max_value=6.0),
    )
    @settings(max_examples=60, deadline=None)
    def test_round_trip(self, frac, lo, span):
        hi = lo + span
        value = lo + (frac + 5.0) / 10.0 * span  # in-range point
        params = fit_scaler(
            RawDataset(np.array([[0.0], [1.0]]), np.array([lo, hi]))
        )
        scaled = (value - lo) / (hi - lo)
        assert invert_target(params, scaled) == pytest.approx(value, abs=1e-12)


class TestSplit:
    def test_sizes_100(self, rng):
        data = Dataset(rng.uniform(size=(100, 2)), rng.uniform(size=100))
        splits = split(data, seed=7)
        assert (splits.substitute.n, splits.train.n, splits.test.n) == (25, 60, 15)

    def test_sizes_10(self, rng):
        data = Dataset(rng.uniform(size=(10, 1)), rng.uniform(size=10))
        splits = split(data, seed=0)
        assert (splits.substitute.n, splits.train.n, splits.test.n) == (2, 6, 2)

    def test_deterministic(self, rng):
        data = Dataset(rng.uniform(size=(50, 2)), rng.uniform(size=50))
        a, b = split(data, seed=3), split(data, seed=3)
        assert np.array_equal(a.train_indices, b.train_indices)
        assert np.array_equal(a.substitute_indices, b.substitute_indices)

    def test_too_few_rows(self, rng):
        data = Dataset(rng.uniform(size=(9, 1)), rng.uniform(size=9))
        with pytest.raises(TooFewRows):
            split(data, seed=0)

    @given(n=st.integers(min_value=10, max_value=300), seed=st.integers(0, 2**32 - 1))
    @settings(max_examples=40, deadline=None)
    def test_disjoint_and_exhaustive(self, n, seed):
        data = Dataset(
            np.linspace(0, 1, n).reshape(-1, 1), np.linspace(0, 1, n)
        )
        s = split(data, seed=seed)
        combined = np.concatenate([s.substitute_indices, s.train_indices, s.test_indices])
        assert np.array_equal(np.sort(combined), np.arange(n))


class TestSubsample:
    def test_identity_below_cap(self, rng):
        raw = RawDataset(rng.uniform(size=(5000, 2)), rng.uniform(size=5000))
        assert subsample(raw, 10000, seed=1) is raw

    def test_caps_large_dataset(self, rng):
        raw = RawDataset(rng.uniform(size=(22784, 2)), rng.uniform(size=22784))
        assert subsample(raw, 10000, seed=1).n == 10000

    def test_deterministic(self, rng):
        raw = RawDataset(rng.uniform(size=(200, 2)), rng.uniform(size=200))
        a, b = subsample(raw, 50, seed=9), subsample(raw, 50, seed=9)
        assert np.array_equal(a.features, b.features)


class TestAppendAndShuffle:
    def test_counts_and_mask(self, rng):
        train = Dataset(rng.uniform(size=(60, 2)), rng.uniform(size=60))
        poison = PoisonSet(rng.uniform(size=(3, 2)), np.ones(3))
        mixed, mask = append_and_shuffle(train, poison, seed=5)
        assert mixed.n == 63
        assert mask.sum() == 3

    def test_empty_poison_is_permutation(self, rng):
        train = Dataset(rng.uniform(size=(20, 2)), rng.uniform(size=20))
        mixed, mask = append_and_shuffle(train, PoisonSet.empty(2), seed=5)
        assert mixed.n == 20
        assert mask.sum() == 0
        joint = np.column_stack([train.features, train.targets])
        mixed_joint = np.column_stack([mixed.features, mixed.targets])
        assert np.array_equal(
            joint[np.lexsort(joint.T)], mixed_joint[np.lexsort(mixed_joint.T)]
        )

    def test_dimension_mismatch(self, rng):
        train = Dataset(rng.uniform(size=(10, 2)), rng.uniform(size=10))
        poison = PoisonSet(rng.uniform(size=(2, 3)), np.ones(2))
        with pytest.raises(DimensionMismatch):
            append_and_shuffle(train, poison, seed=0)


class TestTypesAndSerialization:
    def test_dataset_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            Dataset(np.array([[1.5]]), np.array([0.5]))

    def test_arrays_immutable(self, rng):
        data = Dataset(rng.uniform(size=(5, 2)), rng.uniform(size=5))
        with pytest.raises(ValueError):
            data.features[0, 0] = 0.0

    def test_domain_validation(self):
        assert FeasibilityDomain(0.0, 1.0).midpoint == 0.5
        with pytest.raises(DegenerateDomain):
            FeasibilityDomain(1.0, 1.0)

    def test_csv_round_trip_byte_identical(self, tmp_path, rng):
        data = Dataset(rng.uniform(size=(30, 3)), rng.uniform(size=30))
        write_dataset_csv(data, tmp_path / "a.csv")
        write_dataset_csv(data, tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        reloaded = load_csv(tmp_path / "a.csv", "y")
        assert np.allclose(reloaded.features, data.features)

    def test_save_splits_sidecar(self, tmp_path, rng):
        raw = RawDataset(rng.uniform(size=(40, 2)), rng.uniform(size=40))
        data = apply_scaler(raw, fit_scaler(raw))
        splits = split(data, seed=11)
        save_splits(splits, tmp_path)
        sidecar = json.loads((tmp_path / "splits.json").read_text())
        assert sidecar["seed"] == 11
        assert len(sidecar["train_indices"]) == 24
        assert "scaling" in sidecar
