import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone

from cpcr import BinningSchema, DiscreteDataset, Discretizer, discretize, make_folds
from cpcr.datasets import Dataset, make_wbc_like
from cpcr.preprocessing import DiscretePoint, FoldPlan


def radar_schema(n_attributes=1):
    # exact decimal edges -0.8, -0.6, ... 1.2 (bin v covers [0.2(v-5), 0.2(v-4)))
    return BinningSchema.decimal_grid(-8, 2, 10, n_attributes)


class TestBinningSchema:
    @pytest.mark.parametrize("value,expected", [
        (-1.0, 1), (-0.4, 3), (-0.2, 4), (0.0, 5), (0.2, 6),
        (0.25, 6), (0.4, 7), (0.6, 8), (0.8, 9), (1.0, 10),
    ])
    def test_radar_style_decimal_bins(self, value, expected):
        schema = radar_schema()
        assert schema.transform([[value]])[0, 0] == expected

    def test_identity_on_grid_integers(self):
        schema = BinningSchema.identity(10, 1)
        vals = np.arange(1, 11, dtype=float).reshape(-1, 1)
        assert schema.transform(vals).ravel().tolist() == list(range(1, 11))

    def test_from_data_covers_extremes(self):
        X = np.array([[1.0], [5.5], [10.0]])
        schema = BinningSchema.from_data(X, 10)
        out = schema.transform(X).ravel()
        assert out[0] == 1
        assert out[-1] == 10  # max clamps into the top bin

    def test_clamping_off_raises(self):
        schema = BinningSchema.uniform(0.0, 1.0, 4, 1, clip=False)
        with pytest.raises(ValueError, match="outside the binning range"):
            schema.transform([[-0.5]])
        with pytest.raises(ValueError, match="outside the binning range"):
            schema.transform([[1.0]])  # at-or-above max errors when clip off

    def test_clamping_on(self):
        schema = BinningSchema.uniform(0.0, 1.0, 4, 1, clip=True)
        assert schema.transform([[-9.0]])[0, 0] == 1
        assert schema.transform([[9.0]])[0, 0] == 4

    def test_constant_column(self):
        schema = BinningSchema.from_data(np.full((5, 1), 3.3), 10)
        assert (schema.transform(np.full((5, 1), 3.3)) == 1).all()

    def test_bad_edges(self):
        with pytest.raises(ValueError, match="strictly increasing"):
            BinningSchema(4, edges=[[0, 1, 1, 2, 3]])
        with pytest.raises(ValueError, match="edges"):
            BinningSchema(4, edges=[[0, 1, 2]])
        with pytest.raises(ValueError):
            BinningSchema(4, ranges=[(1.0, 1.0)])
        with pytest.raises(ValueError):
            BinningSchema(4)

    def test_rebinning_midpoints_is_stable(self):
        # discretize -> midpoint -> discretize lands in the same bins
        schema = radar_schema()
        mids = schema.bin_midpoints(0).reshape(-1, 1)
        assert schema.transform(mids).ravel().tolist() == list(range(1, 11))

    @given(st.lists(st.floats(-3, 3, allow_nan=False), min_size=2, max_size=40))
    @settings(max_examples=200, deadline=None)
    def test_monotone_per_attribute(self, values):
        schema = radar_schema()
        xs = np.sort(np.asarray(values)).reshape(-1, 1)
        bins = schema.transform(xs).ravel()
        assert (np.diff(bins) >= 0).all()

    @given(st.lists(st.floats(0, 12, allow_nan=False), min_size=2, max_size=40))
    @settings(max_examples=200, deadline=None)
    def test_uniform_rule_monotone(self, values):
        schema = BinningSchema.uniform(1.0, 11.0, 10, 1)
        xs = np.sort(np.asarray(values)).reshape(-1, 1)
        bins = schema.transform(xs).ravel()
        assert (np.diff(bins) >= 0).all()


class TestDiscretizer:
    def test_fit_from_data_and_pad(self):
        X = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0], [7.0, 8.0, 9.0]])
        disc = Discretizer(grid=10).fit(X)
        out = disc.transform(X)
        assert out.shape == (3, 4)
        assert (out[:, 3] == out[:, 2]).all()  # repeated last attribute

    def test_wbc_point_identity_bins(self):
        # a 9-wide integer point on a 10-grid keeps its values, 10th copies 9th
        X = np.array([[8, 10, 10, 8, 7, 10, 9, 7, 1]], dtype=float)
        disc = Discretizer(grid=10, ranges=[(1.0, 11.0)] * 9)
        out = disc.fit(X).transform(X)
        assert out.tolist() == [[8, 10, 10, 8, 7, 10, 9, 7, 1, 1]]

    def test_sklearn_clone(self):
        disc = Discretizer(grid=8, clip=False)
        cloned = clone(disc)
        assert cloned.get_params() == disc.get_params()

    def test_transform_before_fit(self):
        with pytest.raises(RuntimeError):
            Discretizer().transform([[1.0]])


class TestDiscretizeDataset:
    def test_discretize_wbc_like(self):
        ds = make_wbc_like(n_cases=50, seed=0)
        schema = BinningSchema.identity(10, 9)
        disc = discretize(ds, schema)
        assert isinstance(disc, DiscreteDataset)
        assert disc.n_values == 10
        assert np.array_equal(disc.values[:, :9], ds.X.astype(int))
        assert np.array_equal(disc.values[:, 9], disc.values[:, 8])
        assert disc.attr_names[-1] == "mitoses_rep"

    def test_discrete_point_invariants(self):
        with pytest.raises(ValueError):
            DiscretePoint((1, 2, 3), 0, 10)  # odd
        with pytest.raises(ValueError):
            DiscretePoint((0, 2), 0, 10)  # below grid
        p = DiscretePoint((1, 10), 1, 10)
        assert p.values == (1, 10)


class TestMakeFolds:
    def labels(self, n, n_classes=2, seed=0):
        rng = np.random.default_rng(seed)
        return rng.integers(0, n_classes, n)

    def test_exact_division(self):
        plan = make_folds(self.labels(100), 10, seed=1)
        assert plan.fold_sizes().tolist() == [10] * 10

    def test_remainder_rule(self):
        plan = make_folds(self.labels(101), 10, seed=1)
        sizes = sorted(plan.fold_sizes().tolist())
        assert sizes == [10] * 9 + [11]

    def test_partition_exact(self):
        plan = make_folds(self.labels(53), 5, seed=2)
        seen = np.concatenate([plan.split(f)[1] for f in range(plan.k)])
        assert sorted(seen.tolist()) == list(range(53))
        for f in range(plan.k):
            train, val = plan.split(f)
            assert set(train) | set(val) == set(range(53))
            assert not set(train) & set(val)

    def test_determinism(self):
        y = self.labels(77, seed=5)
        a = make_folds(y, 7, stratified=True, seed=42)
        b = make_folds(y, 7, stratified=True, seed=42)
        assert np.array_equal(a.folds, b.folds)
        c = make_folds(y, 7, stratified=True, seed=43)
        assert not np.array_equal(a.folds, c.folds)

    def test_stratified_class_balance(self):
        y = np.repeat([0, 1, 2], [31, 22, 17])
        plan = make_folds(y, 5, stratified=True, seed=0)
        for cls in (0, 1, 2):
            per_fold = np.bincount(plan.folds[y == cls], minlength=5)
            assert per_fold.max() - per_fold.min() <= 1
        sizes = plan.fold_sizes()
        assert sizes.max() - sizes.min() <= 1

    def test_stratified_small_class_raises(self):
        y = np.array([0] * 20 + [1] * 3)
        with pytest.raises(ValueError, match="cannot stratify"):
            make_folds(y, 5, stratified=True)

    def test_accepts_dataset_and_preserves_case_ids(self):
        ds = make_wbc_like(n_cases=40, seed=1)
        plan = make_folds(ds, 4, stratified=True, seed=9)
        assert np.array_equal(plan.case_ids, ds.case_ids)

    def test_round_trip_dict(self):
        plan = make_folds(self.labels(30), 3, seed=8)
        back = FoldPlan.from_dict(plan.to_dict())
        assert np.array_equal(back.folds, plan.folds)
        assert back.k == plan.k and back.seed == plan.seed

    def test_k_too_large(self):
        with pytest.raises(ValueError):
            make_folds(self.labels(3), 5)
