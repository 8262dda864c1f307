import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ssmean import RngStream, make_fold_plan, validate_dataset
from ssmean.errors import (
    DimensionMismatchError,
    InsufficientDataError,
    InvalidParameterError,
    ValidationError,
)

RNG = RngStream(31337)


class TestMakeFoldPlan:
    def test_divisible_case_complements(self):
        plan = make_fold_plan(6, 6, 2, RNG)
        sizes_l, sizes_u = plan.fold_sizes()
        assert sizes_l == [3, 3] and sizes_u == [3, 3]
        np.testing.assert_array_equal(plan.train_sets[0], plan.labeled_folds[1])
        np.testing.assert_array_equal(plan.train_sets[1], plan.labeled_folds[0])

    def test_remainder_rule(self):
        plan = make_fold_plan(10, 10000, 3, RNG)
        assert plan.fold_sizes()[0] == [4, 3, 3]

    def test_paper_scale_sizes(self):
        plan = make_fold_plan(500, 10000, 5, RNG)
        assert plan.fold_sizes() == ([100] * 5, [2000] * 5)

    def test_labeled_side_too_small(self):
        with pytest.raises(InsufficientDataError, match="labeled"):
            make_fold_plan(8, 100, 3, RNG)

    def test_unlabeled_side_too_small(self):
        with pytest.raises(InsufficientDataError, match="unlabeled"):
            make_fold_plan(100, 8, 3, RNG)

    def test_bad_fold_count(self):
        with pytest.raises(InvalidParameterError):
            make_fold_plan(100, 100, 1, RNG)

    def test_determinism(self):
        a = make_fold_plan(37, 53, 4, RNG.substream(5))
        b = make_fold_plan(37, 53, 4, RNG.substream(5))
        for fa, fb in zip(a.labeled_folds + a.unlabeled_folds, b.labeled_folds + b.unlabeled_folds):
            np.testing.assert_array_equal(fa, fb)

    @given(
        n=st.integers(6, 120),
        n_unlabeled=st.integers(6, 300),
        n_folds=st.integers(2, 8),
        seed=st.integers(0, 2**32),
    )
    @settings(max_examples=120, deadline=None)
    def test_partition_laws(self, n, n_unlabeled, n_folds, seed):
        if n // n_folds < 3 or n_unlabeled // n_folds < 3:
            with pytest.raises(InsufficientDataError):
                make_fold_plan(n, n_unlabeled, n_folds, RngStream(seed))
            return
        plan = make_fold_plan(n, n_unlabeled, n_folds, RngStream(seed))
        for folds, total in ((plan.labeled_folds, n), (plan.unlabeled_folds, n_unlabeled)):
            combined = np.concatenate(folds)
            assert len(combined) == total
            assert len(np.unique(combined)) == total  # disjoint and exhaustive
            sizes = [len(f) for f in folds]
            assert max(sizes) - min(sizes) <= 1
        for k in range(n_folds):
            assert np.intersect1d(plan.train_sets[k], plan.labeled_folds[k]).size == 0
            assert len(plan.train_sets[k]) + len(plan.labeled_folds[k]) == n


class TestValidateDataset:
    def test_basic_shapes(self):
        data = validate_dataset(np.ones((3, 3)), np.ones((5, 2)))
        assert (data.n, data.n_unlabeled, data.p) == (3, 5, 2)

    def test_width_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            validate_dataset(np.ones((3, 3)), np.ones((5, 3)))

    def test_nan_cites_row(self):
        labeled = np.ones((4, 3))
        labeled[2, 1] = np.nan
        with pytest.raises(ValidationError, match=r"row 2"):
            validate_dataset(labeled, np.ones((5, 2)))

    def test_inf_in_unlabeled(self):
        unlabeled = np.ones((5, 2))
        unlabeled[4, 0] = np.inf
        with pytest.raises(ValidationError, match=r"row 4"):
            validate_dataset(np.ones((3, 3)), unlabeled)

    def test_zero_rows(self):
        with pytest.raises(ValidationError):
            validate_dataset(np.ones((0, 3)), np.ones((5, 2)))
        with pytest.raises(ValidationError):
            validate_dataset(np.ones((3, 3)), np.ones((0, 2)))

    def test_outcome_only_matrix_rejected(self):
        with pytest.raises(ValidationError):
            validate_dataset(np.ones((3, 1)), np.ones((5, 2)))
