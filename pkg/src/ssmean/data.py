"""Labeled/unlabeled data containers and the K-fold cross-fitting plan."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatchError,
    InsufficientDataError,
    InvalidParameterError,
    ValidationError,
)
from .rng import RngStream

MIN_FOLD_ROWS = 3  # each test fold needs >= 3 points so both t components have df >= 2


@dataclass(frozen=True)
class Dataset:
    """Labeled outcomes/features plus unlabeled features with a common width."""

    outcomes: np.ndarray
    features: np.ndarray
    unlabeled_features: np.ndarray

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def n_unlabeled(self) -> int:
        return self.unlabeled_features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class FoldPlan:
    """Disjoint K-way partitions of labeled and unlabeled row indices.

    train_sets[k] is the labeled complement of labeled_folds[k]; every index
    array is sorted so downstream reductions are order-deterministic.
    """

    n_folds: int
    labeled_folds: list[np.ndarray] = field(repr=False)
    unlabeled_folds: list[np.ndarray] = field(repr=False)
    train_sets: list[np.ndarray] = field(repr=False)

    def fold_sizes(self) -> tuple[list[int], list[int]]:
        return (
            [len(f) for f in self.labeled_folds],
            [len(f) for f in self.unlabeled_folds],
        )


def _partition(count: int, n_folds: int, perm: np.ndarray) -> list[np.ndarray]:
    # Remainder rows go one each to the lowest-numbered folds.
    base, rem = divmod(count, n_folds)
    folds = []
    start = 0
    for k in range(n_folds):
        size = base + (1 if k < rem else 0)
        folds.append(np.sort(perm[start : start + size]))
        start += size
    return folds


def make_fold_plan(n: int, n_unlabeled: int, n_folds: int, rng: RngStream) -> FoldPlan:
    """Uniformly random K-way split of labeled and unlabeled indices.

    Fold sizes within each side differ by at most one; folds of fewer than
    three rows are rejected because the downstream per-fold posteriors need
    at least two degrees of freedom.
    """
    if n_folds < 2 or int(n_folds) != n_folds:
        raise InvalidParameterError(f"number of folds must be an integer >= 2, got {n_folds}")
    if n // n_folds < MIN_FOLD_ROWS:
        raise InsufficientDataError(
            f"labeled side too small: {n} rows across {n_folds} folds leaves "
            f"fewer than {MIN_FOLD_ROWS} per fold"
        )
    if n_unlabeled // n_folds < MIN_FOLD_ROWS:
        raise InsufficientDataError(
            f"unlabeled side too small: {n_unlabeled} rows across {n_folds} folds "
            f"leaves fewer than {MIN_FOLD_ROWS} per fold"
        )
    gen = rng.generator()
    labeled_folds = _partition(n, n_folds, gen.permutation(n))
    unlabeled_folds = _partition(n_unlabeled, n_folds, gen.permutation(n_unlabeled))
    all_labeled = np.arange(n)
    train_sets = [np.setdiff1d(all_labeled, fold, assume_unique=True) for fold in labeled_folds]
    return FoldPlan(int(n_folds), labeled_folds, unlabeled_folds, train_sets)


def _first_nonfinite(matrix: np.ndarray) -> tuple[int, int] | None:
    bad = ~np.isfinite(matrix)
    if not bad.any():
        return None
    row, col = np.argwhere(bad)[0]
    return int(row), int(col)


def validate_dataset(labeled: np.ndarray, unlabeled: np.ndarray) -> Dataset:
    """Build a checked Dataset from raw matrices.

    The labeled matrix carries the outcome in column 0 and features in the
    remaining columns; the unlabeled matrix carries features only.
    """
    labeled = np.atleast_2d(np.asarray(labeled, dtype=float))
    unlabeled = np.atleast_2d(np.asarray(unlabeled, dtype=float))
    if labeled.shape[0] == 0 or labeled.shape[1] < 2:
        raise ValidationError(
            f"labeled matrix must have >= 1 row and >= 2 columns, got shape {labeled.shape}"
        )
    if unlabeled.shape[0] == 0:
        raise ValidationError("unlabeled matrix must have >= 1 row")
    p = labeled.shape[1] - 1
    if unlabeled.shape[1] != p:
        raise DimensionMismatchError(
            f"unlabeled feature width {unlabeled.shape[1]} != labeled feature width {p}"
        )
    offense = _first_nonfinite(labeled)
    if offense is not None:
        raise ValidationError(
            f"labeled matrix has non-finite entry at (row {offense[0]}, col {offense[1]})"
        )
    offense = _first_nonfinite(unlabeled)
    if offense is not None:
        raise ValidationError(
            f"unlabeled matrix has non-finite entry at (row {offense[0]}, col {offense[1]})"
        )
    return Dataset(
        outcomes=labeled[:, 0].copy(),
        features=labeled[:, 1:].copy(),
        unlabeled_features=unlabeled.copy(),
    )
