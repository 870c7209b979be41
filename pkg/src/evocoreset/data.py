"""Dataset loading, standardization and stratified fold/split construction."""

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

MISSING_TOKENS = frozenset({"", "?", "na", "nan", "null", "none"})
MISSING_POLICIES = ("mean-impute", "drop-row")
STD_FLOOR = 1e-12


class DatasetError(ValueError):
    """Raised when a file cannot be turned into a valid classification dataset."""


def _frozen(a):
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """Feature matrix with dense integer labels.

    Labels are ids in ``[0, class_count)``; ``class_names`` keeps the raw
    label string each id was decoded from.
    """

    features: np.ndarray
    labels: np.ndarray
    class_count: int
    feature_names: tuple = ()
    name: str = ""
    class_names: tuple = ()

    def __post_init__(self):
        X = _frozen(np.asarray(self.features, dtype=np.float64))
        y = _frozen(np.asarray(self.labels, dtype=np.int64))
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
            raise DatasetError(f"shape mismatch: features {X.shape}, labels {y.shape}")
        if X.shape[0] == 0:
            raise DatasetError("dataset is empty")
        if not np.all(np.isfinite(X)):
            raise DatasetError("features contain NaN or Inf")
        L = self.class_count
        if L < 2:
            raise DatasetError(f"need at least 2 classes, got {L}")
        counts = np.bincount(y, minlength=L) if y.min() >= 0 else None
        if counts is None or counts.size != L:
            raise DatasetError(f"labels must lie in [0, {L})")
        if np.any(counts < 2):
            raise DatasetError(
                f"every class needs at least 2 samples; counts per class are {counts.tolist()}"
            )
        if not self.feature_names:
            object.__setattr__(
                self, "feature_names", tuple(f"x{j}" for j in range(X.shape[1]))
            )

    @property
    def n_samples(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]


def _is_missing(cell):
    return cell.strip().lower() in MISSING_TOKENS


def _parse_float(cell):
    try:
        value = float(cell)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def _encode_column(cells):
    """Turn raw cells into floats, NaN marking missing values.

    A column is numeric when every non-missing cell parses as a finite
    float; otherwise every distinct value is coded by first appearance.
    Returns ``(values, is_categorical)``.
    """
    present = [c.strip() for c in cells if not _is_missing(c)]
    parsed = [_parse_float(c) for c in present]
    if all(p is not None for p in parsed):
        values = [math.nan if _is_missing(c) else float(c) for c in cells]
        return np.array(values, dtype=np.float64), False
    codes = {}
    values = []
    for c in cells:
        if _is_missing(c):
            values.append(math.nan)
        else:
            values.append(float(codes.setdefault(c.strip(), len(codes))))
    return np.array(values, dtype=np.float64), True


def load_csv(path, label_column, missing_policy="mean-impute", delimiter=",", name=None):
    """Load a classification dataset from a headered CSV file.

    Parameters
    ----------
    path : str or path-like
    label_column : str or int
        Header name of the label column, or its zero-based position.
    missing_policy : {"mean-impute", "drop-row"}
        ``mean-impute`` fills numeric gaps with the column mean (categorical
        gaps with the most frequent category); ``drop-row`` discards any row
        with a missing feature. Rows with a missing label are always dropped.
    delimiter : str, default=","
    name : str, optional
        Dataset name; defaults to the file stem.

    Returns
    -------
    Dataset
        Labels are re-encoded to ``0..L-1`` in order of first appearance.
    """
    if missing_policy not in MISSING_POLICIES:
        raise ValueError(f"missing_policy must be one of {MISSING_POLICIES}")
    if not os.path.isfile(path):
        raise FileNotFoundError(f"no such dataset file: {path}")

    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh, delimiter=delimiter) if r]
    if not rows:
        raise DatasetError(f"{path}: file is empty")
    header, body = rows[0], rows[1:]
    if isinstance(label_column, str) and label_column not in header:
        if label_column.lstrip("-").isdigit():
            label_column = int(label_column)
        else:
            raise DatasetError(f"{path}: no column named {label_column!r}")
    label_idx = header.index(label_column) if isinstance(label_column, str) else int(label_column)
    if not -len(header) <= label_idx < len(header):
        raise DatasetError(f"{path}: label column index {label_idx} out of range")
    label_idx %= len(header)

    for i, r in enumerate(body, start=2):
        if len(r) != len(header):
            raise DatasetError(f"{path}: line {i} has {len(r)} fields, expected {len(header)}")
    body = [r for r in body if not _is_missing(r[label_idx])]
    if not body:
        raise DatasetError(f"{path}: no labelled rows")

    feature_cols = [j for j in range(len(header)) if j != label_idx]
    columns = []
    for j in feature_cols:
        values, categorical = _encode_column([r[j] for r in body])
        columns.append((values, categorical))
    X = (np.column_stack([c[0] for c in columns]) if columns
         else np.empty((len(body), 0)))
    raw_labels = [r[label_idx].strip() for r in body]

    missing = np.isnan(X)
    if missing_policy == "drop-row":
        keep = ~missing.any(axis=1)
        X = X[keep]
        raw_labels = [lab for lab, k in zip(raw_labels, keep) if k]
    elif missing.any():
        for j, (values, categorical) in enumerate(columns):
            gaps = missing[:, j]
            if not gaps.any():
                continue
            observed = X[~gaps, j]
            if observed.size == 0:
                fill = 0.0
            elif categorical:
                fill = float(np.bincount(observed.astype(np.int64)).argmax())
            else:
                fill = float(observed.mean())
            X[gaps, j] = fill

    if X.shape[0] == 0:
        raise DatasetError(f"{path}: no rows left after applying {missing_policy}")
    class_ids = {}
    y = np.array([class_ids.setdefault(lab, len(class_ids)) for lab in raw_labels])
    L = len(class_ids)
    if L < 2:
        raise DatasetError(f"{path}: single-class dataset (label {raw_labels[0]!r})")
    if X.shape[0] < 2 * L:
        raise DatasetError(
            f"{path}: {X.shape[0]} rows cannot support {L} classes (need at least {2 * L})"
        )
    return Dataset(
        features=X,
        labels=y,
        class_count=L,
        feature_names=tuple(header[j] for j in feature_cols),
        name=name or os.path.splitext(os.path.basename(path))[0],
        class_names=tuple(class_ids),
    )


class Scaler(TransformerMixin, BaseEstimator):
    """Per-column standardization ``(x - mean) / std``.

    Columns whose (population) standard deviation is below ``1e-12`` are
    only centered, so constant columns map to zero.
    """

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        self.mean_ = X.mean(axis=0)
        std = X.std(axis=0)
        self.scale_ = np.where(std < STD_FLOOR, 1.0, std)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "mean_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, scaler was fitted with {self.n_features_in_}"
            )
        return (X - self.mean_) / self.scale_


def standardize(X):
    """Fit a :class:`Scaler` on ``X`` and return it with the transformed copy."""
    scaler = Scaler().fit(X)
    return scaler, scaler.transform(X)


@dataclass(frozen=True)
class FoldPlan:
    fold_count: int
    seed: int
    assignments: np.ndarray
    labels: np.ndarray = field(repr=False)

    def fold_indices(self, fold):
        return np.flatnonzero(self.assignments == fold)


@dataclass(frozen=True)
class SplitView:
    train_idx: np.ndarray
    val_idx: np.ndarray
    test_idx: np.ndarray


def _labels_of(data):
    return data.labels if isinstance(data, Dataset) else np.asarray(data, dtype=np.int64)


def make_folds(dataset, fold_count=10, seed=0):
    """Stratified assignment of every sample to one of ``fold_count`` folds.

    Each class is shuffled and dealt round-robin, continuing from where the
    previous class stopped, so per-class and overall fold sizes each differ
    by at most one.

    Parameters
    ----------
    dataset : Dataset or array-like of int
        The dataset, or just its labels.
    fold_count : int
    seed : int
    """
    labels = _labels_of(dataset)
    if fold_count < 2:
        raise ValueError(f"fold_count must be at least 2, got {fold_count}")
    counts = np.bincount(labels)
    small = [c for c in np.flatnonzero(counts) if counts[c] < fold_count]
    if small:
        raise DatasetError(
            f"classes {small} have fewer than {fold_count} samples; "
            "cannot stratify across folds"
        )
    rng = np.random.default_rng(seed)
    assignments = np.empty(labels.shape[0], dtype=np.int64)
    offset = 0
    for c in np.flatnonzero(counts):
        members = rng.permutation(np.flatnonzero(labels == c))
        assignments[members] = (offset + np.arange(members.size)) % fold_count
        offset = (offset + members.size) % fold_count
    return FoldPlan(fold_count, seed, _frozen(assignments), _frozen(labels))


def stratified_quota(counts, fraction):
    """Split ``round(fraction * sum(counts))`` across classes proportionally.

    Largest-remainder apportionment; each class keeps at least one member
    outside the quota.
    """
    counts = np.asarray(counts, dtype=np.int64)
    total = int(round(fraction * counts.sum()))
    exact = fraction * counts
    quota = np.minimum(np.floor(exact).astype(np.int64), np.maximum(counts - 1, 0))
    room = np.maximum(counts - 1, 0) - quota
    # hand out the remainder by descending fractional part, lowest class first on ties
    order = np.lexsort((np.arange(counts.size), -(exact - np.floor(exact))))
    short = total - quota.sum()
    while short > 0 and room.sum() > 0:
        for c in order:
            if short == 0:
                break
            if room[c] > 0:
                quota[c] += 1
                room[c] -= 1
                short -= 1
    return quota


def stratified_holdout(labels, fraction, rng):
    """Return ``(kept, held)`` index arrays with ``held`` a stratified sample."""
    labels = np.asarray(labels)
    present = np.unique(labels)
    counts = np.array([np.count_nonzero(labels == c) for c in present])
    quota = stratified_quota(counts, fraction)
    held = []
    for c, q in zip(present, quota):
        members = np.flatnonzero(labels == c)
        held.append(rng.permutation(members)[:q])
    held = np.sort(np.concatenate(held)) if held else np.empty(0, dtype=np.int64)
    kept = np.setdiff1d(np.arange(labels.size), held)
    return kept, held


def split_fold(plan, fold, val_fraction=1 / 9, seed=0):
    """Carve a fold into test, validation and training indices.

    The test set is the fold itself. A stratified ``val_fraction`` of the
    remaining samples becomes the validation set; everything else trains.
    A class never loses its last training sample to validation.
    """
    if not 0 <= fold < plan.fold_count:
        raise ValueError(f"fold must be in [0, {plan.fold_count}), got {fold}")
    if not 0 <= val_fraction < 1:
        raise ValueError(f"val_fraction must be in [0, 1), got {val_fraction}")
    test_idx = plan.fold_indices(fold)
    rest = np.flatnonzero(plan.assignments != fold)
    rng = np.random.default_rng([seed, fold])
    kept, held = stratified_holdout(plan.labels[rest], val_fraction, rng)
    return SplitView(
        train_idx=_frozen(rest[kept]),
        val_idx=_frozen(rest[held]),
        test_idx=_frozen(test_idx),
    )
