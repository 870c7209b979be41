"""Coreset discovery: evolve on the training set, pick on validation, score on test."""

import time
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .classifier import RidgeClassifier, argmax_lowest, encode_targets, solve_ridge
from .data import Scaler, stratified_holdout
from .metrics import _weighted_f1, f1_score
from .moea import FitnessPair, ParetoArchive, derive_params, evolve


def _ridge_predict(X_fit, y_fit, class_count, alpha, X_eval):
    W, b = solve_ridge(X_fit, encode_targets(y_fit, class_count), alpha)
    return argmax_lowest(X_eval @ W + b)


def fitness_of(genome, X_train, y_train, class_count, alpha=1.0):
    """Size of the coreset and the training error of a ridge model fit on it.

    The model is trained on the genome's samples only and scored on the
    whole training partition.
    """
    idx = np.asarray(genome, dtype=np.int64)
    pred = _ridge_predict(X_train[idx], y_train[idx], class_count, alpha, X_train)
    return FitnessPair(len(idx), 1.0 - _weighted_f1(y_train, pred, class_count)[0])


class CoresetFitness:
    """Memoized :func:`fitness_of` bound to one training partition."""

    def __init__(self, X_train, y_train, class_count, alpha=1.0):
        self.X_train = X_train
        self.y_train = y_train
        self.class_count = class_count
        self.alpha = alpha
        self.cache = {}
        self.calls = 0

    def __call__(self, genome):
        self.calls += 1
        key = tuple(genome)
        if key not in self.cache:
            self.cache[key] = fitness_of(key, self.X_train, self.y_train,
                                         self.class_count, self.alpha)
        return self.cache[key]


@dataclass(frozen=True)
class MLESelection:
    genome: tuple
    val_f1: float
    scores: tuple  # validation F1 of every archive entry, in archive order


def select_mle(archive, X_train, y_train, X_val, y_val, class_count, alpha=1.0):
    """Archive member whose model scores the best validation F1.

    Ties go to the smaller coreset, then to the lexicographically smaller
    index list.
    """
    if len(archive) == 0:
        raise ValueError("cannot select from an empty archive")
    if len(y_val) == 0:
        raise ValueError("validation partition is empty")
    scores = []
    for genome, _ in archive:
        idx = np.asarray(genome, dtype=np.int64)
        pred = _ridge_predict(X_train[idx], y_train[idx], class_count, alpha, X_val)
        scores.append(f1_score(y_val, pred, class_count))
    best = min(range(len(scores)),
               key=lambda i: (-scores[i], len(archive.entries[i][0]), archive.entries[i][0]))
    return MLESelection(tuple(archive.entries[best][0]), scores[best], tuple(scores))


def discover_coreset(X_train, y_train, X_val, y_val, class_count, alpha=1.0, seed=0,
                     verbose=False, map_fn=map, callback=None):
    """Evolve a Pareto archive on the training partition and pick one member.

    Returns ``(archive, selection)``. Genome indices refer to rows of
    ``X_train``.
    """
    params = derive_params(len(y_train), class_count, seed)
    rng = np.random.default_rng(seed)
    evaluator = CoresetFitness(X_train, y_train, class_count, alpha)
    archive = evolve(evaluator, params, y_train, rng, map_fn=map_fn,
                     callback=callback, verbose=verbose)
    return archive, select_mle(archive, X_train, y_train, X_val, y_val, class_count, alpha)


@dataclass(frozen=True)
class CoresetResult:
    chosen: tuple  # positions within train_idx
    train_f1: float
    val_f1: float
    test_f1: float
    fit_time_seconds: float
    archive: ParetoArchive
    val_scores: tuple
    train_idx: np.ndarray

    @property
    def size(self):
        return len(self.chosen)

    @property
    def sample_indices(self):
        """Chosen coreset as row indices into the full dataset."""
        return self.train_idx[list(self.chosen)]


def scale_split(dataset, split):
    """Standardize with statistics from everything but the test fold."""
    X = dataset.features
    fit_rows = np.concatenate([split.train_idx, split.val_idx])
    scaler = Scaler().fit(X[fit_rows])

    def apply(rows):
        return scaler.transform(X[rows]) if rows.size else np.empty((0, X.shape[1]))
    return apply(split.train_idx), apply(split.val_idx), apply(split.test_idx)


def run_fold(dataset, split, alpha=1.0, seed=0, verbose=False, map_fn=map, callback=None):
    """Full discovery on one cross-validation split.

    The timer covers evolution, validation selection and the final fit;
    scaling and test scoring are outside it. When the split has no
    validation samples the archive is ranked on the training partition.
    """
    L = dataset.class_count
    y = dataset.labels
    X_tr, X_va, X_te = scale_split(dataset, split)
    y_tr, y_va, y_te = y[split.train_idx], y[split.val_idx], y[split.test_idx]
    if y_va.size == 0:
        X_va, y_va = X_tr, y_tr

    start = time.perf_counter()
    archive, selection = discover_coreset(X_tr, y_tr, X_va, y_va, L, alpha, seed,
                                          verbose=verbose, map_fn=map_fn, callback=callback)
    model = RidgeClassifier(alpha=alpha, class_count=L)
    idx = list(selection.genome)
    model.fit(X_tr[idx], y_tr[idx])
    elapsed = time.perf_counter() - start

    return CoresetResult(
        chosen=selection.genome,
        train_f1=f1_score(y_tr, model.predict(X_tr), L),
        val_f1=selection.val_f1,
        test_f1=f1_score(y_te, model.predict(X_te), L),
        fit_time_seconds=elapsed,
        archive=archive,
        val_scores=selection.scores,
        train_idx=split.train_idx,
    )


class EvoCore(ClassifierMixin, BaseEstimator):
    """Ridge classifier trained on an evolved coreset.

    ``fit`` holds out a stratified ``val_fraction`` of the data, evolves
    coresets of the remainder against training error and coreset size, and
    keeps the archive member with the best validation F1. Inputs are used
    as given, so put a scaler in front of it in a pipeline.

    Parameters
    ----------
    alpha : float, default=1.0
        Ridge penalty for every model trained during the search.
    val_fraction : float, default=0.1
        Share of samples held out to pick among the Pareto archive. With 0
        the archive is ranked on the training data itself.
    random_state : int, default=0
    verbose : bool, default=False
        Print per-generation progress to stderr.

    Attributes
    ----------
    sample_indices_ : ndarray
        Rows of the training ``X`` that form the chosen coreset.
    archive_ : ParetoArchive
        Final non-dominated set; genome indices point into ``train_indices_``.
    train_indices_ : ndarray
    val_f1_ : float
    estimator_ : RidgeClassifier
    classes_ : ndarray
    """

    def __init__(self, alpha=1.0, val_fraction=0.1, random_state=0, verbose=False):
        self.alpha = alpha
        self.val_fraction = val_fraction
        self.random_state = random_state
        self.verbose = verbose

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        self.classes_, y_enc = np.unique(y, return_inverse=True)
        y_enc = y_enc.reshape(-1)
        L = self.classes_.size
        if L < 2:
            raise ValueError("EvoCore needs at least two classes")
        if not 0 <= self.val_fraction < 1:
            raise ValueError(f"val_fraction must be in [0, 1), got {self.val_fraction}")

        rng = np.random.default_rng([self.random_state, 1])
        train, val = stratified_holdout(y_enc, self.val_fraction, rng)
        if val.size == 0:
            val = train
        archive, selection = discover_coreset(
            X[train], y_enc[train], X[val], y_enc[val], L, self.alpha,
            self.random_state, verbose=self.verbose,
        )
        self.train_indices_ = train
        self.archive_ = archive
        self.sample_indices_ = train[list(selection.genome)]
        self.val_f1_ = selection.val_f1
        self.estimator_ = RidgeClassifier(alpha=self.alpha, class_count=L).fit(
            X[self.sample_indices_], y_enc[self.sample_indices_]
        )
        self.n_features_in_ = X.shape[1]
        self.n_samples_fit_ = X.shape[0]
        return self

    def predict(self, X):
        check_is_fitted(self, "estimator_")
        return self.classes_[self.estimator_.predict(check_array(X))]

    def get_support(self, indices=False):
        check_is_fitted(self, "sample_indices_")
        if indices:
            return self.sample_indices_
        mask = np.zeros(self.n_samples_fit_, dtype=bool)
        mask[self.sample_indices_] = True
        return mask

    def fit_resample(self, X, y):
        """Fit, then return the coreset rows of ``X`` and ``y``."""
        self.fit(X, y)
        return np.asarray(X)[self.sample_indices_], np.asarray(y)[self.sample_indices_]
