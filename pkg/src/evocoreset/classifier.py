"""Closed-form multi-class ridge classifier."""

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted


def encode_targets(y, class_count):
    """One-vs-all targets in {-1, +1}, +1 marking the true class."""
    Y = np.full((y.shape[0], class_count), -1.0)
    Y[np.arange(y.shape[0]), y] = 1.0
    return Y


def solve_ridge(X, Y, alpha):
    """Solve the centered ridge problem, returning ``(W, intercept)``.

    ``W`` satisfies ``(Xc'Xc + alpha I) W = Xc'Yc`` where ``Xc`` and ``Yc``
    are the column-centered inputs; the intercept is left unpenalized. When
    there are more features than samples the equivalent dual system
    ``W = Xc' (Xc Xc' + alpha I)^-1 Yc`` is solved instead.
    """
    x_mean = X.mean(axis=0)
    y_mean = Y.mean(axis=0)
    Xc = X - x_mean
    Yc = Y - y_mean
    n, d = Xc.shape
    if d <= n:
        gram = Xc.T @ Xc
        gram.flat[:: d + 1] += alpha
        W = cho_solve(cho_factor(gram, lower=True, check_finite=False), Xc.T @ Yc,
                      check_finite=False)
    else:
        kernel = Xc @ Xc.T
        kernel.flat[:: n + 1] += alpha
        dual = cho_solve(cho_factor(kernel, lower=True, check_finite=False), Yc,
                         check_finite=False)
        W = Xc.T @ dual
    intercept = y_mean - x_mean @ W
    return W, intercept


def argmax_lowest(scores):
    # np.argmax returns the first maximum, i.e. the lowest class id on ties
    return np.argmax(scores, axis=1)


class RidgeClassifier(ClassifierMixin, BaseEstimator):
    """Ridge regression on one-vs-all {-1, +1} targets.

    Parameters
    ----------
    alpha : float, default=1.0
        L2 penalty on the weights. Must be positive.
    class_count : int, optional
        Number of classes. When omitted it is taken as ``max(y) + 1`` at fit
        time. Classes with no training sample get a constant -1 target and
        therefore never win unless every score ties.

    Attributes
    ----------
    coef_ : ndarray of shape (n_features, n_classes)
    intercept_ : ndarray of shape (n_classes,)
    classes_ : ndarray of shape (n_classes,)
    n_features_in_ : int
    """

    def __init__(self, alpha=1.0, class_count=None):
        self.alpha = alpha
        self.class_count = class_count

    def fit(self, X, y):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        X = check_array(X, dtype=np.float64, ensure_min_samples=1)
        y = np.asarray(y)
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise ValueError(
                f"y must be a vector of length {X.shape[0]}, got shape {y.shape}"
            )
        if y.min() < 0 or not np.issubdtype(y.dtype, np.integer):
            raise ValueError("y must hold non-negative integer class ids")
        L = int(y.max()) + 1 if self.class_count is None else int(self.class_count)
        if y.max() >= L:
            raise ValueError(f"class id {y.max()} out of range for {L} classes")

        self.coef_, self.intercept_ = solve_ridge(X, encode_targets(y, L), self.alpha)
        self.classes_ = np.arange(L)
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, model was fitted with {self.n_features_in_}"
            )
        return X @ self.coef_ + self.intercept_

    def predict(self, X):
        """Predict class ids; ties go to the lowest class id."""
        return argmax_lowest(self.decision_function(X))
