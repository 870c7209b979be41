"""Weighted-F1 classification error."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ErrorScore:
    """Result of :func:`weighted_f1_error`.

    ``error`` is always exactly ``1 - weighted_f1``.
    """

    error: float
    weighted_f1: float
    per_class_f1: np.ndarray


def _as_ids(y, name):
    y = np.asarray(y)
    if y.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {y.shape}")
    if y.size and not np.issubdtype(y.dtype, np.integer):
        if not np.all(np.equal(np.mod(y, 1), 0)):
            raise ValueError(f"{name} must contain integer class ids")
        y = y.astype(np.int64)
    return y.astype(np.int64, copy=False)


def weighted_f1_error(y_true, y_pred, class_count=None):
    """Return one minus the support-weighted F1 score.

    Per class, precision is TP/(TP+FP), recall is TP/(TP+FN) and F1 their
    harmonic mean, with every 0/0 defined as 0. Classes are weighted by the
    number of true samples they have, so classes absent from ``y_true``
    contribute nothing.

    Parameters
    ----------
    y_true, y_pred : array-like of int
        Class ids in ``[0, class_count)``.
    class_count : int, optional
        Number of classes. Inferred from the largest id when omitted.

    Returns
    -------
    ErrorScore
    """
    y_true = _as_ids(y_true, "y_true")
    y_pred = _as_ids(y_pred, "y_pred")
    if y_true.shape != y_pred.shape:
        raise ValueError(
            f"length mismatch: y_true has {y_true.size}, y_pred has {y_pred.size}"
        )
    if y_true.size == 0:
        raise ValueError("cannot score an empty prediction")
    if class_count is None:
        class_count = int(max(y_true.max(), y_pred.max())) + 1
    if min(y_true.min(), y_pred.min()) < 0 or max(y_true.max(), y_pred.max()) >= class_count:
        raise ValueError(f"class ids must lie in [0, {class_count})")

    weighted, f1 = _weighted_f1(y_true, y_pred, class_count)
    return ErrorScore(error=1.0 - weighted, weighted_f1=weighted, per_class_f1=f1)


def _weighted_f1(y_true, y_pred, class_count):
    """Unchecked core of :func:`weighted_f1_error`; returns ``(weighted, per_class)``."""
    support = np.bincount(y_true, minlength=class_count)
    predicted = np.bincount(y_pred, minlength=class_count)
    tp = np.bincount(y_true[y_true == y_pred], minlength=class_count)

    # 2PR/(P+R) simplifies to 2TP/(|true| + |pred|), which is 0/0 only when both are 0
    denom = support + predicted
    f1 = np.zeros(class_count)
    np.divide(2.0 * tp, denom, out=f1, where=denom > 0)
    return float(np.dot(support, f1) / y_true.size), f1


def f1_score(y_true, y_pred, class_count=None):
    """Weighted F1 score, the complement of :func:`weighted_f1_error`."""
    return weighted_f1_error(y_true, y_pred, class_count).weighted_f1
