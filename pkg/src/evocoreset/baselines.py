"""Greedy sparse-approximation coreset selectors.

Each sample ``n`` becomes a vector ``v_n = [x_n, onehot(y_n)]`` and a
selector looks for a small, nonnegatively weighted subset whose weighted
sum approximates ``target = sum_n v_n``. Only the selected indices are used
downstream; the weights are reported for inspection.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import nnls
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted, check_X_y

from .data import stratified_quota

NORM_FLOOR = 1e-12
# a residual this small relative to the target means it is represented exactly
EXACT_FIT = 1e-12


@dataclass(frozen=True)
class VectorizedDataset:
    vectors: np.ndarray
    target: np.ndarray
    norms: np.ndarray

    @classmethod
    def from_vectors(cls, vectors):
        vectors = np.asarray(vectors, dtype=np.float64)
        norms = np.linalg.norm(vectors, axis=1)
        if np.any(norms <= 0):
            raise ValueError("every sample vector must be nonzero")
        return cls(vectors, vectors.sum(axis=0), norms)

    @property
    def n_samples(self):
        return self.vectors.shape[0]

    @property
    def unit(self):
        return self.vectors / self.norms[:, None]


def vectorize(X, y, class_count=None):
    """Stack standardized features with one-hot labels, one row per sample."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    L = int(y.max()) + 1 if class_count is None else class_count
    onehot = np.zeros((y.size, L))
    onehot[np.arange(y.size), y] = 1.0
    # the one-hot block keeps every row away from zero
    return VectorizedDataset.from_vectors(np.hstack([X, onehot]))


@dataclass
class BaselineOutput:
    indices: np.ndarray
    weights: np.ndarray
    residual_norm: list
    alignment: list = field(default_factory=list)
    iterations: int = 0

    @property
    def size(self):
        return len(self.indices)


def _check_budget(vd, budget):
    if not 1 <= budget <= vd.n_samples:
        raise ValueError(f"budget must be in [1, {vd.n_samples}], got {budget}")


def _output(w, residuals, alignment=(), iterations=0):
    active = np.flatnonzero(w > 0)
    return BaselineOutput(active, w[active], list(residuals), list(alignment), iterations)


def _pursuit(vd, budget, step):
    """Shared loop of matching pursuit and forward stagewise."""
    _check_budget(vd, budget)
    V, norms, target = vd.vectors, vd.norms, vd.target
    w = np.zeros(vd.n_samples)
    r = target.copy()
    residuals = []
    chosen = set()
    for it in range(100 * budget):
        corr = V @ r
        n = int(np.argmax(corr / norms))
        if corr[n] <= 0:
            break
        w[n] += step * corr[n] / norms[n] ** 2
        chosen.add(n)
        r = target - w @ V
        residuals.append(float(np.linalg.norm(r)))
        if len(chosen) >= budget or residuals[-1] <= EXACT_FIT * np.linalg.norm(target):
            break
    return _output(w, residuals, iterations=len(residuals))


def matching_pursuit(vd, budget):
    """Greedy atom selection with an exact line step along the chosen atom."""
    return _pursuit(vd, budget, 1.0)


def forward_stagewise(vd, budget, epsilon=0.1):
    """Matching pursuit with each step shrunk by ``epsilon``."""
    if not 0 < epsilon <= 1:
        raise ValueError(f"epsilon must be in (0, 1], got {epsilon}")
    return _pursuit(vd, budget, epsilon)


def _nonneg_lstsq(A, b):
    """Least squares of ``b`` on the columns of ``A`` with weights kept >= 0.

    Solves the jittered normal equations first and falls back to NNLS when
    that answer has negative entries.
    """
    gram = A.T @ A
    gram.flat[:: gram.shape[0] + 1] += 1e-10
    w = np.linalg.solve(gram, A.T @ b)
    if np.all(w >= 0):
        return w
    return nnls(A, b)[0]


def orthogonal_matching_pursuit(vd, budget):
    """Matching pursuit that refits every active weight after each pick."""
    _check_budget(vd, budget)
    V, norms, target = vd.vectors, vd.norms, vd.target
    w = np.zeros(vd.n_samples)
    r = target.copy()
    residuals = []
    active = []
    available = np.ones(vd.n_samples, dtype=bool)
    floor = EXACT_FIT * np.linalg.norm(target)
    while len(active) < budget and (not residuals or residuals[-1] > floor):
        score = np.where(available, (V @ r) / norms, -np.inf)
        n = int(np.argmax(score))
        if score[n] <= 0:
            break
        active.append(n)
        available[n] = False
        w[:] = 0.0
        w[active] = _nonneg_lstsq(V[active].T, target)
        r = target - w @ V
        residuals.append(float(np.linalg.norm(r)))
    return _output(w, residuals, iterations=len(residuals))


def frank_wolfe(vd, budget):
    """Frank-Wolfe on the scaled simplex ``{w >= 0, sum_n w_n |v_n| = sum_n |v_n|}``.

    Vertices map to ``sigma * v_n / |v_n|``; each step moves toward the
    vertex best aligned with the residual using an exact line search.
    """
    _check_budget(vd, budget)
    U, norms, target = vd.unit, vd.norms, vd.target
    sigma = norms.sum()
    t_norm = np.linalg.norm(target)

    w = np.zeros(vd.n_samples)
    n = int(np.argmax(U @ target))
    w[n] = sigma / norms[n]
    s = sigma * U[n]
    residuals = [float(np.linalg.norm(target - s))]
    alignment = [float(s @ target / (np.linalg.norm(s) * t_norm))]
    for it in range(100 * budget):
        if np.count_nonzero(w) >= budget:
            break
        r = target - s
        n = int(np.argmax(U @ r))
        d = sigma * U[n] - s
        dd = d @ d
        if dd <= 0:
            break
        gamma = min(max((d @ r) / dd, 0.0), 1.0)
        if gamma <= 0:
            break
        w *= 1.0 - gamma
        w[n] += gamma * sigma / norms[n]
        s = s + gamma * d
        residuals.append(float(np.linalg.norm(target - s)))
        alignment.append(float(s @ target / (np.linalg.norm(s) * t_norm)))
    return _output(w, residuals, alignment, iterations=len(residuals))


def giga(vd, budget):
    """Greedy geodesic ascent on the unit sphere.

    Keeps a unit direction ``y`` in the span of the selected vectors and, at
    each step, picks the sample whose direction (taken orthogonally to
    ``y``) best matches the unexplained part of the normalized target, then
    moves ``y`` to the projection of the target onto the plane spanned by
    ``y`` and that sample. The final weights are a nonnegative least-squares
    fit of the target on the selected vectors.
    """
    _check_budget(vd, budget)
    U, target = vd.unit, vd.target
    t_norm = np.linalg.norm(target)
    ell = target / t_norm

    n = int(np.argmax(U @ ell))
    selected = [n]
    y = U[n].copy()

    def record():
        a = float(np.clip(ell @ y, -1.0, 1.0))
        alignment.append(a)
        # residual of the best scaling of the current direction
        residuals.append(float(t_norm * np.sqrt(max(1.0 - a * a, 0.0))) if a > 0 else float(t_norm))

    alignment, residuals = [], []
    record()
    for it in range(100 * budget):
        if len(selected) >= budget:
            break
        r = ell - (ell @ y) * y
        r_norm = np.linalg.norm(r)
        if r_norm < NORM_FLOOR:
            break
        r /= r_norm
        D = U - np.outer(U @ y, y)
        d_norms = np.linalg.norm(D, axis=1)
        ok = d_norms >= NORM_FLOOR
        if not ok.any():
            break
        score = np.full(vd.n_samples, -np.inf)
        score[ok] = (D[ok] @ r) / d_norms[ok]
        n = int(np.argmax(score))
        if score[n] <= 0:
            break
        # projection of ell onto span{y, u_n}
        basis = np.linalg.qr(np.column_stack([y, U[n]]))[0]
        proj = basis @ (basis.T @ ell)
        y_new = proj / np.linalg.norm(proj)
        if ell @ y_new < ell @ y:
            break
        y = y_new
        if n not in selected:
            selected.append(n)
        record()

    selected = np.array(sorted(selected))
    w = np.zeros(vd.n_samples)
    w[selected] = nnls(vd.vectors[selected].T, target)[0]
    out = _output(w, residuals, alignment, iterations=len(residuals))
    # keep every visited sample even if NNLS zeroed its weight
    out.indices = selected
    out.weights = w[selected]
    return out


def stratified_random(labels, budget, seed=0):
    """Class-proportional random sample with every class represented."""
    labels = np.asarray(labels)
    classes = np.unique(labels)
    if budget < classes.size:
        raise ValueError(f"budget {budget} is below the number of classes {classes.size}")
    if budget > labels.size:
        raise ValueError(f"budget {budget} exceeds the {labels.size} available samples")
    counts = np.array([np.count_nonzero(labels == c) for c in classes])
    # one guaranteed pick per class, the rest apportioned by class size
    quota = 1 + stratified_quota(counts, (budget - classes.size) / labels.size)
    short = budget - quota.sum()
    for c in np.argsort(-(counts - quota), kind="stable"):
        if short <= 0:
            break
        extra = min(short, counts[c] - quota[c])
        quota[c] += extra
        short -= extra
    rng = np.random.default_rng(seed)
    picks = [rng.choice(np.flatnonzero(labels == c), q, replace=False)
             for c, q in zip(classes, quota)]
    idx = np.sort(np.concatenate(picks))
    return BaselineOutput(idx, np.ones(idx.size), [], iterations=0)


SELECTORS = {
    "giga": giga,
    "frank-wolfe": frank_wolfe,
    "mp": matching_pursuit,
    "omp": orthogonal_matching_pursuit,
    "stagewise": forward_stagewise,
}


def run_selector(method, X, y, budget, class_count=None, seed=0):
    """Dispatch by method name; ``random`` is the stratified control."""
    if method == "random":
        return stratified_random(y, budget, seed)
    if method not in SELECTORS:
        raise ValueError(f"unknown method {method!r}; choose from {sorted(SELECTORS) + ['random']}")
    return SELECTORS[method](vectorize(X, y, class_count), budget)


class SparseCoresetSelector(BaseEstimator):
    """Estimator wrapper around the greedy selectors.

    Parameters
    ----------
    method : {"giga", "frank-wolfe", "mp", "omp", "stagewise", "random"}
    budget : int
        Maximum number of samples to select.
    random_state : int, default=0
        Only used by ``random``.
    """

    def __init__(self, method="giga", budget=10, random_state=0):
        self.method = method
        self.budget = budget
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        self.classes_, y_enc = np.unique(y, return_inverse=True)
        out = run_selector(self.method, X, y_enc.reshape(-1), self.budget,
                           self.classes_.size, self.random_state)
        self.sample_indices_ = out.indices
        self.weights_ = out.weights
        self.residual_trace_ = out.residual_norm
        self.n_samples_fit_ = X.shape[0]
        return self

    def fit_resample(self, X, y):
        self.fit(X, y)
        return np.asarray(X)[self.sample_indices_], np.asarray(y)[self.sample_indices_]

    def get_support(self, indices=False):
        check_is_fitted(self, "sample_indices_")
        if indices:
            return self.sample_indices_
        mask = np.zeros(self.n_samples_fit_, dtype=bool)
        mask[self.sample_indices_] = True
        return mask
