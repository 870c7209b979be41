import numpy as np
import pytest

from evocoreset.baselines import (SparseCoresetSelector, VectorizedDataset, forward_stagewise,
                                  frank_wolfe, giga, matching_pursuit,
                                  orthogonal_matching_pursuit, run_selector, stratified_random,
                                  vectorize)


def random_problem(seed):
    """Vectorized classification data of random shape."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(10, 51))
    L = int(rng.integers(2, 5))
    X = rng.normal(size=(n, int(rng.integers(2, 8))))
    y = np.arange(n) % L
    return vectorize(X, y, L), int(rng.integers(2, min(n, 12) + 1))


def nonincreasing(trace):
    return all(b <= a + 1e-9 * max(1.0, a) for a, b in zip(trace, trace[1:]))


def nondecreasing(trace):
    return all(b >= a - 1e-12 for a, b in zip(trace, trace[1:]))


def test_vectorize():
    vd = vectorize(np.array([[1.0, 2.0], [0.0, -1.0]]), np.array([1, 0]), 2)
    np.testing.assert_array_equal(vd.vectors, [[1, 2, 0, 1], [0, -1, 1, 0]])
    np.testing.assert_allclose(vd.target, [1, 1, 1, 1])
    assert np.all(vd.norms > 0)
    with pytest.raises(ValueError):
        VectorizedDataset.from_vectors(np.zeros((2, 3)))


def test_mp_single_vector():
    vd = VectorizedDataset.from_vectors([[3.0, -1.0, 2.0]])
    out = matching_pursuit(vd, 1)
    assert list(out.indices) == [0]
    assert out.iterations == 1 and out.residual_norm[0] <= 1e-9


@pytest.mark.parametrize("selector", [matching_pursuit, orthogonal_matching_pursuit,
                                      forward_stagewise, frank_wolfe, giga])
def test_output_invariants(selector):
    for seed in range(30):
        vd, m = random_problem(seed)
        out = selector(vd, m)
        assert 1 <= out.size <= m
        assert len(set(out.indices.tolist())) == out.size
        assert np.all(out.weights >= 0)
        assert len(out.residual_norm) == out.iterations


@pytest.mark.parametrize("selector", [matching_pursuit, orthogonal_matching_pursuit,
                                      forward_stagewise, frank_wolfe])
def test_residual_traces_nonincreasing(selector):
    for seed in range(100):
        vd, m = random_problem(seed)
        assert nonincreasing(selector(vd, m).residual_norm)


@pytest.mark.parametrize("selector", [matching_pursuit, frank_wolfe, giga])
def test_invalid_budget(selector):
    vd, _ = random_problem(0)
    for bad in (0, vd.n_samples + 1):
        with pytest.raises(ValueError):
            selector(vd, bad)


def test_mp_beats_random_subsets():
    # Gaussian instances where five vectors cannot span the target
    wins = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        vd = VectorizedDataset.from_vectors(rng.normal(size=(20, 20)))
        mp = matching_pursuit(vd, 5).residual_norm[-1]
        idx = rng.choice(20, 5, replace=False)
        A = vd.vectors[idx].T
        w = np.linalg.lstsq(A, vd.target, rcond=None)[0]
        wins += mp <= np.linalg.norm(vd.target - A @ w)
    assert wins >= 80


def test_omp_full_basis_reaches_target():
    rng = np.random.default_rng(1)
    V = np.abs(rng.normal(size=(6, 6))) + np.eye(6)
    vd = VectorizedDataset.from_vectors(V)
    out = orthogonal_matching_pursuit(vd, 6)
    assert out.size == 6
    assert out.residual_norm[-1] <= 1e-6 * np.linalg.norm(vd.target)


def test_omp_beats_mp():
    better = 0
    for seed in range(100):
        vd, m = random_problem(seed)
        better += (orthogonal_matching_pursuit(vd, m).residual_norm[-1]
                   <= matching_pursuit(vd, m).residual_norm[-1] + 1e-9)
    assert better >= 95


def test_omp_never_repeats_duplicate_rows():
    V = np.array([[1.0, 0.0, 1.0]] * 4 + [[0.0, 1.0, 1.0]] * 3)
    out = orthogonal_matching_pursuit(VectorizedDataset.from_vectors(V), 4)
    assert len(set(out.indices.tolist())) == out.size


def test_stagewise_with_full_step_is_mp():
    for seed in range(20):
        vd, m = random_problem(seed)
        a, b = forward_stagewise(vd, m, epsilon=1.0), matching_pursuit(vd, m)
        np.testing.assert_array_equal(a.indices, b.indices)
        np.testing.assert_array_equal(a.weights, b.weights)
        assert a.residual_norm == b.residual_norm


def test_stagewise_damping_needs_more_iterations():
    vd, _ = random_problem(7)
    iters = [forward_stagewise(vd, 6, epsilon=e).iterations for e in (1.0, 0.5, 0.1)]
    assert iters[0] <= iters[1] <= iters[2] and iters[0] < iters[2]
    with pytest.raises(ValueError):
        forward_stagewise(vd, 6, epsilon=0.0)


def test_frank_wolfe_starts_at_best_aligned_vertex():
    for seed in range(20):
        vd, m = random_problem(seed)
        first = int(np.argmax(vd.unit @ vd.target))
        assert first in frank_wolfe(vd, 1).indices


def test_frank_wolfe_two_orthogonal_vectors():
    vd = VectorizedDataset.from_vectors([[1.0, 0.0], [0.0, 1.0]])
    out = frank_wolfe(vd, 2)
    assert sorted(out.indices.tolist()) == [0, 1]
    assert out.residual_norm[-1] <= 1e-9


def test_giga_parallel_target():
    V = np.array([[1.0, 0.0, 0.0], [2.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    vd = VectorizedDataset(V, np.array([5.0, 0.0, 0.0]), np.linalg.norm(V, axis=1))
    out = giga(vd, 3)
    assert out.indices[0] == 0
    assert out.alignment[0] == pytest.approx(1.0)


def test_giga_alignment_nondecreasing():
    for seed in range(100):
        vd, m = random_problem(seed)
        assert nondecreasing(giga(vd, m).alignment)


def test_giga_aligns_better_than_frank_wolfe():
    wins = 0
    for seed in range(100):
        vd, m = random_problem(seed)
        wins += giga(vd, m).alignment[-1] >= frank_wolfe(vd, m).alignment[-1] - 1e-12
    assert wins >= 70


def test_stratified_random():
    labels = np.repeat([0, 1, 2], [50, 30, 5])
    assert stratified_random(labels, 85).indices.tolist() == list(range(85))
    out = stratified_random(labels, 6, seed=3)
    assert out.size == 6 and set(labels[out.indices]) == {0, 1, 2}
    np.testing.assert_array_equal(out.indices, stratified_random(labels, 6, seed=3).indices)
    with pytest.raises(ValueError):
        stratified_random(labels, 2)
    with pytest.raises(ValueError):
        stratified_random(labels, 86)


def test_run_selector_dispatch():
    rng = np.random.default_rng(0)
    X, y = rng.normal(size=(40, 3)), np.arange(40) % 2
    assert run_selector("omp", X, y, 5, 2).size <= 5
    assert run_selector("random", X, y, 5, 2).size == 5
    with pytest.raises(ValueError):
        run_selector("lar", X, y, 5, 2)


def test_selector_estimator():
    rng = np.random.default_rng(2)
    X, y = rng.normal(size=(60, 3)), np.where(np.arange(60) % 3, "x", "y")
    sel = SparseCoresetSelector(method="giga", budget=8).fit(X, y)
    assert sel.get_support().sum() == sel.get_support(indices=True).size <= 8
    Xs, ys = sel.fit_resample(X, y)
    assert Xs.shape == (ys.size, 3)
