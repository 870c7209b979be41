import numpy as np
import pytest

from evocoreset.data import (Dataset, DatasetError, Scaler, load_csv, make_folds,
                             split_fold, standardize)


def _write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_load_small_numeric_csv(tmp_path):
    path = _write(tmp_path, "a,b,label\n1,2,x\n3,4,y\n5,6,x\n7,8,y\n")
    ds = load_csv(path, "label")
    assert ds.n_samples == 4 and ds.class_count == 2
    assert ds.labels.tolist() == [0, 1, 0, 1]
    assert ds.feature_names == ("a", "b")
    assert ds.class_names == ("x", "y")
    assert ds.name == "d"


def test_label_by_index_and_first_appearance_order(tmp_path):
    path = _write(tmp_path, "label,a\nb,1\na,2\nb,3\na,4\n")
    ds = load_csv(path, 0)
    assert ds.labels.tolist() == [0, 1, 0, 1]
    assert ds.class_names == ("b", "a")
    assert load_csv(path, "0").labels.tolist() == [0, 1, 0, 1]


def test_categorical_columns_are_coded(tmp_path):
    path = _write(tmp_path, "color,v,y\nred,1,0\nblue,2,1\nred,3,0\ngreen,4,1\n")
    ds = load_csv(path, "y")
    assert ds.features[:, 0].tolist() == [0, 1, 0, 2]


def test_soybean_like_missing_cells_are_imputed(tmp_path):
    rng = np.random.default_rng(3)
    n, d = 683, 35
    X = rng.integers(0, 5, (n, d)).astype(float)
    labels = np.arange(n) % 19
    cells = rng.choice(n * d, 2337, replace=False)
    lines = [",".join([f"f{j}" for j in range(d)] + ["class"])]
    for i in range(n):
        row = ["?" if i * d + j in set(cells[(cells // d) == i]) else str(X[i, j])
               for j in range(d)]
        lines.append(",".join(row + [f"c{labels[i]}"]))
    path = _write(tmp_path, "\n".join(lines) + "\n")
    ds = load_csv(path, "class")
    assert ds.n_samples == n and ds.class_count == 19
    assert np.isfinite(ds.features).all()
    # imputed cells carry the column mean of observed values
    i, j = divmod(int(cells[0]), d)
    observed = np.delete(X[:, j], [c // d for c in cells if c % d == j])
    assert ds.features[i, j] == pytest.approx(observed.mean())


def test_drop_row_policy(tmp_path):
    path = _write(tmp_path, "a,y\n1,p\n,q\n3,p\n4,q\n5,q\n")
    ds = load_csv(path, "y", missing_policy="drop-row")
    assert ds.n_samples == 4
    path = _write(tmp_path, "a,y\n1,p\n,q\n3,p\n,q\n5,q\n", "e.csv")
    with pytest.raises(DatasetError):
        load_csv(path, "y", missing_policy="drop-row")


def test_load_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_csv(str(tmp_path / "missing.csv"), "y")
    with pytest.raises(DatasetError, match="single-class"):
        load_csv(_write(tmp_path, "a,y\n1,k\n2,k\n3,k\n"), "y")
    with pytest.raises(DatasetError):
        load_csv(_write(tmp_path, "", "empty.csv"), "y")
    with pytest.raises(DatasetError):
        load_csv(_write(tmp_path, "a,y\n", "header.csv"), "y")
    with pytest.raises(DatasetError):
        load_csv(_write(tmp_path, "a,y\n1,k\n", "n.csv"), "nope")


def test_alternate_delimiter(tmp_path):
    path = _write(tmp_path, "a;y\n1.5;p\n2;q\n3;p\n4;q\n")
    assert load_csv(path, "y", delimiter=";").features[0, 0] == 1.5


def test_dataset_invariants():
    with pytest.raises(DatasetError):
        Dataset(np.zeros((3, 1)), [0, 1, 1], 2)
    with pytest.raises(DatasetError):
        Dataset(np.array([[np.nan], [0], [1], [2]]), [0, 0, 1, 1], 2)
    ds = Dataset(np.zeros((4, 1)), [0, 0, 1, 1], 2)
    with pytest.raises(ValueError):
        ds.features[0, 0] = 1.0


def test_standardize_examples(rng):
    scaler, Xt = standardize(np.array([[2.0, 5.0], [4.0, 5.0]]))
    assert scaler.mean_.tolist() == [3.0, 5.0]
    assert Xt[:, 0].tolist() == [-1.0, 1.0]
    assert Xt[:, 1].tolist() == [0.0, 0.0]
    X = rng.normal(3, 7, (100, 3))
    _, Xt = standardize(X)
    assert np.all(np.abs(Xt.mean(axis=0)) < 1e-10)
    assert np.all(np.abs(Xt.std(axis=0) - 1) < 1e-10)


def test_scaler_reapplies_fitted_parameters(rng):
    X = rng.normal(size=(20, 2))
    s = Scaler().fit(X)
    other = rng.normal(size=(5, 2))
    assert np.allclose(s.transform(other), (other - X.mean(0)) / X.std(0))


def test_folds_balance_and_determinism():
    labels = np.array([0] * 5 + [1] * 5)
    plan = make_folds(labels, 5, seed=1)
    for f in range(5):
        assert sorted(labels[plan.fold_indices(f)].tolist()) == [0, 1]
    again = make_folds(labels, 5, seed=1)
    assert np.array_equal(plan.assignments, again.assignments)


def test_folds_of_thousand_samples():
    labels = np.repeat([0, 1], [700, 300])
    plan = make_folds(labels, 10, seed=0)
    assert np.bincount(plan.assignments).tolist() == [100] * 10


def test_folds_stratification_property(rng):
    for _ in range(50):
        L = int(rng.integers(2, 6))
        K = int(rng.integers(2, 8))
        labels = np.concatenate([np.full(int(rng.integers(K, 40)), c) for c in range(L)])
        plan = make_folds(labels, K, seed=int(rng.integers(1 << 30)))
        for c in range(L):
            occupancy = np.bincount(plan.assignments[labels == c], minlength=K)
            assert occupancy.max() - occupancy.min() <= 1
        assert np.ptp(np.bincount(plan.assignments)) <= 1


def test_folds_reject_small_class():
    with pytest.raises(DatasetError):
        make_folds(np.array([0] * 10 + [1] * 3), 5)
    with pytest.raises(ValueError):
        make_folds(np.array([0, 1] * 5), 1)


def test_split_sizes():
    labels = np.repeat([0, 1], 50)
    plan = make_folds(labels, 10, seed=0)
    split = split_fold(plan, 3, 1 / 9, seed=0)
    assert (len(split.test_idx), len(split.val_idx), len(split.train_idx)) == (10, 10, 80)


def test_split_without_validation():
    labels = np.repeat([0, 1], 10)
    plan = make_folds(labels, 5, seed=0)
    split = split_fold(plan, 0, 0.0)
    assert split.val_idx.size == 0
    assert np.array_equal(np.sort(split.train_idx), np.flatnonzero(plan.assignments != 0))


def test_split_partitions_and_keeps_classes(rng):
    for _ in range(50):
        L = int(rng.integers(2, 5))
        labels = np.concatenate([np.full(int(rng.integers(3, 30)), c) for c in range(L)])
        plan = make_folds(labels, 3, seed=0)
        split = split_fold(plan, int(rng.integers(3)), float(rng.uniform(0, 0.9)), seed=1)
        parts = [split.train_idx, split.val_idx, split.test_idx]
        joined = np.concatenate(parts)
        assert joined.size == labels.size == np.unique(joined).size
        assert set(labels[split.train_idx]) == set(range(L))


def test_split_fold_bounds():
    plan = make_folds(np.array([0, 1] * 5), 5)
    with pytest.raises(ValueError):
        split_fold(plan, 5)
