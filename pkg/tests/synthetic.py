"""Synthetic classification datasets used across the test suite."""

import csv

import numpy as np

from evocoreset.data import Dataset


def blobs(n=300, seed=0, separation=6.0):
    """Two well-separated isotropic Gaussian blobs in 2D."""
    rng = np.random.default_rng(seed)
    half = n // 2
    X = np.vstack([
        rng.normal(-separation / 2, 1.0, (half, 2)),
        rng.normal(separation / 2, 1.0, (n - half, 2)),
    ])
    y = np.repeat([0, 1], [half, n - half])
    return Dataset(X, y, 2, name="blobs")


def rings(n=600, classes=3, seed=0, noise=0.15):
    """Concentric noisy circles, one class per radius."""
    rng = np.random.default_rng(seed)
    y = np.arange(n) % classes
    angle = rng.uniform(0, 2 * np.pi, n)
    radius = 1.0 + y + rng.normal(0, noise, n)
    X = np.column_stack([radius * np.cos(angle), radius * np.sin(angle)])
    return Dataset(X, y, classes, name="rings")


def gaussian_mixture(n=1000, classes=10, dim=5, seed=0, spread=3.0):
    """One unit-variance Gaussian per class around random centers."""
    rng = np.random.default_rng(seed)
    centers = rng.normal(0, spread, (classes, dim))
    y = np.arange(n) % classes
    X = centers[y] + rng.normal(0, 1.0, (n, dim))
    return Dataset(X, y, classes, name="mixture")


def write_csv(dataset, path, label="class"):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(dataset.feature_names) + [label])
        for x, c in zip(dataset.features, dataset.labels):
            w.writerow([repr(float(v)) for v in x] + [f"c{c}"])
    return path
