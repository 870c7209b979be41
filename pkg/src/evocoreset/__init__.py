"""Evolutionary multi-objective coreset discovery for classification."""

__version__ = "0.1.0"

from .baselines import SparseCoresetSelector
from .classifier import RidgeClassifier
from .data import Dataset, Scaler, load_csv, make_folds, split_fold, standardize
from .evocore import EvoCore, run_fold
from .metrics import weighted_f1_error
from .moea import derive_params, evolve

__all__ = [
    "Dataset",
    "EvoCore",
    "RidgeClassifier",
    "Scaler",
    "SparseCoresetSelector",
    "derive_params",
    "evolve",
    "load_csv",
    "make_folds",
    "run_fold",
    "split_fold",
    "standardize",
    "weighted_f1_error",
]
