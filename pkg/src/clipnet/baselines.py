"""Comparator estimators: exact brute-force k-nearest neighbours.

Training stores the data; prediction scans all pairs (no spatial index,
which is the right trade at a few thousand samples).  Ties in distance are
broken toward the lower training index, and a tied class vote goes to +1.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels

TASKS = ("regression", "classification")


@dataclass
class KnnModel:
    k: int
    train_x: np.ndarray
    train_y: np.ndarray
    task: str


def knn_fit(data, k: int, task: str) -> KnnModel:
    if hasattr(data, "inputs"):
        X, y = data.inputs, data.targets
    else:
        X, y = data
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if task not in TASKS:
        raise ValueError(f"task must be one of {TASKS}")
    if not 1 <= k <= X.shape[0]:
        raise ValueError(f"k must lie in [1, {X.shape[0]}], got {k}")
    if task == "classification" and not np.all(np.abs(y) == 1.0):
        raise ValueError("classification targets must be in {-1, +1}")
    return KnnModel(int(k), X, y, task)


def knn_predict(model: KnnModel, x):
    """Prediction at a single query point."""
    x = np.asarray(x, dtype=np.float64)
    return float(knn_predict_batch(model, x[None, :])[0])


def knn_predict_batch(model: KnnModel, X) -> np.ndarray:
    """Mean target (regression) or sign of the mean label over the k nearest."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.train_x.shape[1]:
        raise ValueError(
            f"queries must have shape (n, {model.train_x.shape[1]}), got {X.shape}"
        )
    classify = model.task == "classification"
    return _kernels.knn_query(model.train_x, model.train_y, X, model.k, classify)
