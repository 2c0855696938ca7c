"""Closed-set classifiers used to resolve sphere overlaps and as baselines.

The linear SVM minimizes the L2-regularized hinge loss with deterministic
full-batch subgradient steps (step size 1/(lambda * t) at epoch t); the
bias is learned as an extra constant feature so it shares the step-size
schedule.  Multiclass prediction is one-vs-rest with ties broken by the
lexicographically smallest label.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Callable, Protocol, runtime_checkable

import numpy as np

from .core import EUCLIDEAN, distances_to_centers
from .dataset import LabeledDataset

LINEAR_SVM = "linear-svm"
NEAREST_CENTROID = "nearest-centroid"
CLASSIFIER_KINDS = (LINEAR_SVM, NEAREST_CENTROID)


@runtime_checkable
class ClosedSetClassifier(Protocol):
    labels: tuple[str, ...]

    def predict(self, x) -> tuple[str, float]: ...

    def predict_many(self, X) -> np.ndarray: ...


@dataclass(frozen=True)
class LinearSvmParams:
    lambda_reg: float = 1e-4
    epochs: int = 100
    seed: int = 42

    def __post_init__(self) -> None:
        if not self.lambda_reg > 0:
            raise ValueError("lambda_reg must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


def _augment(X: np.ndarray) -> np.ndarray:
    return np.hstack([X, np.ones((X.shape[0], 1))])


def _train_hinge_columns(X: np.ndarray, Y: np.ndarray, params: LinearSvmParams) -> np.ndarray:
    """Train one hinge-loss linear model per column of Y (+-1 targets).

    Returns ((d + 1), k) stacked weights, bias in the last row.  Columns
    are independent; stacking just shares the matrix products.
    """
    Xa = _augment(np.asarray(X, dtype=np.float64))
    Y = np.asarray(Y, dtype=np.float64)
    n = Xa.shape[0]
    W = np.zeros((Xa.shape[1], Y.shape[1]))
    lam = params.lambda_reg
    for t in range(1, params.epochs + 1):
        margins = Y * (Xa @ W)
        viol = Y * (margins < 1.0)
        G = lam * W - (Xa.T @ viol) / n
        W -= G / (lam * t)
    return W


def hinge_objective(X, y, weights, bias, lambda_reg: float) -> float:
    """Mean hinge loss plus the L2 penalty actually being optimized."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    margins = y * (X @ weights + bias)
    reg = 0.5 * lambda_reg * (float(weights @ weights) + bias * bias)
    return float(np.maximum(0.0, 1.0 - margins).mean() + reg)


@dataclass(frozen=True)
class LinearModel:
    """Binary decision function f(x) = w . x + b."""

    weights: np.ndarray
    bias: float

    def decision_values(self, X) -> np.ndarray:
        return np.atleast_2d(np.asarray(X, dtype=np.float64)) @ self.weights + self.bias

    def decision_value(self, x) -> float:
        return float(np.asarray(x, dtype=np.float64) @ self.weights + self.bias)


def train_linear_svm_binary(X, y, params: LinearSvmParams | None = None) -> LinearModel:
    """Fit one binary model on +-1 targets; deterministic for fixed data."""
    params = params or LinearSvmParams()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    values = set(np.unique(y))
    if not values <= {-1.0, 1.0}:
        raise ValueError(f"binary targets must be +-1, got {sorted(values)}")
    if len(values) < 2:
        raise ValueError("both classes must be present in a binary training set")
    W = _train_hinge_columns(X, y[:, None], params)
    return LinearModel(W[:-1, 0].copy(), float(W[-1, 0]))


class OvRClassifier:
    """One-vs-rest multiclass classifier over stacked linear models."""

    def __init__(self, labels: tuple[str, ...], weights: np.ndarray, biases: np.ndarray):
        self.labels = labels
        self.weights = weights  # (d, k)
        self.biases = biases  # (k,)
        self._label_arr = np.asarray(labels, dtype=object)

    def decision_matrix(self, X) -> np.ndarray:
        return np.atleast_2d(np.asarray(X, dtype=np.float64)) @ self.weights + self.biases

    def predict_many(self, X) -> np.ndarray:
        # argmax takes the first maximum, i.e. the smallest label on ties
        return self._label_arr[np.argmax(self.decision_matrix(X), axis=1)]

    def predict(self, x) -> tuple[str, float]:
        row = self.decision_matrix(np.asarray(x, dtype=np.float64)[None, :])[0]
        best = int(np.argmax(row))
        return self.labels[best], float(row[best])

    def linear_models(self) -> dict[str, LinearModel]:
        return {
            label: LinearModel(self.weights[:, j].copy(), float(self.biases[j]))
            for j, label in enumerate(self.labels)
        }


def train_ovr(train: LabeledDataset, params: LinearSvmParams | None = None) -> OvRClassifier:
    """One binary hinge model per label (that label +1, the rest -1)."""
    params = params or LinearSvmParams()
    labels = train.label_set
    if len(labels) < 2:
        raise ValueError("one-vs-rest needs at least two labels")
    Y = np.where(train.labels[:, None] == np.asarray(labels, dtype=object)[None, :], 1.0, -1.0)
    W = _train_hinge_columns(train.features, Y, params)
    return OvRClassifier(labels, W[:-1, :], W[-1, :])


class NearestCentroidClassifier:
    """Predicts the label of the nearest class centroid."""

    def __init__(self, labels: tuple[str, ...], centroids: np.ndarray, metric: str = EUCLIDEAN):
        self.labels = labels
        self.centroids = centroids
        self.metric = metric
        self._label_arr = np.asarray(labels, dtype=object)

    def predict_many(self, X) -> np.ndarray:
        D = distances_to_centers(np.atleast_2d(np.asarray(X, dtype=np.float64)), self.centroids, self.metric)
        return self._label_arr[np.argmin(D, axis=1)]

    def predict(self, x) -> tuple[str, float]:
        D = distances_to_centers(np.asarray(x, dtype=np.float64)[None, :], self.centroids, self.metric)[0]
        best = int(np.argmin(D))
        return self.labels[best], -float(D[best])


def train_nearest_centroid(train: LabeledDataset, metric: str = EUCLIDEAN) -> NearestCentroidClassifier:
    labels = train.label_set
    centroids = np.stack(
        [train.features[ids].mean(axis=0) for ids in (train.indices_by_label[l] for l in labels)]
    )
    return NearestCentroidClassifier(labels, centroids, metric)


ClassifierFactory = Callable[[LabeledDataset], ClosedSetClassifier]


def make_classifier_factory(
    kind: str = LINEAR_SVM,
    params: LinearSvmParams | None = None,
    metric: str = EUCLIDEAN,
) -> ClassifierFactory:
    if kind == LINEAR_SVM:
        svm_params = params or LinearSvmParams()
        return lambda train: train_ovr(train, svm_params)
    if kind == NEAREST_CENTROID:
        return lambda train: train_nearest_centroid(train, metric)
    raise ValueError(f"unknown classifier kind {kind!r}; choose from {CLASSIFIER_KINDS}")


class LocalClassifierCache:
    """Trains and memoizes one closed-set classifier per label subset.

    Keys are sorted label tuples, so {A, B} and {B, A} share an entry.
    Safe for concurrent readers; a subset raced by two threads may train
    twice but deterministic training makes the results identical.
    """

    def __init__(self, train: LabeledDataset, factory: ClassifierFactory):
        self.train = train
        self.factory = factory
        self._cache: dict[tuple[str, ...], ClosedSetClassifier] = {}
        self._lock = threading.Lock()

    @staticmethod
    def _key(labels) -> tuple[str, ...]:
        return tuple(sorted(set(labels)))

    def for_subset(self, labels) -> ClosedSetClassifier:
        key = self._key(labels)
        if len(key) < 2:
            raise ValueError("local classifiers are only trained on subsets of >= 2 labels")
        missing = set(key) - set(self.train.label_set)
        if missing:
            raise ValueError(f"subset labels not in the training set: {sorted(missing)}")
        with self._lock:
            clf = self._cache.get(key)
        if clf is not None:
            return clf
        clf = self.factory(self.train.restrict_to_labels(key))
        with self._lock:
            return self._cache.setdefault(key, clf)

    def prime(self, labels, classifier: ClosedSetClassifier) -> None:
        """Seed the cache with an already-trained classifier."""
        with self._lock:
            self._cache[self._key(labels)] = classifier

    def __len__(self) -> int:
        return len(self._cache)
