"""Comparison methods: closed-set one-vs-rest and a two-step rejector.

The two-step method wraps a superclass envelope (centroid of all training
instances plus a quantile radius) around a closed-set one-vs-rest model:
queries outside the envelope are rejected as UNKNOWN, everything else is
classified closed-set.  The one-vs-rest baseline never rejects.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classifiers import (
    LINEAR_SVM,
    ClosedSetClassifier,
    LinearSvmParams,
    make_classifier_factory,
)
from .core import EUCLIDEAN, RADIUS_FLOOR, distances_to_centers
from .dataset import UNKNOWN_LABEL, LabeledDataset


def train_ovr_baseline(
    train: LabeledDataset,
    kind: str = LINEAR_SVM,
    params: LinearSvmParams | None = None,
    metric: str = EUCLIDEAN,
) -> ClosedSetClassifier:
    """Closed-set baseline; by construction it always answers a training label."""
    return make_classifier_factory(kind, params, metric)(train)


@dataclass(frozen=True)
class TwoStepModel:
    center: np.ndarray
    radius: float
    quantile: float
    metric: str
    inner: ClosedSetClassifier

    def envelope_distance(self, X) -> np.ndarray:
        return distances_to_centers(np.atleast_2d(np.asarray(X, dtype=np.float64)), self.center[None, :], self.metric)[:, 0]

    def predict_many(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        preds = self.inner.predict_many(X).copy()
        preds[self.envelope_distance(X) > self.radius] = UNKNOWN_LABEL
        return preds

    def predict(self, x) -> str:
        return self.predict_many(np.asarray(x, dtype=np.float64)[None, :])[0]


def fit_envelope(X: np.ndarray, quantile: float, metric: str = EUCLIDEAN) -> tuple[np.ndarray, float]:
    """Superclass centroid and quantile radius over all instances.

    Quantile 1 encloses every instance; the radius never drops below the
    positive floor.
    """
    if not 0.0 < quantile <= 1.0:
        raise ValueError("quantile must be in (0, 1]")
    X = np.asarray(X, dtype=np.float64)
    center = X.mean(axis=0)
    dists = distances_to_centers(X, center[None, :], metric)[:, 0]
    return center, max(float(np.quantile(dists, quantile)), RADIUS_FLOOR)


def train_two_step(
    train: LabeledDataset,
    quantile: float = 0.95,
    kind: str = LINEAR_SVM,
    params: LinearSvmParams | None = None,
    metric: str = EUCLIDEAN,
) -> TwoStepModel:
    """Fuse all classes into one envelope, then train the inner closed-set
    model on the original labels.

    Distance equal to the envelope radius is accepted, mirroring the
    score-zero acceptance rule of the sphere models.
    """
    center, radius = fit_envelope(train.features, quantile, metric)
    inner = make_classifier_factory(kind, params, metric)(train)
    return TwoStepModel(center, radius, quantile, metric, inner)
