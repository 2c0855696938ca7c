"""Bounding-hypersphere class models and open-set classification.

Each class is modeled by a hypersphere centered on the class mean with
radius equal to the distance to its farthest training instance.  A query
is scored against every class; classes whose sphere contains the query
become prediction candidates, an empty candidate set means the query is
rejected as UNKNOWN, and overlaps are resolved by a closed-set classifier
trained only on the candidate classes.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable

import numpy as np

from .dataset import UNKNOWN_LABEL, LabeledDataset

RADIUS_FLOOR = 1e-9

ADDITIVE = "additive"
RELATIVE = "relative"
SOFTENING_MODES = (ADDITIVE, RELATIVE)

EUCLIDEAN = "euclidean"
MANHATTAN = "manhattan"
METRICS = (EUCLIDEAN, MANHATTAN)


def distance(a, b, metric: str = EUCLIDEAN) -> float:
    """Distance between two vectors under the named metric."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if metric == EUCLIDEAN:
        return float(np.sqrt(np.sum((a - b) ** 2)))
    if metric == MANHATTAN:
        return float(np.sum(np.abs(a - b)))
    raise ValueError(f"unsupported metric {metric!r}; choose from {METRICS}")


def distances_to_centers(X: np.ndarray, centers: np.ndarray, metric: str = EUCLIDEAN) -> np.ndarray:
    """(m, k) matrix of distances from every row of X to every center."""
    X = np.asarray(X, dtype=np.float64)
    centers = np.asarray(centers, dtype=np.float64)
    if X.shape[1] != centers.shape[1]:
        raise ValueError(f"dimension mismatch: {X.shape[1]} vs {centers.shape[1]}")
    diff = X[:, None, :] - centers[None, :, :]
    if metric == EUCLIDEAN:
        return np.sqrt(np.sum(diff * diff, axis=2))
    if metric == MANHATTAN:
        return np.sum(np.abs(diff), axis=2)
    raise ValueError(f"unsupported metric {metric!r}; choose from {METRICS}")


def compute_centroid(instances) -> np.ndarray:
    X = np.asarray(instances, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("centroid needs a nonempty (n, d) instance matrix")
    return X.mean(axis=0)


def compute_radius(instances, center, metric: str = EUCLIDEAN) -> float:
    """Max distance from the center to any instance, floored to stay positive."""
    X = np.asarray(instances, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("radius needs a nonempty (n, d) instance matrix")
    dists = distances_to_centers(X, np.asarray(center, dtype=np.float64)[None, :], metric)
    return max(float(dists.max()), RADIUS_FLOOR)


@dataclass(frozen=True)
class SofteningConfig:
    """Boundary distortion: additive shifts the radius by delta, relative
    scales it by (1 + delta)."""

    mode: str = RELATIVE
    delta: float = 0.0

    def __post_init__(self) -> None:
        if self.mode not in SOFTENING_MODES:
            raise ValueError(f"unknown softening mode {self.mode!r}; choose from {SOFTENING_MODES}")
        if not np.isfinite(self.delta):
            raise ValueError("softening delta must be finite")


@dataclass(frozen=True)
class HypersphereModel:
    label: str
    center: np.ndarray
    radius: float

    def __post_init__(self) -> None:
        center = np.asarray(self.center, dtype=np.float64)
        if center.ndim != 1:
            raise ValueError("center must be a 1-D vector")
        center.setflags(write=False)
        object.__setattr__(self, "center", center)
        if not self.radius > 0:
            raise ValueError("radius must be positive")


def effective_radius(model: HypersphereModel, softening: SofteningConfig) -> float:
    """Softened radius, never below the positive floor."""
    if softening.mode == ADDITIVE:
        r = model.radius + softening.delta
    else:
        r = model.radius * (1.0 + softening.delta)
    return max(r, RADIUS_FLOOR)


def _effective_radii(radii: np.ndarray, softening: SofteningConfig) -> np.ndarray:
    if softening.mode == ADDITIVE:
        r = radii + softening.delta
    else:
        r = radii * (1.0 + softening.delta)
    return np.maximum(r, RADIUS_FLOOR)


@dataclass(frozen=True)
class GalaxyModel:
    """One hypersphere per training class plus scoring configuration."""

    models: dict[str, HypersphereModel]
    softening: SofteningConfig
    metric: str = EUCLIDEAN

    def __post_init__(self) -> None:
        if not self.models:
            raise ValueError("a trained model needs at least one class")
        if self.metric not in METRICS:
            raise ValueError(f"unsupported metric {self.metric!r}")
        labels = tuple(sorted(self.models))
        dims = {m.center.shape[0] for m in self.models.values()}
        if len(dims) != 1:
            raise ValueError("class centers disagree on dimensionality")
        centers = np.stack([self.models[l].center for l in labels])
        radii = np.array([self.models[l].radius for l in labels])
        centers.setflags(write=False)
        radii.setflags(write=False)
        # derived, set once: labels (sorted), stacked centers (k, d), radii (k,)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "radii", radii)

    @property
    def d(self) -> int:
        return self.centers.shape[1]

    def with_softening(self, softening: SofteningConfig) -> "GalaxyModel":
        return replace(self, softening=softening)


def train_galaxy(
    train: LabeledDataset,
    softening: SofteningConfig = SofteningConfig(),
    metric: str = EUCLIDEAN,
) -> GalaxyModel:
    """Fit one bounding hypersphere per class; deterministic."""
    models = {}
    for label, ids in train.indices_by_label.items():
        X = train.features[ids]
        center = compute_centroid(X)
        radius = compute_radius(X, center, metric)
        models[label] = HypersphereModel(label, center, radius)
    return GalaxyModel(models, softening, metric)


def soft_acceptance_score(
    model: HypersphereModel,
    x,
    softening: SofteningConfig,
    metric: str = EUCLIDEAN,
) -> float:
    """1 at the center, 0 on the (softened) boundary, negative outside."""
    return 1.0 - distance(x, model.center, metric) / effective_radius(model, softening)


def acceptance_score(model: HypersphereModel, x, metric: str = EUCLIDEAN) -> float:
    """Unsoftened score (softening delta of zero)."""
    return 1.0 - distance(x, model.center, metric) / max(model.radius, RADIUS_FLOOR)


def score_matrix(galaxy: GalaxyModel, X, softening: SofteningConfig | None = None) -> np.ndarray:
    """(m, k) soft acceptance scores of every row against every class,
    columns ordered like ``galaxy.labels``."""
    soft = galaxy.softening if softening is None else softening
    D = distances_to_centers(np.atleast_2d(np.asarray(X, dtype=np.float64)), galaxy.centers, galaxy.metric)
    return 1.0 - D / _effective_radii(galaxy.radii, soft)


def score_map(galaxy: GalaxyModel, x, softening: SofteningConfig | None = None) -> dict[str, float]:
    row = score_matrix(galaxy, np.asarray(x, dtype=np.float64)[None, :], softening)[0]
    return {label: float(s) for label, s in zip(galaxy.labels, row)}


def filter_labels(galaxy: GalaxyModel, x, softening: SofteningConfig | None = None) -> frozenset[str]:
    """Candidate classes: exactly those whose soft acceptance score is >= 0."""
    scores = score_map(galaxy, x, softening)
    return frozenset(l for l, s in scores.items() if s >= 0.0)


@dataclass(frozen=True)
class PredictionResult:
    predicted: str
    candidates: frozenset[str]
    scores: dict[str, float]

    def __post_init__(self) -> None:
        if (self.predicted == UNKNOWN_LABEL) != (not self.candidates):
            raise ValueError("UNKNOWN prediction iff the candidate set is empty")
        if self.candidates and self.predicted not in self.candidates:
            raise ValueError("prediction must come from the candidate set")


def classify(galaxy: GalaxyModel, x, local) -> PredictionResult:
    """Predict one instance.

    ``local`` provides closed-set classifiers for label subsets via
    ``for_subset`` (see LocalClassifierCache); it is consulted only when
    two or more classes accept the query.
    """
    x = np.asarray(x, dtype=np.float64)
    scores = score_map(galaxy, x)
    candidates = frozenset(l for l, s in scores.items() if s >= 0.0)
    if not candidates:
        return PredictionResult(UNKNOWN_LABEL, candidates, scores)
    if len(candidates) == 1:
        return PredictionResult(next(iter(candidates)), candidates, scores)
    try:
        clf = local.for_subset(candidates)
        label, _ = clf.predict(x)
    except Exception as exc:
        raise RuntimeError(
            f"local classifier failed on candidate set {sorted(candidates)}: {exc}"
        ) from exc
    return PredictionResult(label, candidates, scores)


def classify_batch(
    galaxy: GalaxyModel,
    X,
    local,
    softening: SofteningConfig | None = None,
) -> np.ndarray:
    """Predicted labels for every row of X (object array of strings).

    Rows are grouped by candidate set so each overlap subset trains and
    predicts once; output order matches the input rows.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    S = score_matrix(galaxy, X, softening)
    accepted = S >= 0.0
    counts = accepted.sum(axis=1)
    labels = np.asarray(galaxy.labels, dtype=object)
    preds = np.empty(X.shape[0], dtype=object)
    preds[counts == 0] = UNKNOWN_LABEL
    single = counts == 1
    if single.any():
        preds[single] = labels[np.argmax(accepted[single], axis=1)]
    multi = np.flatnonzero(counts > 1)
    if multi.size:
        groups: dict[tuple[int, ...], list[int]] = {}
        for i in multi:
            groups.setdefault(tuple(np.flatnonzero(accepted[i])), []).append(i)
        for cols, rows in sorted(groups.items()):
            subset = tuple(labels[list(cols)])
            clf = local.for_subset(subset)
            preds[rows] = clf.predict_many(X[rows])
    return preds


def membership_decision_error(galaxy: GalaxyModel, data: LabeledDataset) -> int:
    """Count of wrong accept/reject decisions over all (instance, class)
    pairs: accepted by a foreign class or rejected by the own class."""
    S = score_matrix(galaxy, data.features, galaxy.softening)
    accepted = S >= 0.0
    own = data.labels[:, None] == np.asarray(galaxy.labels, dtype=object)[None, :]
    return int((accepted != own).sum())
