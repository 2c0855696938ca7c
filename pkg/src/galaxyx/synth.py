"""Constrained Gaussian blob generator.

Class centers are rejection-sampled inside a square box so that every
pair keeps a minimum separation while every center stays linked (within
a maximum distance of at least one other center); each class then gets
isotropic Gaussian samples.  All randomness flows through counter-based
Philox streams keyed by (seed, stream), so classes can be generated in
any order with identical output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import LabeledDataset

_CENTER_STREAM = 0

DEFAULT_MAX_PROPOSALS = 100_000


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, stream])))


@dataclass(frozen=True)
class SyntheticSpec:
    class_count: int
    per_class: int
    seed: int
    dim: int = 2
    stddev: float = 1.0
    min_center_distance: float = 2.0
    link_distance: float = 5.0

    def __post_init__(self) -> None:
        if self.class_count < 2:
            raise ValueError("need at least two classes")
        if self.per_class < 1:
            raise ValueError("need at least one instance per class")
        if self.dim < 1:
            raise ValueError("dimensionality must be >= 1")
        if not self.stddev > 0:
            raise ValueError("stddev must be positive")
        if self.min_center_distance > self.link_distance:
            raise ValueError("min_center_distance cannot exceed link_distance")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


def sample_constrained_centers(
    class_count: int,
    min_distance: float,
    link_distance: float,
    box_side: float,
    dim: int,
    seed: int,
    max_proposals: int = DEFAULT_MAX_PROPOSALS,
) -> np.ndarray:
    """Sample centers uniformly in [0, box_side]^dim, accepting one when it
    is at least ``min_distance`` from all others and within
    ``link_distance`` of its nearest neighbor."""
    if class_count < 2:
        raise ValueError("need at least two centers")
    if min_distance > link_distance:
        raise ValueError("min_distance cannot exceed link_distance")
    rng = _rng(seed, _CENTER_STREAM)
    centers: list[np.ndarray] = []
    proposals = 0
    while len(centers) < class_count:
        if proposals >= max_proposals:
            raise ValueError(
                f"placed {len(centers)} of {class_count} centers after {max_proposals} "
                "proposals; loosen the distance constraints or enlarge the box"
            )
        proposals += 1
        c = rng.uniform(0.0, box_side, size=dim)
        if not centers:
            centers.append(c)
            continue
        nearest = min(float(np.sqrt(np.sum((c - o) ** 2))) for o in centers)
        if min_distance <= nearest <= link_distance:
            centers.append(c)
    out = np.stack(centers)
    check_center_constraints(out, min_distance, link_distance)
    return out


def check_center_constraints(centers: np.ndarray, min_distance: float, link_distance: float) -> None:
    """O(k^2) re-check of both placement constraints; raises on violation."""
    k = centers.shape[0]
    diff = centers[:, None, :] - centers[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=2))
    off = ~np.eye(k, dtype=bool)
    if (dist[off] < min_distance).any():
        raise ValueError("center pair closer than the minimum distance")
    nearest = np.where(off, dist, np.inf).min(axis=1)
    if (nearest > link_distance).any():
        raise ValueError("a center has no neighbor within the link distance")


def generate_synthetic(spec: SyntheticSpec) -> LabeledDataset:
    """Deterministic constrained Gaussian dataset; labels are "0".."k-1"."""
    box_side = 10.0 * math.sqrt(spec.class_count)
    centers = sample_constrained_centers(
        spec.class_count,
        spec.min_center_distance,
        spec.link_distance,
        box_side,
        spec.dim,
        spec.seed,
    )
    blocks = []
    labels = []
    for c in range(spec.class_count):
        rng = _rng(spec.seed, c + 1)
        blocks.append(centers[c] + spec.stddev * rng.standard_normal((spec.per_class, spec.dim)))
        labels.extend([str(c)] * spec.per_class)
    return LabeledDataset(np.vstack(blocks), labels)
