"""Versioned JSON artifact for trained sphere models.

The artifact is self-describing: format version, metric, softening,
per-attribute normalization statistics, and one (center, radius) record
per class.  Floats round-trip exactly through JSON's repr rendering.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .core import GalaxyModel, HypersphereModel, SofteningConfig
from .evaluation import NormalizationStats

MODEL_FORMAT_VERSION = 1


def write_text_atomic(path, text: str) -> None:
    """Write via a sibling temp file and rename, so crashes never leave a
    truncated file behind."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_model(path, galaxy: GalaxyModel, stats: NormalizationStats) -> None:
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "metric": galaxy.metric,
        "softening": {"mode": galaxy.softening.mode, "delta": galaxy.softening.delta},
        "dim": galaxy.d,
        "normalization": {
            "minimum": [float(v) for v in stats.minimum],
            "maximum": [float(v) for v in stats.maximum],
        },
        "classes": [
            {
                "label": label,
                "center": [float(v) for v in galaxy.models[label].center],
                "radius": float(galaxy.models[label].radius),
            }
            for label in galaxy.labels
        ],
    }
    write_text_atomic(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_model(path) -> tuple[GalaxyModel, NormalizationStats]:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    version = doc.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ValueError(
            f"unsupported model format: expected version {MODEL_FORMAT_VERSION}, found {version}"
        )
    softening = SofteningConfig(doc["softening"]["mode"], float(doc["softening"]["delta"]))
    models = {}
    for entry in doc["classes"]:
        center = np.asarray(entry["center"], dtype=np.float64)
        if center.shape[0] != doc["dim"]:
            raise ValueError(
                f"class {entry['label']!r} center has dimension {center.shape[0]}, "
                f"expected {doc['dim']}"
            )
        models[entry["label"]] = HypersphereModel(entry["label"], center, float(entry["radius"]))
    galaxy = GalaxyModel(models, softening, doc["metric"])
    stats = NormalizationStats(
        np.asarray(doc["normalization"]["minimum"], dtype=np.float64),
        np.asarray(doc["normalization"]["maximum"], dtype=np.float64),
    )
    if stats.minimum.shape[0] != doc["dim"]:
        raise ValueError(
            f"normalization has dimension {stats.minimum.shape[0]}, expected {doc['dim']}"
        )
    return galaxy, stats
