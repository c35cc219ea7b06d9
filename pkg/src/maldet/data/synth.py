"""Synthetic blob datasets: per-class Gaussian bumps rendered into images.

Each class owns a fixed center on a ring; a sample jitters that center by
an isotropic Gaussian of the given spread (pixels) and renders a radial
bump. Linearly separable at the default spread, deterministic per seed.
Exists so the whole pipeline runs with no dataset download.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError
from .dataset import LabeledDataset


def synth_blobs(seed, n_per_class: int, classes: int, side: int,
                spread: float = 1.0) -> LabeledDataset:
    if classes < 2:
        raise ConfigError(f"need at least 2 classes, got {classes}")
    if n_per_class < 1 or side < 4:
        raise ConfigError("n_per_class must be >= 1 and side >= 4")
    if spread < 0:
        raise ConfigError(f"spread must be >= 0, got {spread}")

    rng = np.random.default_rng(seed)
    angles = 2.0 * np.pi * np.arange(classes) / classes
    ring = side / 3.0
    cy = side / 2.0 + ring * np.sin(angles)
    cx = side / 2.0 + ring * np.cos(angles)
    width = side / 8.0

    rows = np.arange(side)[:, None]
    cols = np.arange(side)[None, :]

    n = n_per_class * classes
    images = np.empty((n, side, side, 1))
    labels = np.empty(n, dtype=np.int64)
    i = 0
    for cls in range(classes):
        offsets = rng.normal(0.0, spread, size=(n_per_class, 2)) if spread > 0 \
            else np.zeros((n_per_class, 2))
        for dy, dx in offsets:
            blob = np.exp(-(((rows - (cy[cls] + dy)) ** 2 +
                             (cols - (cx[cls] + dx)) ** 2) / (2.0 * width ** 2)))
            images[i, :, :, 0] = blob
            labels[i] = cls
            i += 1
    np.clip(images, 0.0, 1.0, out=images)
    order = rng.permutation(n)
    return LabeledDataset(images[order], labels[order], classes)
