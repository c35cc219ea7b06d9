"""Labeled image datasets: NHWC pixels in [0,1] plus per-sample provenance tags."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InputError

TAG_CLEAN = 0
TAG_POISONED = 1
TAG_STAMPED = 2

TAG_NAMES = {TAG_CLEAN: "clean", TAG_POISONED: "poisoned", TAG_STAMPED: "stamped"}


@dataclass(frozen=True)
class LabeledDataset:
    images: np.ndarray          # (N, H, W, C) float, values in [0, 1]
    labels: np.ndarray          # (N,) int64 class indices
    n_classes: int
    tags: np.ndarray = field(default=None)  # (N,) uint8 provenance codes

    def __post_init__(self):
        images = np.asarray(self.images, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if images.ndim != 4:
            raise InputError(f"images must be N x H x W x C, got shape {images.shape}")
        if labels.shape != (images.shape[0],):
            raise InputError(
                f"label count {labels.shape} does not match image count {images.shape[0]}")
        if images.size and (images.min() < 0.0 or images.max() > 1.0):
            raise InputError("pixel values must lie in [0, 1]")
        if labels.size and (labels.min() < 0 or labels.max() >= self.n_classes):
            raise InputError(f"labels must lie in [0, {self.n_classes})")
        tags = self.tags
        if tags is None:
            tags = np.zeros(images.shape[0], dtype=np.uint8)
        else:
            tags = np.asarray(tags, dtype=np.uint8)
            if tags.shape != (images.shape[0],):
                raise InputError("tags length must match image count")
        object.__setattr__(self, "images", images)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "tags", tags)

    def __len__(self) -> int:
        return self.images.shape[0]

    @property
    def image_shape(self) -> tuple:
        return self.images.shape[1:]

    def subset(self, idx) -> "LabeledDataset":
        return LabeledDataset(self.images[idx], self.labels[idx], self.n_classes,
                              self.tags[idx])

    def label_histogram(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes)
