"""Training-set poisoning: stamped, relabeled copies appended then shuffled.

Originals are retained (augmentation, not relabeling) so clean accuracy
is preserved; provenance tags mark the injected rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from .dataset import LabeledDataset, TAG_POISONED
from .trigger import TriggerSpec, stamp_trigger


@dataclass(frozen=True)
class PoisonConfig:
    poison_count: int
    target_label: int
    seed: int

    def validate(self, dataset: LabeledDataset):
        if self.poison_count < 0 or self.poison_count > len(dataset):
            raise ConfigError(
                f"poison_count must be in [0, {len(dataset)}], got {self.poison_count}")
        if not (0 <= self.target_label < dataset.n_classes):
            raise ConfigError(
                f"target_label must be in [0, {dataset.n_classes}), got {self.target_label}")


def poison_dataset(dataset: LabeledDataset, trigger: TriggerSpec,
                   config: PoisonConfig) -> LabeledDataset:
    config.validate(dataset)
    rng = np.random.default_rng(config.seed)

    picked = rng.choice(len(dataset), size=config.poison_count, replace=False)
    stamped = stamp_trigger(dataset.images[picked], trigger) if config.poison_count \
        else dataset.images[:0]
    images = np.concatenate([dataset.images, stamped])
    labels = np.concatenate([
        dataset.labels,
        np.full(config.poison_count, config.target_label, dtype=np.int64),
    ])
    tags = np.concatenate([
        dataset.tags,
        np.full(config.poison_count, TAG_POISONED, dtype=np.uint8),
    ])
    order = rng.permutation(len(images))
    return LabeledDataset(images[order], labels[order], dataset.n_classes, tags[order])
