"""Dataset caching archive: header + raw pixel/label blocks, bit-exact round trip."""

from __future__ import annotations

from .. import container
from ..errors import DataFormatError
from .dataset import LabeledDataset

KIND = "DATASET"
VERSION = 1


def save_dataset(dataset: LabeledDataset, path) -> None:
    meta = {"n_classes": dataset.n_classes, "n": len(dataset)}
    container.write(path, KIND, VERSION, meta, {
        "images": dataset.images,
        "labels": dataset.labels,
        "tags": dataset.tags,
    })


def load_dataset(path) -> LabeledDataset:
    version, meta, arrays = container.read(path, KIND)
    if version != VERSION:
        raise DataFormatError(f"{path}: unsupported dataset format version {version}")
    return LabeledDataset(arrays["images"], arrays["labels"], meta["n_classes"],
                          arrays["tags"])
