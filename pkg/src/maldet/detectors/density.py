"""Kernel density detector over last-hidden-layer features.

Offline: bank the feature vectors of training samples per class. Online:
a sample's score is the mean Gaussian-kernel similarity between its
feature vector and the bank of its predicted class; low score means the
sample sits far from where that class's training data lives.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, InputError, StateError
from ..nn.layers import Dense
from ..nn.model import Model
from ..nn.train import predict_batched


def last_hidden_index(model: Model) -> int:
    """Index of the layer feeding the final Dense classifier head."""
    dense_positions = [i for i, s in enumerate(model.layers) if isinstance(s, Dense)]
    if not dense_positions:
        raise ConfigError("model has no Dense layer")
    head = dense_positions[-1]
    if head == 0:
        raise ConfigError("classifier head is the first layer; no hidden features")
    return head - 1


@dataclass(frozen=True)
class KdeModel:
    model: Model
    bandwidth: float
    layer_index: int
    banks: tuple  # per class: (M_t, D) feature arrays


def _features(model: Model, images, layer_index: int, batch_size: int = 128) -> np.ndarray:
    n = images.shape[0]
    dim = int(np.prod(model.layer_output_shapes()[layer_index]))
    out = np.empty((n, dim))
    for start in range(0, n, batch_size):
        chunk = images[start:start + batch_size]
        _, acts = model.forward(chunk, record=True)
        out[start:start + chunk.shape[0]] = acts[layer_index].reshape(chunk.shape[0], -1)
    return out


def kde_fit(model: Model, dataset, bandwidth: float, max_bank: int | None = None,
            seed: int = 0) -> KdeModel:
    if bandwidth <= 0:
        raise ConfigError(f"bandwidth must be > 0, got {bandwidth}")
    if hasattr(dataset, "images"):
        images, labels = dataset.images, dataset.labels
    else:
        images, labels = dataset
    images = np.asarray(images, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if images.shape[0] == 0:
        raise InputError("empty training set")

    layer = last_hidden_index(model)
    feats = _features(model, images, layer)
    rng = np.random.default_rng(seed)
    banks = []
    for cls in range(model.n_classes):
        rows = np.nonzero(labels == cls)[0]
        if rows.size == 0:
            raise StateError(f"class {cls} has no training samples to bank")
        if max_bank is not None and rows.size > max_bank:
            rows = rng.choice(rows, max_bank, replace=False)
        banks.append(np.ascontiguousarray(feats[rows]))
    return KdeModel(model, float(bandwidth), layer, tuple(banks))


def kernel_density(features: np.ndarray, bank: np.ndarray, bandwidth: float) -> np.ndarray:
    """Mean exp(-squared distance / bandwidth^2) against the bank."""
    d2 = (
        np.einsum("ij,ij->i", features, features)[:, None]
        + np.einsum("ij,ij->i", bank, bank)[None, :]
        - 2.0 * (features @ bank.T)
    )
    np.maximum(d2, 0.0, out=d2)
    return np.exp(-d2 / (bandwidth ** 2)).mean(axis=1)


def kde_score(kde_model: KdeModel, x):
    """Density of x against the bank of its predicted class; lower is malicious."""
    if not isinstance(kde_model, KdeModel):
        raise StateError("kernel density model is not fitted")
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 3
    if single:
        x = x[None]
    preds = predict_batched(kde_model.model, x)
    feats = _features(kde_model.model, x, kde_model.layer_index)
    scores = np.empty(x.shape[0])
    for cls in np.unique(preds):
        bank = kde_model.banks[cls]
        if bank.shape[0] == 0:
            raise StateError(f"no banked features for predicted class {cls}")
        rows = preds == cls
        scores[rows] = kernel_density(feats[rows], bank, kde_model.bandwidth)
    return float(scores[0]) if single else scores
