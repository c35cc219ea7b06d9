"""Minibatch SGD training, deterministic given the config seed."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, InputError, TrainingError
from .grads import forward_backward
from .model import Model


@dataclass
class TrainConfig:
    epochs: int
    batch_size: int
    learning_rate: float
    seed: int
    lr_decay: float | None = None  # per-epoch multiplicative factor

    def validate(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if not (self.learning_rate >= 0.0):
            raise ConfigError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.lr_decay is not None and not (0.0 < self.lr_decay <= 1.0):
            raise ConfigError(f"lr_decay must be in (0, 1], got {self.lr_decay}")


def _unpack(dataset):
    if hasattr(dataset, "images"):
        return dataset.images, dataset.labels
    images, labels = dataset
    return np.asarray(images), np.asarray(labels)


def train_sgd(model: Model, dataset, config: TrainConfig):
    """Train a copy of the model; returns (trained model, per-epoch history)."""
    config.validate()
    images, labels = _unpack(dataset)
    n = images.shape[0]
    if n == 0:
        raise InputError("training dataset is empty")

    weights = model.copy_weights()
    work = model.with_weights(weights)
    rng = np.random.default_rng(config.seed)

    history = []
    lr = config.learning_rate
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        total_loss = 0.0
        n_correct = 0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            xb = images[idx]
            yb = labels[idx]
            loss, grads, _, probs = forward_backward(work, xb, yb, rng=rng, train_mode=True)
            if not np.isfinite(loss):
                raise TrainingError(
                    f"training diverged at epoch {epoch}: loss={loss}", epoch=epoch)
            total_loss += loss * len(idx)
            n_correct += int((probs.argmax(axis=1) == yb).sum())
            for wb, g in zip(weights, grads):
                if g is None:
                    continue
                wb[0] -= lr * g[0]
                wb[1] -= lr * g[1]
        history.append({
            "epoch": epoch,
            "loss": total_loss / n,
            "accuracy": n_correct / n,
            "learning_rate": lr,
        })
        if config.lr_decay is not None:
            lr *= config.lr_decay

    # weights lists are shared with `work`; hand back a fresh handle
    return work.with_weights(weights), history


def predict_batched(model: Model, images, batch_size: int = 256) -> np.ndarray:
    """Argmax predictions in memory-bounded chunks."""
    out = np.empty(images.shape[0], dtype=np.int64)
    for start in range(0, images.shape[0], batch_size):
        out[start:start + batch_size] = model.predict(images[start:start + batch_size])
    return out


def evaluate_accuracy(model: Model, dataset, batch_size: int = 256) -> float:
    images, labels = _unpack(dataset)
    if images.shape[0] == 0:
        raise InputError("empty dataset")
    preds = predict_batched(model, images, batch_size)
    return float((preds == labels).mean())
