"""Malicious-example generation: gradient-sign perturbations and trigger stamping.

Both attack kinds produce an AttackBatch: the perturbed images plus the
source labels, the intended outcome and a snapshot of the generation
parameters. Batches serialize through the shared container format.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import container
from .data.dataset import LabeledDataset
from .data.trigger import TriggerSpec, stamp_trigger
from .errors import ConfigError, DataFormatError, InputError
from .nn.grads import forward_backward
from .nn.model import Model
from .nn.train import predict_batched

KIND_AE = "ae"
KIND_BE = "be"

_ARCHIVE_KIND = "ATKBATCH"
_ARCHIVE_VERSION = 1


@dataclass(frozen=True)
class AttackBatch:
    examples: np.ndarray        # (N, H, W, C) in [0, 1]
    source_labels: np.ndarray   # (N,) original labels
    intended_labels: np.ndarray  # (N,) target label for BEs, -1 for AEs
    kind: str                   # "ae" or "be"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in (KIND_AE, KIND_BE):
            raise ConfigError(f"attack kind must be 'ae' or 'be', got {self.kind!r}")
        examples = np.asarray(self.examples, dtype=np.float64)
        if examples.size and (examples.min() < 0.0 or examples.max() > 1.0):
            raise InputError("attack examples must lie in [0, 1]")
        object.__setattr__(self, "examples", examples)
        object.__setattr__(self, "source_labels", np.asarray(self.source_labels, dtype=np.int64))
        object.__setattr__(self, "intended_labels", np.asarray(self.intended_labels, dtype=np.int64))

    def __len__(self) -> int:
        return self.examples.shape[0]


def fgsm(model: Model, images, labels, epsilon: float, batch_size: int = 256):
    """One-step gradient-sign attack, keeping only samples that were
    correctly classified before and are misclassified after.

    Returns (AttackBatch, yield_rate) where yield_rate is the retained
    fraction of the correctly-classified inputs.
    """
    if epsilon < 0:
        raise ConfigError(f"epsilon must be >= 0, got {epsilon}")
    images = np.asarray(images, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if images.shape[0] != labels.shape[0]:
        raise InputError("image and label counts differ")

    preds = predict_batched(model, images, batch_size)
    correct = preds == labels
    xs = images[correct]
    ys = labels[correct]

    adv = np.empty_like(xs)
    for start in range(0, xs.shape[0], batch_size):
        xb = xs[start:start + batch_size]
        yb = ys[start:start + batch_size]
        _, _, dx, _ = forward_backward(model, xb, yb)
        adv[start:start + batch_size] = np.clip(xb + epsilon * np.sign(dx), 0.0, 1.0)

    adv_preds = predict_batched(model, adv, batch_size) if len(adv) else np.empty(0, np.int64)
    fooled = adv_preds != ys
    kept = adv[fooled]
    yield_rate = float(fooled.mean()) if len(xs) else 0.0

    batch = AttackBatch(
        examples=kept,
        source_labels=ys[fooled],
        intended_labels=np.full(fooled.sum(), -1, dtype=np.int64),
        kind=KIND_AE,
        params={"epsilon": epsilon, "n_input": int(images.shape[0]),
                "n_correct": int(correct.sum()), "yield_rate": yield_rate},
    )
    return batch, yield_rate


def make_backdoor_examples(test_set: LabeledDataset, trigger: TriggerSpec,
                           target_label: int) -> AttackBatch:
    """Stamp every test image whose label differs from the target."""
    if not (0 <= target_label < test_set.n_classes):
        raise ConfigError(f"target_label must be in [0, {test_set.n_classes})")
    keep = test_set.labels != target_label
    stamped = stamp_trigger(test_set.images[keep], trigger)
    n = stamped.shape[0]
    return AttackBatch(
        examples=stamped,
        source_labels=test_set.labels[keep],
        intended_labels=np.full(n, target_label, dtype=np.int64),
        kind=KIND_BE,
        params={"target_label": int(target_label),
                "trigger_shape": list(trigger.pattern.shape)},
    )


def attack_success_rate(model: Model, batch: AttackBatch, batch_size: int = 256) -> float:
    """BE: fraction predicted as the target; AE: fraction predicted off-source."""
    if len(batch) == 0:
        raise InputError("attack batch is empty")
    preds = predict_batched(model, batch.examples, batch_size)
    if batch.kind == KIND_BE:
        return float((preds == batch.intended_labels).mean())
    return float((preds != batch.source_labels).mean())


def save_attack_batch(batch: AttackBatch, path) -> None:
    meta = {"kind": batch.kind, "params": batch.params, "n": len(batch)}
    container.write(path, _ARCHIVE_KIND, _ARCHIVE_VERSION, meta, {
        "examples": batch.examples,
        "source_labels": batch.source_labels,
        "intended_labels": batch.intended_labels,
    })


def load_attack_batch(path) -> AttackBatch:
    version, meta, arrays = container.read(path, _ARCHIVE_KIND)
    if version != _ARCHIVE_VERSION:
        raise DataFormatError(f"{path}: unsupported attack batch version {version}")
    return AttackBatch(arrays["examples"], arrays["source_labels"],
                       arrays["intended_labels"], meta["kind"], meta["params"])
