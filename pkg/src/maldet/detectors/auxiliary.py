"""Auxiliary detectors: dropout uncertainty, region voting, feature squeezing.

These are the lighter-weight comparison methods; each is a pure function
of the model and the sample, no offline fit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ..errors import ConfigError, InputError
from ..nn.layers import Dense
from ..nn.model import Model
from ..nn.train import predict_batched


def bu_dropout_score(model: Model, x, rate: float, n_passes: int, seed: int):
    """Fraction of stochastic dropout passes whose prediction leaves the
    deterministic one. Dropout masks the input of every Dense layer.
    For trigger detection lower is malicious (stamped samples are robust)."""
    if not (0.0 <= rate < 1.0):
        raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
    if n_passes < 1:
        raise ConfigError(f"n_passes must be >= 1, got {n_passes}")
    if not any(isinstance(s, Dense) for s in model.layers):
        raise ConfigError("model has no Dense layer to drop out")
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 3
    if single:
        x = x[None]
    base = predict_batched(model, x)
    rng = np.random.default_rng(seed)
    changed = np.zeros(x.shape[0], dtype=np.int64)
    for _ in range(n_passes):
        out, _ = model.forward(x, rng=rng, fc_input_dropout=rate)
        changed += out.argmax(axis=1) != base
    scores = changed / n_passes
    return float(scores[0]) if single else scores


def region_based_predict(model: Model, x, radius: float, m: int, seed: int):
    """Vote over m points drawn uniformly from the L-inf ball around x
    (clipped to [0,1]). Returns (majority label, fraction agreeing with
    the point prediction)."""
    if radius < 0:
        raise ConfigError(f"radius must be >= 0, got {radius}")
    if m < 1:
        raise ConfigError(f"m must be >= 1, got {m}")
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3:
        raise InputError(f"region vote takes one sample (H, W, C), got shape {x.shape}")
    rng = np.random.default_rng(seed)
    noise = rng.uniform(-radius, radius, size=(m,) + x.shape)
    cloud = np.clip(x[None] + noise, 0.0, 1.0)
    preds = predict_batched(model, cloud)
    point = int(model.predict(x)[0])
    majority = int(np.bincount(preds, minlength=model.n_classes).argmax())
    agreement = float((preds == point).mean())
    return majority, agreement


def region_agreement_batch(model: Model, images, radius: float, m: int, seed: int):
    """Per-sample agreement fractions; seeds derive per sample for determinism."""
    images = np.asarray(images, dtype=np.float64)
    seeds = np.random.SeedSequence(seed).spawn(images.shape[0])
    out = np.empty(images.shape[0])
    for i in range(images.shape[0]):
        _, out[i] = region_based_predict(model, images[i], radius, m, seeds[i])
    return out


@dataclass(frozen=True)
class MedianFilterSqueeze:
    width: int = 2

    def validate(self):
        if self.width != 2 and (self.width < 3 or self.width % 2 == 0):
            raise ConfigError(f"median filter width must be 2 or odd >= 3, got {self.width}")

    def __call__(self, images: np.ndarray) -> np.ndarray:
        out = np.empty_like(images)
        for i in range(images.shape[0]):
            out[i] = ndimage.median_filter(images[i], size=(self.width, self.width, 1),
                                           mode="reflect")
        return out


@dataclass(frozen=True)
class BitDepthSqueeze:
    bits: int = 4

    def validate(self):
        if not (1 <= self.bits <= 8):
            raise ConfigError(f"bit depth must be in [1, 8], got {self.bits}")

    def __call__(self, images: np.ndarray) -> np.ndarray:
        levels = float(2 ** self.bits - 1)
        return np.round(images * levels) / levels


def squeeze_score(model: Model, x, squeezer):
    """L1 distance between the class-probability vectors of x and its
    squeezed version; large movement flags fragile (adversarial) inputs."""
    squeezer.validate()
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 3
    if single:
        x = x[None]
    squeezed = np.clip(squeezer(x), 0.0, 1.0)
    p = np.empty((x.shape[0], model.n_classes))
    q = np.empty_like(p)
    for start in range(0, x.shape[0], 256):
        p[start:start + 256] = model.predict_proba(x[start:start + 256])
        q[start:start + 256] = model.predict_proba(squeezed[start:start + 256])
    scores = np.abs(p - q).sum(axis=1)
    return float(scores[0]) if single else scores
