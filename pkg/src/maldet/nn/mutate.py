"""Gaussian fuzzing of fully-connected weights.

Each Dense layer independently receives additive i.i.d. Gaussian noise
with mean = mean(W) * mean_factor and variance = max|W| * var_factor,
both computed from that layer's own weight matrix. Biases and non-Dense
layers are untouched; the input model is never modified.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError
from .layers import Dense
from .model import Model


def mutate_fc_gaussian(model: Model, mean_factor: float, var_factor: float, seed) -> Model:
    if var_factor < 0:
        raise ConfigError(f"var_factor must be >= 0, got {var_factor}")
    if not any(isinstance(s, Dense) for s in model.layers):
        raise ConfigError("model has no Dense layer to mutate")
    rng = np.random.default_rng(seed)
    new_weights = []
    for spec, wb in zip(model.layers, model.weights):
        if wb is None:
            new_weights.append(None)
        elif isinstance(spec, Dense):
            w, b = wb
            mu = w.mean() * mean_factor
            sigma = np.sqrt(np.abs(w).max() * var_factor)
            noise = rng.normal(mu, sigma, w.shape)
            new_weights.append((w + noise, b.copy()))
        else:
            new_weights.append((wb[0].copy(), wb[1].copy()))
    return model.with_weights(new_weights)
