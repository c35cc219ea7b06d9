"""Feed-forward model: layer stack, weights, forward pass with activation capture.

Images are NHWC float64. The forward pass is deterministic for a fixed
backend; stochastic behaviour (training dropout, dropout on Dense inputs
for uncertainty scoring) only happens when the caller passes an rng.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError
from . import backend
from .layers import (
    Conv2D, Dense, Dropout, Flatten, LayerSpec, MaxPool2x2, ReLU, Softmax,
    layer_name, output_shape, validate_layer,
)


def softmax_rows(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def conv_same_pads(spec: Conv2D, h: int, w: int) -> tuple[int, int, int, int]:
    """TF-style 'same' padding amounts (top, bottom, left, right)."""
    oh = -(-h // spec.stride)
    ow = -(-w // spec.stride)
    pad_h = max((oh - 1) * spec.stride + spec.kernel_h - h, 0)
    pad_w = max((ow - 1) * spec.stride + spec.kernel_w - w, 0)
    return pad_h // 2, pad_h - pad_h // 2, pad_w // 2, pad_w - pad_w // 2


def pad_for_conv(x: np.ndarray, spec: Conv2D) -> np.ndarray:
    if spec.padding == "valid":
        return x
    pt, pb, pl, pr = conv_same_pads(spec, x.shape[1], x.shape[2])
    if pt == pb == pl == pr == 0:
        return x
    return np.pad(x, ((0, 0), (pt, pb), (pl, pr), (0, 0)))


class Model:
    """Immutable layer stack with weights. Operations return new models."""

    def __init__(self, layers, weights, input_shape, n_classes, seed=None):
        self.layers: tuple[LayerSpec, ...] = tuple(layers)
        self.weights = list(weights)
        self.input_shape = tuple(input_shape)
        self.n_classes = int(n_classes)
        self.seed = seed
        self._validate()

    def _validate(self):
        if len(self.weights) != len(self.layers):
            raise ConfigError("weights list must align with layers list")
        shape = self.input_shape
        for i, spec in enumerate(self.layers):
            validate_layer(spec)
            shape = output_shape(spec, shape)
            wb = self.weights[i]
            if isinstance(spec, (Dense, Conv2D)):
                if wb is None:
                    raise ConfigError(f"layer {i} ({layer_name(spec)}) missing weights")
                w, b = wb
                exp_w, exp_b = weight_shapes(spec)
                if tuple(w.shape) != exp_w or tuple(b.shape) != exp_b:
                    raise ConfigError(
                        f"layer {i} ({layer_name(spec)}) weight shapes {w.shape}/{b.shape} "
                        f"do not match spec {exp_w}/{exp_b}")
            elif wb is not None:
                raise ConfigError(f"layer {i} ({layer_name(spec)}) takes no weights")
        if shape != (self.n_classes,):
            raise ConfigError(
                f"model output shape {shape} does not match class count {self.n_classes}")

    def forward(self, x, record=False, rng=None, train_mode=False, fc_input_dropout=0.0):
        """Run the stack; returns (output, activations or None).

        record=True captures one tensor per layer, in layer order.
        fc_input_dropout applies inverted dropout to the input of every
        Dense layer when an rng is supplied (uncertainty scoring).
        Dropout layers are active only with train_mode and an rng.
        """
        x = self._check_batch(x)
        kern = backend.kernels()
        acts = [] if record else None
        a = x
        for spec, wb in zip(self.layers, self.weights):
            if isinstance(spec, Conv2D):
                w, b = wb
                a = kern.conv2d_forward(pad_for_conv(a, spec), w, b, spec.stride)
            elif isinstance(spec, MaxPool2x2):
                a, _ = kern.maxpool2x2_forward(a)
            elif isinstance(spec, Flatten):
                a = a.reshape(a.shape[0], -1)
            elif isinstance(spec, Dense):
                if fc_input_dropout > 0.0 and rng is not None:
                    keep = 1.0 - fc_input_dropout
                    mask = rng.random(a.shape) < keep
                    a = a * mask / keep
                w, b = wb
                a = a @ w + b
            elif isinstance(spec, ReLU):
                a = np.maximum(a, 0.0)
            elif isinstance(spec, Dropout):
                if train_mode and rng is not None and spec.rate > 0.0:
                    keep = 1.0 - spec.rate
                    mask = rng.random(a.shape) < keep
                    a = a * mask / keep
                # identity at inference
            elif isinstance(spec, Softmax):
                a = softmax_rows(a)
            if record:
                acts.append(a)
        return a, acts

    def predict_proba(self, x) -> np.ndarray:
        out, _ = self.forward(x)
        return out

    def predict(self, x) -> np.ndarray:
        return np.argmax(self.predict_proba(x), axis=1)

    def with_weights(self, new_weights) -> "Model":
        return Model(self.layers, new_weights, self.input_shape, self.n_classes, self.seed)

    def copy_weights(self):
        # lists, not tuples: the trainer updates entries in place
        return [None if wb is None else [wb[0].copy(), wb[1].copy()] for wb in self.weights]

    def n_parameters(self) -> int:
        return sum(w.size + b.size for wb in self.weights if wb is not None for w, b in [wb])

    def layer_output_shapes(self) -> list[tuple]:
        shapes = []
        shape = self.input_shape
        for spec in self.layers:
            shape = output_shape(spec, shape)
            shapes.append(shape)
        return shapes

    def _check_batch(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape == self.input_shape:
            x = x[None]
        if x.ndim != len(self.input_shape) + 1 or x.shape[1:] != self.input_shape:
            raise ConfigError(
                f"input shape {x.shape} incompatible with model input {self.input_shape}")
        return np.ascontiguousarray(x)


def weight_shapes(spec: LayerSpec) -> tuple[tuple, tuple]:
    if isinstance(spec, Dense):
        return (spec.in_dim, spec.out_dim), (spec.out_dim,)
    if isinstance(spec, Conv2D):
        return (spec.kernel_h, spec.kernel_w, spec.c_in, spec.c_out), (spec.c_out,)
    raise ConfigError(f"{layer_name(spec)} has no weights")


def init_model(layers, input_shape, n_classes, seed) -> Model:
    """Seeded uniform [-s, s] init with s = sqrt(6 / (fan_in + fan_out))."""
    rng = np.random.default_rng(seed)
    weights = []
    for spec in layers:
        if isinstance(spec, Dense):
            fan_in, fan_out = spec.in_dim, spec.out_dim
        elif isinstance(spec, Conv2D):
            fan_in = spec.kernel_h * spec.kernel_w * spec.c_in
            fan_out = spec.kernel_h * spec.kernel_w * spec.c_out
        else:
            weights.append(None)
            continue
        s = np.sqrt(6.0 / (fan_in + fan_out))
        w_shape, b_shape = weight_shapes(spec)
        weights.append((rng.uniform(-s, s, w_shape), np.zeros(b_shape)))
    return Model(layers, weights, input_shape, n_classes, seed=seed)
