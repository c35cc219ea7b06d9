"""Layer specifications and shape propagation for the feed-forward engine."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from ..errors import ConfigError


@dataclass(frozen=True)
class Dense:
    in_dim: int
    out_dim: int


@dataclass(frozen=True)
class Conv2D:
    kernel_h: int
    kernel_w: int
    c_in: int
    c_out: int
    stride: int = 1
    padding: str = "same"  # "same" or "valid"


@dataclass(frozen=True)
class ReLU:
    pass


@dataclass(frozen=True)
class MaxPool2x2:
    pass


@dataclass(frozen=True)
class Flatten:
    pass


@dataclass(frozen=True)
class Dropout:
    rate: float


@dataclass(frozen=True)
class Softmax:
    pass


LayerSpec = Union[Dense, Conv2D, ReLU, MaxPool2x2, Flatten, Dropout, Softmax]

_NAMES = {
    Dense: "dense", Conv2D: "conv2d", ReLU: "relu", MaxPool2x2: "maxpool2x2",
    Flatten: "flatten", Dropout: "dropout", Softmax: "softmax",
}


def layer_name(spec: LayerSpec) -> str:
    return _NAMES[type(spec)]


def validate_layer(spec: LayerSpec) -> None:
    if isinstance(spec, Dense):
        if spec.in_dim < 1 or spec.out_dim < 1:
            raise ConfigError(f"dense dims must be positive, got {spec}")
    elif isinstance(spec, Conv2D):
        if min(spec.kernel_h, spec.kernel_w, spec.c_in, spec.c_out, spec.stride) < 1:
            raise ConfigError(f"conv2d parameters must be positive, got {spec}")
        if spec.padding not in ("same", "valid"):
            raise ConfigError(f"conv2d padding must be 'same' or 'valid', got {spec.padding!r}")
    elif isinstance(spec, Dropout):
        if not (0.0 <= spec.rate < 1.0):
            raise ConfigError(f"dropout rate must be in [0, 1), got {spec.rate}")


def output_shape(spec: LayerSpec, in_shape: tuple) -> tuple:
    """Propagate a feature shape (H, W, C) or (D,) through one layer."""
    if isinstance(spec, Conv2D):
        if len(in_shape) != 3:
            raise ConfigError(f"conv2d needs an image input, got shape {in_shape}")
        h, w, c = in_shape
        if c != spec.c_in:
            raise ConfigError(f"conv2d expects {spec.c_in} channels, input has {c}")
        if spec.padding == "same":
            oh = -(-h // spec.stride)
            ow = -(-w // spec.stride)
        else:
            oh = (h - spec.kernel_h) // spec.stride + 1
            ow = (w - spec.kernel_w) // spec.stride + 1
        if oh < 1 or ow < 1:
            raise ConfigError(f"conv2d kernel {spec.kernel_h}x{spec.kernel_w} too large for input {in_shape}")
        return (oh, ow, spec.c_out)
    if isinstance(spec, MaxPool2x2):
        if len(in_shape) != 3:
            raise ConfigError(f"maxpool needs an image input, got shape {in_shape}")
        h, w, c = in_shape
        if h < 2 or w < 2:
            raise ConfigError(f"maxpool window does not fit input {in_shape}")
        return (h // 2, w // 2, c)
    if isinstance(spec, Flatten):
        d = 1
        for x in in_shape:
            d *= x
        return (d,)
    if isinstance(spec, Dense):
        if len(in_shape) != 1:
            raise ConfigError(f"dense needs a flat input, got shape {in_shape} (missing Flatten?)")
        if in_shape[0] != spec.in_dim:
            raise ConfigError(f"dense expects {spec.in_dim} inputs, got {in_shape[0]}")
        return (spec.out_dim,)
    if isinstance(spec, Softmax):
        if len(in_shape) != 1:
            raise ConfigError(f"softmax needs a flat input, got shape {in_shape}")
        return in_shape
    # ReLU / Dropout
    return in_shape


def spec_to_dict(spec: LayerSpec) -> dict:
    d = {"type": layer_name(spec)}
    if isinstance(spec, Dense):
        d.update(in_dim=spec.in_dim, out_dim=spec.out_dim)
    elif isinstance(spec, Conv2D):
        d.update(kernel_h=spec.kernel_h, kernel_w=spec.kernel_w, c_in=spec.c_in,
                 c_out=spec.c_out, stride=spec.stride, padding=spec.padding)
    elif isinstance(spec, Dropout):
        d.update(rate=spec.rate)
    return d


def spec_from_dict(d: dict) -> LayerSpec:
    t = d.get("type")
    try:
        if t == "dense":
            return Dense(int(d["in_dim"]), int(d["out_dim"]))
        if t == "conv2d":
            return Conv2D(int(d["kernel_h"]), int(d["kernel_w"]), int(d["c_in"]),
                          int(d["c_out"]), int(d["stride"]), str(d["padding"]))
        if t == "relu":
            return ReLU()
        if t == "maxpool2x2":
            return MaxPool2x2()
        if t == "flatten":
            return Flatten()
        if t == "dropout":
            return Dropout(float(d["rate"]))
        if t == "softmax":
            return Softmax()
    except KeyError as e:
        raise ConfigError(f"layer spec {d!r} missing field {e}") from e
    raise ConfigError(f"unknown layer type {t!r}")
