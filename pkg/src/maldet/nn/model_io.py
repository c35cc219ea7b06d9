"""Model serialization: layer spec table + float64 weight blocks.

Round trips are bit-exact; the loader cross-checks every weight block
against the declared layer spec and names the offending layer on mismatch.
"""

from __future__ import annotations

import numpy as np

from .. import container
from ..errors import DataFormatError
from .layers import spec_from_dict, spec_to_dict, layer_name
from .model import Model, weight_shapes
from .layers import Conv2D, Dense

KIND = "MODEL"
VERSION = 1


def save_model(model: Model, path) -> None:
    meta = {
        "input_shape": list(model.input_shape),
        "n_classes": model.n_classes,
        "seed": model.seed,
        "layers": [spec_to_dict(s) for s in model.layers],
    }
    arrays = {}
    for i, wb in enumerate(model.weights):
        if wb is None:
            continue
        arrays[f"w{i}"] = np.asarray(wb[0], dtype=np.float64)
        arrays[f"b{i}"] = np.asarray(wb[1], dtype=np.float64)
    container.write(path, KIND, VERSION, meta, arrays)


def load_model(path) -> Model:
    version, meta, arrays = container.read(path, KIND)
    if version != VERSION:
        raise DataFormatError(f"{path}: unsupported model format version {version}")
    layers = [spec_from_dict(d) for d in meta["layers"]]
    weights = []
    for i, spec in enumerate(layers):
        if not isinstance(spec, (Dense, Conv2D)):
            weights.append(None)
            continue
        try:
            w, b = arrays[f"w{i}"], arrays[f"b{i}"]
        except KeyError:
            raise DataFormatError(
                f"{path}: missing weight block for layer {i} ({layer_name(spec)})")
        exp_w, exp_b = weight_shapes(spec)
        if tuple(w.shape) != exp_w or tuple(b.shape) != exp_b:
            raise DataFormatError(
                f"{path}: layer {i} ({layer_name(spec)}) declares weights "
                f"{exp_w}/{exp_b} but file holds {tuple(w.shape)}/{tuple(b.shape)}")
        weights.append((w, b))
    return Model(layers, weights, tuple(meta["input_shape"]), meta["n_classes"],
                 seed=meta.get("seed"))
