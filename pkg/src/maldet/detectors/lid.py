"""Local intrinsic dimensionality detector.

The maximum-likelihood LID estimate at a point, given its k nearest
neighbor distances r_1 <= ... <= r_k within a reference pool, is

    -( (1/k) * sum_i log(r_i / r_k) )^(-1)

High values flag neighborhoods whose distance profile looks unlike the
training data's. Scores aggregate (arithmetic mean) over several late
hidden layers; pools are class-conditional on the predicted label.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, InputError, StateError
from ..nn.layers import Dense, MaxPool2x2, ReLU
from ..nn.model import Model
from ..nn.train import predict_batched

LID_CLAMP = 1e6  # stands in for +inf when all k distances coincide


def default_lid_layers(model: Model, n_layers: int = 3) -> list[int]:
    """Last `n_layers` hidden block outputs: pooling outputs plus ReLUs that
    follow a Dense layer (the classifier head's input side of the net)."""
    idxs = []
    for i, spec in enumerate(model.layers):
        if isinstance(spec, MaxPool2x2):
            idxs.append(i)
        elif isinstance(spec, ReLU) and i > 0 and isinstance(model.layers[i - 1], Dense):
            idxs.append(i)
    if not idxs:
        idxs = [i for i, s in enumerate(model.layers) if isinstance(s, ReLU)]
    if not idxs:
        raise ConfigError("model exposes no hidden activation layers")
    return idxs[-n_layers:]


@dataclass(frozen=True)
class LidConfig:
    k: int = 20
    layers: tuple | None = None     # None: default_lid_layers at fit time
    pool_cap: int = 1000
    seed: int = 0

    def validate(self):
        if self.k < 2:
            raise ConfigError(f"k must be >= 2, got {self.k}")
        if self.pool_cap < 1:
            raise ConfigError(f"pool_cap must be >= 1, got {self.pool_cap}")


@dataclass(frozen=True)
class LidState:
    model: Model
    k: int
    layers: tuple
    pools: tuple  # [class][layer slot] -> (M, D) float32 feature arrays
    config: LidConfig = field(default=None)


def lid_from_distances(distances: np.ndarray, k: int) -> float:
    """MLE from one sample's (unsorted, positive) neighbor distances."""
    distances = np.asarray(distances, dtype=np.float64)
    distances = distances[distances > 0.0]
    if distances.size < k:
        return 0.0  # coincides with the pool; maximally benign
    r = np.sort(distances)[:k]
    mean_log = np.log(r / r[-1]).mean()
    if mean_log == 0.0:
        return LID_CLAMP
    return float(min(-1.0 / mean_log, LID_CLAMP))


def _collect_features(model: Model, images, layer_indices, batch_size=128):
    shapes = model.layer_output_shapes()
    n = images.shape[0]
    out = [np.empty((n, int(np.prod(shapes[l]))), dtype=np.float32) for l in layer_indices]
    for start in range(0, n, batch_size):
        chunk = images[start:start + batch_size]
        _, acts = model.forward(chunk, record=True)
        for slot, l in enumerate(layer_indices):
            out[slot][start:start + chunk.shape[0]] = acts[l].reshape(chunk.shape[0], -1)
    return out


def lid_fit(model: Model, dataset, config: LidConfig = LidConfig()) -> LidState:
    config.validate()
    if hasattr(dataset, "images"):
        images, labels = dataset.images, dataset.labels
    else:
        images, labels = dataset
    images = np.asarray(images, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if images.shape[0] == 0:
        raise InputError("empty training set")

    layers = tuple(config.layers) if config.layers is not None \
        else tuple(default_lid_layers(model))
    rng = np.random.default_rng(config.seed)
    picked_rows = []
    for cls in range(model.n_classes):
        rows = np.nonzero(labels == cls)[0]
        if rows.size <= config.k:
            raise ConfigError(
                f"class {cls} pool has {rows.size} samples, need more than k={config.k}")
        if rows.size > config.pool_cap:
            rows = rng.choice(rows, config.pool_cap, replace=False)
        picked_rows.append(np.sort(rows))

    all_rows = np.concatenate(picked_rows)
    feats = _collect_features(model, images[all_rows], layers)
    pools = []
    offset = 0
    for rows in picked_rows:
        pools.append(tuple(f[offset:offset + rows.size] for f in feats))
        offset += rows.size
    return LidState(model, config.k, layers, tuple(pools), config)


def _pool_distances(queries: np.ndarray, pool: np.ndarray) -> np.ndarray:
    """(N, M) Euclidean distances, computed in float64."""
    pool64 = pool.astype(np.float64)
    d2 = (
        np.einsum("ij,ij->i", queries, queries)[:, None]
        + np.einsum("ij,ij->i", pool64, pool64)[None, :]
        - 2.0 * (queries @ pool64.T)
    )
    np.maximum(d2, 0.0, out=d2)
    return np.sqrt(d2)


def lid_score(lid_state: LidState, x):
    """Mean LID over the selected layers; higher is malicious."""
    if not isinstance(lid_state, LidState):
        raise StateError("LID state is not fitted")
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 3
    if single:
        x = x[None]
    model = lid_state.model
    preds = predict_batched(model, x)
    feats = _collect_features(model, x, lid_state.layers)

    k = lid_state.k
    scores = np.zeros(x.shape[0])
    for cls in np.unique(preds):
        rows = np.nonzero(preds == cls)[0]
        per_layer = np.empty((rows.size, len(lid_state.layers)))
        for slot in range(len(lid_state.layers)):
            pool = lid_state.pools[cls][slot]
            if pool.shape[0] <= k:
                raise ConfigError(
                    f"pool for class {cls} has {pool.shape[0]} points, need more than k={k}")
            dists = _pool_distances(feats[slot][rows].astype(np.float64), pool)
            scale = 1e-7 * (1.0 + np.abs(dists).max(axis=1, keepdims=True))
            dists[dists <= scale] = 0.0  # treat float32-level residue as coincidence
            for i in range(rows.size):
                per_layer[i, slot] = lid_from_distances(dists[i], k)
        scores[rows] = per_layer.mean(axis=1)
    return float(scores[0]) if single else scores
