"""Activation-space detector.

Offline: for each selected activation layer, project the training
activations onto their top principal directions and keep them as a KNN
reference corpus; estimate how often a training sample's per-layer
predicted label switches between consecutive selected layers. Online: a
sample's per-layer label sequence is scored by the log likelihood of its
switch pattern under those probabilities; low likelihood means malicious.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, InputError, StateError
from ..nn.layers import ReLU, Softmax
from ..nn.model import Model

PROB_FLOOR = 1e-4  # keeps the log terms finite when no switches were seen


def activation_layer_indices(model: Model) -> list[int]:
    """Default selection: every post-nonlinearity layer (ReLU and Softmax)."""
    return [i for i, s in enumerate(model.layers) if isinstance(s, (ReLU, Softmax))]


def fit_pca(x: np.ndarray, n_components: int):
    """Mean and top orthonormal principal directions of x (N, D).

    Uses the D x D covariance when D <= N, otherwise the N x N Gram
    factorization. Near-zero-variance directions are dropped.
    """
    mean = x.mean(axis=0)
    xc = x - mean
    n, d = xc.shape
    n_components = min(n_components, d, n)
    if d <= n:
        cov = (xc.T @ xc) / n
        evals, evecs = np.linalg.eigh(cov)
        order = np.argsort(evals)[::-1][:n_components]
        evals = evals[order]
        comps = evecs[:, order]
    else:
        gram = (xc @ xc.T) / n
        evals, evecs = np.linalg.eigh(gram)
        order = np.argsort(evals)[::-1][:n_components]
        evals = evals[order]
        u = evecs[:, order]
        denom = np.sqrt(np.maximum(evals, 1e-300) * n)
        comps = (xc.T @ u) / denom
    if evals.size == 0 or evals[0] <= 1e-18:
        raise StateError("constant activations, no principal directions")
    keep = evals > evals[0] * 1e-9
    return mean, np.ascontiguousarray(comps[:, keep])


def knn_predict(ref: np.ndarray, ref_labels: np.ndarray, queries: np.ndarray,
                k: int, n_classes: int) -> np.ndarray:
    """Brute-force KNN vote. Ties break by smaller summed neighbor distance,
    then smaller label index."""
    m = ref.shape[0]
    k = min(k, m)
    d2 = (
        np.einsum("ij,ij->i", queries, queries)[:, None]
        + np.einsum("ij,ij->i", ref, ref)[None, :]
        - 2.0 * (queries @ ref.T)
    )
    np.maximum(d2, 0.0, out=d2)
    if k < m:
        nn_idx = np.argpartition(d2, k - 1, axis=1)[:, :k]
    else:
        nn_idx = np.broadcast_to(np.arange(m), (queries.shape[0], m))
    nn_d = np.take_along_axis(d2, nn_idx, axis=1)
    nn_lab = ref_labels[nn_idx]

    nq = queries.shape[0]
    counts = np.zeros((nq, n_classes), dtype=np.int64)
    rows = np.repeat(np.arange(nq), k)
    np.add.at(counts, (rows, nn_lab.ravel()), 1)
    best = counts.max(axis=1)
    preds = counts.argmax(axis=1)

    tied = (counts == best[:, None]).sum(axis=1) > 1
    for i in np.nonzero(tied)[0]:
        cands = np.nonzero(counts[i] == best[i])[0]
        sums = [nn_d[i][nn_lab[i] == c].sum() for c in cands]
        preds[i] = cands[int(np.argmin(sums))]  # argmin keeps smaller label on ties
    return preds


@dataclass(frozen=True)
class AsLayerState:
    layer_index: int
    mean: np.ndarray
    components: np.ndarray       # (D, n_comp), orthonormal columns
    ref_projected: np.ndarray    # (M, n_comp)
    ref_labels: np.ndarray


@dataclass(frozen=True)
class AsModel:
    model: Model
    layer_states: tuple
    switch_probs: np.ndarray     # (L-1,), clamped away from {0, 1}
    k: int
    n_components: int

    @property
    def layers(self) -> tuple:
        return tuple(st.layer_index for st in self.layer_states)


def _collect_activations(model: Model, images, layer_indices, batch_size=128):
    shapes = model.layer_output_shapes()
    n = images.shape[0]
    out = [np.empty((n, int(np.prod(shapes[l]))), dtype=np.float64) for l in layer_indices]
    for start in range(0, n, batch_size):
        chunk = images[start:start + batch_size]
        _, acts = model.forward(chunk, record=True)
        for slot, l in enumerate(layer_indices):
            out[slot][start:start + chunk.shape[0]] = acts[l].reshape(chunk.shape[0], -1)
    return out


def _label_sequences(as_model: AsModel, images, batch_size=128) -> np.ndarray:
    """(N, L) per-layer KNN labels for a batch of raw images."""
    acts = _collect_activations(as_model.model, images, as_model.layers, batch_size)
    cols = []
    for st, a in zip(as_model.layer_states, acts):
        proj = (a - st.mean) @ st.components
        cols.append(knn_predict(st.ref_projected, st.ref_labels, proj,
                                as_model.k, as_model.model.n_classes))
    return np.stack(cols, axis=1)


def as_fit(model: Model, dataset, layers=None, n_components: int = 100, k: int = 5,
           max_fit: int = 3000, seed: int = 0) -> AsModel:
    if hasattr(dataset, "images"):
        images, labels = dataset.images, dataset.labels
    else:
        images, labels = dataset
    images = np.asarray(images, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if images.shape[0] == 0:
        raise InputError("empty training set")
    if layers is None:
        layers = activation_layer_indices(model)
    layers = sorted(layers)
    if len(layers) < 2:
        raise ConfigError("activation-space fit needs at least 2 layers "
                          "(no consecutive pair to estimate switches from)")
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")

    if images.shape[0] > max_fit:
        pick = np.random.default_rng(seed).choice(images.shape[0], max_fit, replace=False)
        images, labels = images[pick], labels[pick]

    acts = _collect_activations(model, images, layers)
    states = []
    for l, a in zip(layers, acts):
        try:
            mean, comps = fit_pca(a, n_components)
        except StateError as e:
            raise StateError(f"layer {l}: {e}") from e
        proj = (a - mean) @ comps
        states.append(AsLayerState(l, mean, comps, proj, labels))

    seqs = np.stack([
        knn_predict(st.ref_projected, st.ref_labels, st.ref_projected, k, model.n_classes)
        for st in states
    ], axis=1)
    switch_probs = (seqs[:, 1:] != seqs[:, :-1]).mean(axis=0)
    switch_probs = np.clip(switch_probs, PROB_FLOOR, 1.0 - PROB_FLOOR)
    return AsModel(model, tuple(states), switch_probs, k, n_components)


def as_loglik(as_model: AsModel, x):
    """Log likelihood of a sample's per-layer label switch pattern.
    Lower values indicate malicious samples."""
    if not isinstance(as_model, AsModel) or not as_model.layer_states:
        raise StateError("activation-space model is not fitted")
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 3
    if single:
        x = x[None]
    seqs = _label_sequences(as_model, x)
    return float(sequence_loglik(seqs, as_model.switch_probs)[0]) if single \
        else sequence_loglik(seqs, as_model.switch_probs)


def sequence_loglik(label_seqs: np.ndarray, switch_probs: np.ndarray) -> np.ndarray:
    """Sum over consecutive pairs of log(p_switch) when the labels differ
    and log(1 - p_switch) when they agree."""
    switched = label_seqs[:, 1:] != label_seqs[:, :-1]
    return np.where(switched, np.log(switch_probs), np.log1p(-switch_probs)).sum(axis=1)
