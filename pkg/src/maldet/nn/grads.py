"""Backpropagation: weight gradients, input gradient and cross-entropy loss.

The loss is mean softmax cross-entropy with log-sum-exp stabilization,
taken at the pre-softmax logits, so the model must end with a Softmax
layer. One forward pass caches per-layer inputs; the backward pass walks
the stack in reverse.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError, InputError
from . import backend
from .layers import Conv2D, Dense, Dropout, Flatten, MaxPool2x2, ReLU, Softmax
from .model import Model, conv_same_pads


def _check_labels(labels, n, n_classes):
    labels = np.asarray(labels)
    if labels.shape != (n,):
        raise InputError(f"labels shape {labels.shape} does not match batch size {n}")
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise InputError(f"labels must lie in [0, {n_classes}), got range "
                         f"[{labels.min()}, {labels.max()}]")
    return labels.astype(np.int64)


def forward_backward(model: Model, x, labels, rng=None, train_mode=False):
    """Returns (loss, grads, dx, probs); grads aligns with model.weights."""
    if not model.layers or not isinstance(model.layers[-1], Softmax):
        raise ConfigError("gradient computation requires a final Softmax layer")
    x = model._check_batch(x)
    n = x.shape[0]
    labels = _check_labels(labels, n, model.n_classes)
    kern = backend.kernels()

    # forward, caching what the backward pass needs
    cache = []
    a = x
    for spec, wb in zip(model.layers[:-1], model.weights[:-1]):
        if isinstance(spec, Conv2D):
            if spec.padding == "same":
                pads = conv_same_pads(spec, a.shape[1], a.shape[2])
                xp = np.pad(a, ((0, 0), pads[:2], pads[2:], (0, 0))) if any(pads) else a
            else:
                pads = (0, 0, 0, 0)
                xp = a
            a = kern.conv2d_forward(xp, wb[0], wb[1], spec.stride)
            cache.append((spec, wb, (xp, pads)))
        elif isinstance(spec, MaxPool2x2):
            h, w = a.shape[1], a.shape[2]
            a, idx = kern.maxpool2x2_forward(a)
            cache.append((spec, None, (idx, h, w)))
        elif isinstance(spec, Flatten):
            cache.append((spec, None, a.shape))
            a = a.reshape(n, -1)
        elif isinstance(spec, Dense):
            cache.append((spec, wb, a))
            a = a @ wb[0] + wb[1]
        elif isinstance(spec, ReLU):
            mask = a > 0
            a = a * mask
            cache.append((spec, None, mask))
        elif isinstance(spec, Dropout):
            if train_mode and rng is not None and spec.rate > 0.0:
                keep = 1.0 - spec.rate
                mask = (rng.random(a.shape) < keep) / keep
                a = a * mask
                cache.append((spec, None, mask))
            else:
                cache.append((spec, None, None))
        else:
            raise ConfigError("softmax is only supported as the final layer")

    logits = a
    zmax = logits.max(axis=1, keepdims=True)
    lse = zmax[:, 0] + np.log(np.exp(logits - zmax).sum(axis=1))
    loss = float(np.mean(lse - logits[np.arange(n), labels]))
    probs = np.exp(logits - lse[:, None])

    dz = probs.copy()
    dz[np.arange(n), labels] -= 1.0
    dz /= n

    grads = [None] * len(model.weights)
    dout = dz
    for i in range(len(cache) - 1, -1, -1):
        spec, wb, aux = cache[i]
        if isinstance(spec, Dense):
            a_in = aux
            grads[i] = (a_in.T @ dout, dout.sum(axis=0))
            dout = dout @ wb[0].T
        elif isinstance(spec, Conv2D):
            xp, (pt, pb, pl, pr) = aux
            dout = np.ascontiguousarray(dout)
            dw = kern.conv2d_backward_dw(xp, dout, spec.kernel_h, spec.kernel_w, spec.stride)
            db = dout.sum(axis=(0, 1, 2))
            grads[i] = (dw, db)
            dxp = kern.conv2d_backward_dx(wb[0], dout, spec.stride, xp.shape[1], xp.shape[2])
            dout = dxp[:, pt:xp.shape[1] - pb, pl:xp.shape[2] - pr, :]
        elif isinstance(spec, MaxPool2x2):
            idx, h, w = aux
            dout = kern.maxpool2x2_backward(np.ascontiguousarray(dout), idx, h, w)
        elif isinstance(spec, Flatten):
            dout = dout.reshape(aux)
        elif isinstance(spec, ReLU):
            dout = dout * aux
        elif isinstance(spec, Dropout):
            if aux is not None:
                dout = dout * aux
    return loss, grads, dout, probs


def gradients(model: Model, x, labels):
    """Spec-facing wrapper: (weight gradients, input gradient, loss)."""
    loss, grads, dx, _ = forward_backward(model, x, labels)
    return grads, dx, loss
