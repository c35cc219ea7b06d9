"""Pure-numpy fallback kernels (im2col convolution, reshape pooling).

Same call signatures as kernels_numba. Inputs are float64 C-contiguous;
convolution inputs arrive already padded (valid convolution only here).
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import as_strided


def _patch_view(xp: np.ndarray, kh: int, kw: int, stride: int) -> np.ndarray:
    b, h, w, c = xp.shape
    oh = (h - kh) // stride + 1
    ow = (w - kw) // stride + 1
    sb, sh, sw, sc = xp.strides
    return as_strided(
        xp,
        shape=(b, oh, ow, kh, kw, c),
        strides=(sb, sh * stride, sw * stride, sh, sw, sc),
        writeable=False,
    )


def conv2d_forward(xp, w, b, stride):
    kh, kw, c_in, c_out = w.shape
    patches = _patch_view(xp, kh, kw, stride)
    bs, oh, ow = patches.shape[:3]
    flat = patches.reshape(bs * oh * ow, kh * kw * c_in)
    out = flat @ w.reshape(kh * kw * c_in, c_out) + b
    return out.reshape(bs, oh, ow, c_out)


def conv2d_backward_dx(w, dout, stride, h, w_in):
    bs, oh, ow, c_out = dout.shape
    kh, kw, c_in, _ = w.shape
    dxp = np.zeros((bs, h, w_in, c_in))
    # k*k small loops with a BLAS matmul inside each
    for u in range(kh):
        for v in range(kw):
            contrib = dout @ w[u, v].T  # (bs, oh, ow, c_in)
            dxp[:, u:u + oh * stride:stride, v:v + ow * stride:stride, :] += contrib
    return dxp


def conv2d_backward_dw(xp, dout, kh, kw, stride):
    bs, oh, ow, c_out = dout.shape
    c_in = xp.shape[3]
    patches = _patch_view(xp, kh, kw, stride)
    flat = np.ascontiguousarray(patches).reshape(bs * oh * ow, kh * kw * c_in)
    dw = flat.T @ dout.reshape(bs * oh * ow, c_out)
    return dw.reshape(kh, kw, c_in, c_out)


def maxpool2x2_forward(x):
    bs, h, w, c = x.shape
    oh, ow = h // 2, w // 2
    windows = x[:, :oh * 2, :ow * 2, :].reshape(bs, oh, 2, ow, 2, c)
    stack = windows.transpose(0, 1, 3, 2, 4, 5).reshape(bs, oh, ow, 4, c)
    idx = stack.argmax(axis=3).astype(np.uint8)  # first max wins on ties
    out = np.take_along_axis(stack, idx[:, :, :, None, :], axis=3)[:, :, :, 0, :]
    return np.ascontiguousarray(out), idx


def maxpool2x2_backward(dout, idx, h, w):
    bs, oh, ow, c = dout.shape
    dstack = np.zeros((bs, oh, ow, 4, c))
    np.put_along_axis(dstack, idx[:, :, :, None, :], dout[:, :, :, None, :], axis=3)
    dx = np.zeros((bs, h, w, c))
    dx[:, :oh * 2, :ow * 2, :] = (
        dstack.reshape(bs, oh, ow, 2, 2, c)
        .transpose(0, 1, 3, 2, 4, 5)
        .reshape(bs, oh * 2, ow * 2, c)
    )
    return dx
