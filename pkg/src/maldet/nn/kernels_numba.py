"""Numba @njit kernels for the convolution and pooling hot loops.

Parallel loops are arranged so each prange iteration writes a disjoint
slice; no cross-thread reductions, so results are bit-deterministic
regardless of thread count. fastmath stays off for the same reason.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange


@njit(parallel=True, cache=True)
def conv2d_forward(xp, w, b, stride):
    bs, h, w_in, c_in = xp.shape
    kh, kw, _, c_out = w.shape
    oh = (h - kh) // stride + 1
    ow = (w_in - kw) // stride + 1
    out = np.empty((bs, oh, ow, c_out))
    for bi in prange(bs):
        acc = np.empty(c_out)
        for oy in range(oh):
            iy = oy * stride
            for ox in range(ow):
                ix = ox * stride
                for co in range(c_out):
                    acc[co] = b[co]
                for u in range(kh):
                    for v in range(kw):
                        for ci in range(c_in):
                            a = xp[bi, iy + u, ix + v, ci]
                            for co in range(c_out):
                                acc[co] += a * w[u, v, ci, co]
                for co in range(c_out):
                    out[bi, oy, ox, co] = acc[co]
    return out


@njit(parallel=True, cache=True)
def conv2d_backward_dx(w, dout, stride, h, w_in):
    # gather form: each padded-input cell sums the windows that cover it,
    # so every cell is written exactly once
    bs, oh, ow, c_out = dout.shape
    kh, kw, c_in, _ = w.shape
    dxp = np.zeros((bs, h, w_in, c_in))
    for bi in prange(bs):
        acc = np.empty(c_in)
        for iy in range(h):
            for ix in range(w_in):
                for ci in range(c_in):
                    acc[ci] = 0.0
                for u in range(kh):
                    rem = iy - u
                    if rem < 0:
                        break
                    if rem % stride != 0:
                        continue
                    oy = rem // stride
                    if oy >= oh:
                        continue
                    for v in range(kw):
                        rem2 = ix - v
                        if rem2 < 0:
                            break
                        if rem2 % stride != 0:
                            continue
                        ox = rem2 // stride
                        if ox >= ow:
                            continue
                        for ci in range(c_in):
                            s = 0.0
                            for co in range(c_out):
                                s += w[u, v, ci, co] * dout[bi, oy, ox, co]
                            acc[ci] += s
                for ci in range(c_in):
                    dxp[bi, iy, ix, ci] = acc[ci]
    return dxp


@njit(parallel=True, cache=True)
def conv2d_backward_dw(xp, dout, kh, kw, stride):
    bs, oh, ow, c_out = dout.shape
    c_in = xp.shape[3]
    dw = np.zeros((kh, kw, c_in, c_out))
    # each (u, v) kernel position owns a disjoint dw slice; the innermost
    # loop runs contiguously over both dout and that slice
    for uv in prange(kh * kw):
        u = uv // kw
        v = uv % kw
        for bi in range(bs):
            for oy in range(oh):
                iy = oy * stride + u
                for ox in range(ow):
                    ix = ox * stride + v
                    for ci in range(c_in):
                        a = xp[bi, iy, ix, ci]
                        for co in range(c_out):
                            dw[u, v, ci, co] += a * dout[bi, oy, ox, co]
    return dw


@njit(parallel=True, cache=True)
def maxpool2x2_forward(x):
    bs, h, w, c = x.shape
    oh, ow = h // 2, w // 2
    out = np.empty((bs, oh, ow, c))
    idx = np.empty((bs, oh, ow, c), dtype=np.uint8)
    for bi in prange(bs):
        for oy in range(oh):
            for ox in range(ow):
                for ci in range(c):
                    best = x[bi, 2 * oy, 2 * ox, ci]
                    k = 0
                    v = x[bi, 2 * oy, 2 * ox + 1, ci]
                    if v > best:
                        best = v
                        k = 1
                    v = x[bi, 2 * oy + 1, 2 * ox, ci]
                    if v > best:
                        best = v
                        k = 2
                    v = x[bi, 2 * oy + 1, 2 * ox + 1, ci]
                    if v > best:
                        best = v
                        k = 3
                    out[bi, oy, ox, ci] = best
                    idx[bi, oy, ox, ci] = k
    return out, idx


@njit(parallel=True, cache=True)
def maxpool2x2_backward(dout, idx, h, w):
    bs, oh, ow, c = dout.shape
    dx = np.zeros((bs, h, w, c))
    for bi in prange(bs):
        for oy in range(oh):
            for ox in range(ow):
                for ci in range(c):
                    k = idx[bi, oy, ox, ci]
                    dy = 2 * oy + (k // 2)
                    dxx = 2 * ox + (k % 2)
                    dx[bi, dy, dxx, ci] = dout[bi, oy, ox, ci]
    return dx
