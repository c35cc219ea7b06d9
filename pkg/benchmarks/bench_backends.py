"""Compare the numba kernels against the pure-numpy fallback.

Times the convolution/pooling kernels (forward and backward) and a full
SGD step of the reference digit architecture under both backends.

    python benchmarks/bench_backends.py [--batch 64] [--repeats 5]

The active default backend elsewhere follows MALDET_BACKEND; this script
switches explicitly so one process measures both.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from maldet.nn import backend, presets
from maldet.nn.grads import forward_backward


def timeit(fn, repeats):
    fn()  # warmup (includes JIT compilation on the numba path)
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times) * 1000.0


def bench_kernels(batch, repeats):
    rng = np.random.default_rng(0)
    x = rng.random((batch, 28, 28, 16))
    w = rng.random((5, 5, 16, 32))
    b = np.zeros(32)
    dout = rng.random((batch, 24, 24, 32))

    rows = []
    for name in ("numpy", "numba"):
        prev = backend.use_backend(name)
        k = backend.kernels()
        try:
            rows.append({
                "backend": name,
                "conv_fwd": timeit(lambda: k.conv2d_forward(x, w, b, 1), repeats),
                "conv_dw": timeit(lambda: k.conv2d_backward_dw(x, dout, 5, 5, 1), repeats),
                "conv_dx": timeit(lambda: k.conv2d_backward_dx(w, dout, 1, 28, 28), repeats),
                "pool_fwd": timeit(lambda: k.maxpool2x2_forward(x), repeats),
            })
        finally:
            backend.use_backend(prev)
    return rows


def bench_train_step(batch, repeats):
    rng = np.random.default_rng(1)
    model = presets.mnist_cnn(seed=0)
    x = rng.random((batch, 28, 28, 1))
    y = rng.integers(0, 10, batch)

    rows = []
    for name in ("numpy", "numba"):
        prev = backend.use_backend(name)
        try:
            ms = timeit(lambda: forward_backward(model, x, y), repeats)
        finally:
            backend.use_backend(prev)
        rows.append({"backend": name, "train_step": ms})
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--batch", type=int, default=64)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    print(f"batch={args.batch} repeats={args.repeats} (best-of, ms)")
    kern = bench_kernels(args.batch, args.repeats)
    cols = ["conv_fwd", "conv_dw", "conv_dx", "pool_fwd"]
    print(f"{'backend':>8s} " + " ".join(f"{c:>10s}" for c in cols))
    for row in kern:
        print(f"{row['backend']:>8s} " + " ".join(f"{row[c]:10.2f}" for c in cols))

    steps = bench_train_step(args.batch, args.repeats)
    print(f"\nfull fwd+bwd step, reference digit net ({args.batch} samples):")
    for row in steps:
        print(f"{row['backend']:>8s} {row['train_step']:10.2f} ms")
    ratio = steps[0]["train_step"] / steps[1]["train_step"]
    print(f"\nnumba speedup over numpy on the training step: {ratio:.2f}x")


if __name__ == "__main__":
    main()
