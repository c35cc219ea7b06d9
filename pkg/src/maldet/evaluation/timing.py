"""Online scoring-time measurement (fit cost excluded by construction)."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from ..errors import InputError


@dataclass(frozen=True)
class TimingResult:
    mean_ms: float       # per-sample
    median_ms: float
    n_samples: int
    n_calls: int         # scoring invocations issued (warmup + repeats)


def time_detector(score_fn, samples, warmup: int, repeats: int) -> TimingResult:
    """Wall-clock per-sample cost of score_fn over the batch.

    score_fn is called warmup + repeats times on the full batch; warmup
    rounds are discarded, each timed round contributes elapsed/len(batch).
    """
    if repeats < 1:
        raise InputError(f"repeats must be >= 1, got {repeats}")
    if warmup < 0:
        raise InputError(f"warmup must be >= 0, got {warmup}")
    samples = np.asarray(samples)
    n = samples.shape[0]
    if n == 0:
        raise InputError("empty sample batch")

    for _ in range(warmup):
        score_fn(samples)
    per_sample_ms = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        score_fn(samples)
        per_sample_ms.append((time.perf_counter() - t0) * 1000.0 / n)
    return TimingResult(
        mean_ms=float(np.mean(per_sample_ms)),
        median_ms=float(np.median(per_sample_ms)),
        n_samples=n,
        n_calls=warmup + repeats,
    )
