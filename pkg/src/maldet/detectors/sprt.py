"""Sequential probability ratio test over label-change observations.

The test compares H0: change rate > threshold against H1: change rate <=
threshold, with an indifference band of half-width `indifference` around
the threshold. Writing p1 = threshold - indifference and p0 = threshold +
indifference, the running statistic after n observations with z changes is

    log_ratio(n, z) = z*log(p1/p0) + (n-z)*log((1-p1)/(1-p0))

H0 is accepted when the ratio falls to beta/(1-alpha) or below, H1 when it
reaches (1-beta)/alpha or above. A sequence exhausted without a crossing
is undecided and resolved by comparing z/n to the threshold directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from ..errors import ConfigError, InputError

ACCEPT_H0 = "accept_h0"
ACCEPT_H1 = "accept_h1"
UNDECIDED_AT_CAP = "undecided_at_cap"


@dataclass(frozen=True)
class SprtConfig:
    alpha: float = 0.05
    beta: float = 0.05
    indifference: float = 0.1
    rate_threshold: float | None = None
    n_max: int = 100

    def validate(self):
        if not (0.0 < self.alpha < 1.0 and 0.0 < self.beta < 1.0):
            raise ConfigError(f"alpha/beta must lie in (0, 1), got {self.alpha}/{self.beta}")
        if self.n_max < 1:
            raise ConfigError(f"n_max must be >= 1, got {self.n_max}")
        if self.rate_threshold is None:
            raise ConfigError("rate_threshold is unset (calibrate or pass explicitly)")
        t = self.rate_threshold
        if not (0.0 < t < 1.0):
            raise ConfigError(f"rate_threshold must lie in (0, 1), got {t}")
        if not (0.0 < self.indifference < min(t, 1.0 - t)):
            raise ConfigError(
                f"indifference must lie in (0, min({t:.4g}, {1 - t:.4g})), "
                f"got {self.indifference}")


@dataclass(frozen=True)
class SprtResult:
    outcome: str        # accept_h0 | accept_h1 | undecided_at_cap
    decision: str       # "h0" or "h1" (undecided resolved by z/n vs threshold)
    n_observed: int
    n_changes: int
    log_ratio: float


def log_ratio(n: int, z: int, config: SprtConfig) -> float:
    """Closed form of the running statistic after n observations, z changes."""
    t, d = config.rate_threshold, config.indifference
    p1, p0 = t - d, t + d
    return z * math.log(p1 / p0) + (n - z) * math.log((1.0 - p1) / (1.0 - p0))


def sprt_decide(changes, config: SprtConfig) -> SprtResult:
    """Evaluate the test incrementally over a boolean change sequence,
    stopping as soon as either boundary is crossed."""
    config.validate()
    changes = list(changes)
    if len(changes) > config.n_max:
        raise InputError(f"sequence length {len(changes)} exceeds n_max {config.n_max}")

    t, d = config.rate_threshold, config.indifference
    step_change = math.log((t - d) / (t + d))            # negative
    step_same = math.log((1.0 - t + d) / (1.0 - t - d))  # positive
    lower = math.log(config.beta / (1.0 - config.alpha))
    upper = math.log((1.0 - config.beta) / config.alpha)

    ratio = 0.0
    z = 0
    for n, changed in enumerate(changes, start=1):
        if changed:
            ratio += step_change
            z += 1
        else:
            ratio += step_same
        if ratio <= lower:
            return SprtResult(ACCEPT_H0, "h0", n, z, ratio)
        if ratio >= upper:
            return SprtResult(ACCEPT_H1, "h1", n, z, ratio)

    n = len(changes)
    if n == 0:
        raise InputError("empty change sequence")
    decision = "h0" if (z / n) > t else "h1"
    return SprtResult(UNDECIDED_AT_CAP, decision, n, z, ratio)


def calibrate_rate_threshold(clean_rates, stage: str) -> float:
    """Threshold from a held-out clean batch: stage I uses mean + 2*std of
    the clean change rates, stage II the midpoint between the clean mean
    and zero. Result is clamped inside (0, 1)."""
    import numpy as np

    rates = np.asarray(clean_rates, dtype=np.float64)
    if rates.size == 0:
        raise InputError("no clean rates to calibrate from")
    if stage == "I":
        t = float(rates.mean() + 2.0 * rates.std())
    elif stage == "II":
        t = float(rates.mean() / 2.0)
    else:
        raise ConfigError(f"stage must be 'I' or 'II', got {stage!r}")
    return float(min(max(t, 1e-3), 1.0 - 1e-3))


def with_calibration(config: SprtConfig, clean_rates, stage: str) -> SprtConfig:
    """Fill in rate_threshold (when unset) and shrink the indifference
    half-width if it would violate 0 < indifference < min(t, 1-t)."""
    t = config.rate_threshold
    if t is None:
        t = calibrate_rate_threshold(clean_rates, stage)
    d = config.indifference
    limit = 0.9 * min(t, 1.0 - t)
    if d >= min(t, 1.0 - t):
        d = limit
    out = replace(config, rate_threshold=t, indifference=d)
    out.validate()
    return out
