"""ROC curves and AUC, with an independent pairwise-statistic route.

Scores are normalized so that higher means more malicious (the detector's
declared orientation does the flip); the curve sweeps the distinct score
values as thresholds, grouping ties, with exact (0,0) and (1,1) endpoints.
auc() integrates the curve by trapezoid; auc_mann_whitney() computes the
probability that a random malicious sample outscores a random benign one
(ties counted half) straight from the populations. The two must agree to
1e-9, which the test suite enforces.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from ..detectors.registry import HIGHER_IS_MALICIOUS, LOWER_IS_MALICIOUS
from ..errors import ConfigError, InputError


def _normalize(scores, orientation):
    scores = np.asarray(scores, dtype=np.float64)
    if orientation == HIGHER_IS_MALICIOUS:
        return scores
    if orientation == LOWER_IS_MALICIOUS:
        return -scores
    raise ConfigError(f"orientation must be '{HIGHER_IS_MALICIOUS}' or "
                      f"'{LOWER_IS_MALICIOUS}', got {orientation!r}")


@dataclass(frozen=True)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray  # normalized-score threshold per point (+inf first)
    orientation: str


def roc(malicious_scores, benign_scores, orientation: str) -> RocCurve:
    mal = _normalize(malicious_scores, orientation)
    ben = _normalize(benign_scores, orientation)
    if mal.size == 0 or ben.size == 0:
        raise InputError("both score populations must be nonempty")
    if not (np.isfinite(mal).all() and np.isfinite(ben).all()):
        raise InputError("scores must be finite")

    cuts = np.unique(np.concatenate([mal, ben]))[::-1]
    fpr = [0.0]
    tpr = [0.0]
    thresholds = [np.inf]
    for c in cuts:
        tpr.append(float((mal >= c).mean()))
        fpr.append(float((ben >= c).mean()))
        thresholds.append(float(c))
    # the final cut includes every sample, so the curve ends at (1, 1)
    return RocCurve(np.array(fpr), np.array(tpr), np.array(thresholds), orientation)


def auc(curve: RocCurve) -> float:
    return float(np.trapezoid(curve.tpr, curve.fpr))


def auc_mann_whitney(malicious_scores, benign_scores, orientation: str) -> float:
    """Rank-based pairwise statistic: P(mal > ben) + 0.5 * P(mal == ben)."""
    mal = _normalize(malicious_scores, orientation)
    ben = _normalize(benign_scores, orientation)
    if mal.size == 0 or ben.size == 0:
        raise InputError("both score populations must be nonempty")
    ranks = stats.rankdata(np.concatenate([mal, ben]))
    r_mal = ranks[:mal.size].sum()
    u = r_mal - mal.size * (mal.size + 1) / 2.0
    return float(u / (mal.size * ben.size))


def auc_from_scores(malicious_scores, benign_scores, orientation: str) -> float:
    return auc(roc(malicious_scores, benign_scores, orientation))


def tpr_at_fpr(curve: RocCurve, fpr_grid) -> np.ndarray:
    """Best achievable TPR at each FPR budget (step interpolation)."""
    out = np.empty(len(fpr_grid))
    for i, budget in enumerate(fpr_grid):
        ok = curve.fpr <= budget + 1e-12
        out[i] = curve.tpr[ok].max() if ok.any() else 0.0
    return out
