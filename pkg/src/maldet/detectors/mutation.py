"""Model-mutation detector: ensembles of Gaussian-fuzzed models plus the
two-stage sequential test.

Stage I uses a small mutation scale (sensitive samples flip labels, the
malicious hypothesis H0 "rate above threshold" flags them), stage II a
large one where the hypotheses swap roles: robust samples that keep their
label under heavy mutation (rate below threshold, H1) are flagged as
trigger-carrying, since ordinary samples flip.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, InputError
from ..nn.model import Model
from ..nn.mutate import mutate_fc_gaussian
from ..nn.train import predict_batched
from .sprt import SprtConfig, sprt_decide, with_calibration

VERDICT_AE = "ae"
VERDICT_BE = "be"
VERDICT_NORMAL = "normal"

STAGES = ("I", "II")


@dataclass(frozen=True)
class MutationEnsemble:
    stage: str
    base: Model
    models: tuple
    mean_factor: float
    var_factor: float
    seed: int

    def __len__(self) -> int:
        return len(self.models)


def build_ensemble(base: Model, stage: str, mean_factor: float, var_factor: float,
                   n: int, seed: int) -> MutationEnsemble:
    """n independent fuzzed copies with per-model seeds derived from `seed`."""
    if stage not in STAGES:
        raise ConfigError(f"stage must be one of {STAGES}, got {stage!r}")
    if n < 1:
        raise ConfigError(f"ensemble size must be >= 1, got {n}")
    seed = int(seed)
    children = np.random.SeedSequence(seed).spawn(n)
    models = tuple(mutate_fc_gaussian(base, mean_factor, var_factor, s) for s in children)
    return MutationEnsemble(stage, base, models, mean_factor, var_factor, seed)


def change_matrix(ensemble: MutationEnsemble, images, base_preds=None,
                  batch_size: int = 256) -> np.ndarray:
    """(N, n_models) booleans: does member j relabel sample i."""
    if len(ensemble) == 0:
        raise InputError("empty ensemble")
    images = np.asarray(images, dtype=np.float64)
    if images.ndim == 3:
        images = images[None]
    if base_preds is None:
        base_preds = predict_batched(ensemble.base, images, batch_size)
    base_preds = np.asarray(base_preds)
    out = np.empty((images.shape[0], len(ensemble)), dtype=bool)
    for j, member in enumerate(ensemble.models):
        out[:, j] = predict_batched(member, images, batch_size) != base_preds
    return out


def mm_score(ensemble: MutationEnsemble, x, base_pred=None):
    """Label-change rate z/n in [0, 1]; scalar for a single sample."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 3
    if base_pred is not None:
        base_pred = np.atleast_1d(base_pred)
    rates = change_matrix(ensemble, x, base_pred).mean(axis=1)
    return float(rates[0]) if single else rates


def mm_two_stage(x, ensemble_1: MutationEnsemble, ensemble_2: MutationEnsemble,
                 config_1: SprtConfig, config_2: SprtConfig):
    """Figure-of-merit workflow: stage I flags AEs; survivors go to stage II
    where accepting the low-rate hypothesis flags BEs. Returns a verdict
    string for a single sample, or an array for a batch."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 3
    changes_1 = change_matrix(ensemble_1, x)
    verdicts = np.array([VERDICT_NORMAL] * changes_1.shape[0], dtype=object)

    pending = []
    for i in range(changes_1.shape[0]):
        res = sprt_decide(changes_1[i], config_1)
        if res.decision == "h0":
            verdicts[i] = VERDICT_AE
        else:
            pending.append(i)

    if pending:
        changes_2 = change_matrix(ensemble_2, x[pending])
        for row, i in enumerate(pending):
            res = sprt_decide(changes_2[row], config_2)
            # stage II: H0 = benign (rate above threshold), H1 = trigger-carrying
            verdicts[i] = VERDICT_BE if res.decision == "h1" else VERDICT_NORMAL
    return verdicts[0] if single else verdicts


@dataclass(frozen=True)
class MmDetector:
    """Fitted two-stage detector: both ensembles plus calibrated test configs."""
    ensemble_1: MutationEnsemble
    ensemble_2: MutationEnsemble
    config_1: SprtConfig
    config_2: SprtConfig

    def verdicts(self, x):
        return mm_two_stage(x, self.ensemble_1, self.ensemble_2,
                            self.config_1, self.config_2)

    def scores_stage1(self, x):
        return mm_score(self.ensemble_1, x)

    def scores_stage2(self, x):
        return mm_score(self.ensemble_2, x)


def fit_mm_detector(base: Model, clean_images, stage1_params: dict, stage2_params: dict,
                    config_1: SprtConfig, config_2: SprtConfig, seed: int) -> MmDetector:
    """Build both ensembles and calibrate unset rate thresholds from the
    clean batch's observed change rates."""
    s1, s2 = np.random.SeedSequence(seed).spawn(2)
    ens1 = build_ensemble(base, "I", stage1_params["mean_factor"],
                          stage1_params["var_factor"], stage1_params["n"],
                          s1.generate_state(1)[0])
    ens2 = build_ensemble(base, "II", stage2_params["mean_factor"],
                          stage2_params["var_factor"], stage2_params["n"],
                          s2.generate_state(1)[0])
    clean_images = np.asarray(clean_images, dtype=np.float64)
    cfg1 = with_calibration(config_1, mm_score(ens1, clean_images), "I")
    cfg2 = with_calibration(config_2, mm_score(ens2, clean_images), "II")
    return MmDetector(ens1, ens2, cfg1, cfg2)
