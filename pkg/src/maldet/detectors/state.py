"""Fitted-detector serialization so fit and score can run as separate
CLI invocations.

Activation-space, density and LID states store their arrays directly.
The mutation detector stores generation parameters and seeds only; its
ensembles rebuild deterministically from the base model at load (verified
logit-identical by test), avoiding hundreds of megabytes of weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import container
from ..errors import DataFormatError
from ..nn.model import Model
from .activation import AsLayerState, AsModel
from .density import KdeModel
from .lid import LidConfig, LidState
from .mutation import MmDetector, build_ensemble
from .sprt import SprtConfig

KIND = "DETSTATE"
VERSION = 1


@dataclass(frozen=True)
class AuxState:
    """Parameter-only state for the fit-free detectors (bu, rb, fs)."""
    detector: str
    params: dict


def _sprt_to_meta(cfg: SprtConfig) -> dict:
    return {"alpha": cfg.alpha, "beta": cfg.beta, "indifference": cfg.indifference,
            "rate_threshold": cfg.rate_threshold, "n_max": cfg.n_max}


def _sprt_from_meta(d: dict) -> SprtConfig:
    return SprtConfig(d["alpha"], d["beta"], d["indifference"],
                      d["rate_threshold"], d["n_max"])


def save_state(state, path) -> None:
    arrays: dict[str, np.ndarray] = {}
    if isinstance(state, AsModel):
        meta = {"detector": "as", "k": state.k, "n_components": state.n_components,
                "layers": list(state.layers)}
        arrays["switch_probs"] = state.switch_probs
        for i, st in enumerate(state.layer_states):
            arrays[f"mean{i}"] = st.mean
            arrays[f"components{i}"] = st.components
            arrays[f"ref{i}"] = st.ref_projected
            arrays[f"ref_labels{i}"] = st.ref_labels
    elif isinstance(state, KdeModel):
        meta = {"detector": "kd", "bandwidth": state.bandwidth,
                "layer_index": state.layer_index}
        for c, bank in enumerate(state.banks):
            arrays[f"bank{c}"] = bank
    elif isinstance(state, LidState):
        meta = {"detector": "lid", "k": state.k, "layers": list(state.layers)}
        for c, per_layer in enumerate(state.pools):
            for slot, pool in enumerate(per_layer):
                arrays[f"pool{c}_{slot}"] = pool
    elif isinstance(state, AuxState):
        meta = {"detector": state.detector, "params": state.params}
    elif isinstance(state, MmDetector):
        meta = {
            "detector": "mm",
            "stage1": {"mean_factor": state.ensemble_1.mean_factor,
                       "var_factor": state.ensemble_1.var_factor,
                       "n": len(state.ensemble_1), "seed": state.ensemble_1.seed,
                       "sprt": _sprt_to_meta(state.config_1)},
            "stage2": {"mean_factor": state.ensemble_2.mean_factor,
                       "var_factor": state.ensemble_2.var_factor,
                       "n": len(state.ensemble_2), "seed": state.ensemble_2.seed,
                       "sprt": _sprt_to_meta(state.config_2)},
        }
    else:
        raise TypeError(f"cannot serialize detector state of type {type(state)}")
    container.write(path, KIND, VERSION, meta, arrays)


def load_state(path, model: Model):
    version, meta, arrays = container.read(path, KIND)
    if version != VERSION:
        raise DataFormatError(f"{path}: unsupported detector state version {version}")
    det = meta.get("detector")
    if det == "as":
        layers = meta["layers"]
        states = []
        for i, l in enumerate(layers):
            try:
                states.append(AsLayerState(l, arrays[f"mean{i}"], arrays[f"components{i}"],
                                           arrays[f"ref{i}"], arrays[f"ref_labels{i}"]))
            except KeyError as e:
                raise DataFormatError(f"{path}: missing array {e} for layer {l}") from e
        return AsModel(model, tuple(states), arrays["switch_probs"],
                       meta["k"], meta["n_components"])
    if det == "kd":
        banks = []
        for c in range(model.n_classes):
            try:
                banks.append(arrays[f"bank{c}"])
            except KeyError as e:
                raise DataFormatError(f"{path}: missing bank for class {c}") from e
        return KdeModel(model, meta["bandwidth"], meta["layer_index"], tuple(banks))
    if det == "lid":
        layers = tuple(meta["layers"])
        pools = []
        for c in range(model.n_classes):
            per_layer = []
            for slot in range(len(layers)):
                try:
                    per_layer.append(arrays[f"pool{c}_{slot}"])
                except KeyError as e:
                    raise DataFormatError(
                        f"{path}: missing pool for class {c} layer slot {slot}") from e
            pools.append(tuple(per_layer))
        return LidState(model, meta["k"], layers, tuple(pools),
                        LidConfig(k=meta["k"], layers=layers))
    if det in ("bu", "rb", "fs"):
        return AuxState(det, meta["params"])
    if det == "mm":
        s1, s2 = meta["stage1"], meta["stage2"]
        ens1 = build_ensemble(model, "I", s1["mean_factor"], s1["var_factor"],
                              s1["n"], s1["seed"])
        ens2 = build_ensemble(model, "II", s2["mean_factor"], s2["var_factor"],
                              s2["n"], s2["seed"])
        return MmDetector(ens1, ens2, _sprt_from_meta(s1["sprt"]),
                          _sprt_from_meta(s2["sprt"]))
    raise DataFormatError(f"{path}: unknown detector id {det!r} in state file")
