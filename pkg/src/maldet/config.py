"""Run configuration: one JSON file drives every CLI command.

Unknown keys are rejected at every nesting level and all randomness is
seeded explicitly, so a run is fully reproducible from its config file.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

from .errors import ConfigError
from .nn.train import TrainConfig


def _take(d: dict, where: str, required=(), optional=()):
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected an object, got {type(d).__name__}")
    allowed = set(required) | set(optional)
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}; allowed {sorted(allowed)}")
    missing = set(required) - set(d)
    if missing:
        raise ConfigError(f"{where}: missing required keys {sorted(missing)}")
    return d


@dataclass(frozen=True)
class DatasetConfig:
    kind: str                      # "blobs" or "mnist"
    params: dict


@dataclass(frozen=True)
class RunConfig:
    dataset: DatasetConfig
    arch: dict
    train: TrainConfig
    trigger: dict
    poison: dict | None
    fgsm: dict
    detectors: dict
    eval: dict
    out_dir: str


_DETECTOR_KEYS = {
    "mm": (("stage1", "stage2"), ("sprt", "calibration_samples", "seed")),
    "as": ((), ("n_components", "k", "max_fit", "seed", "layers")),
    "kd": (("bandwidth",), ("max_bank", "seed")),
    "lid": ((), ("k", "pool_cap", "seed", "layers")),
    "bu": ((), ("rate", "n_passes", "seed")),
    "rb": ((), ("radius", "m", "seed")),
    "fs": ((), ("squeezer", "width", "bits")),
}

_STAGE_KEYS = (("mean_factor", "var_factor", "n"), ())
_SPRT_KEYS = ((), ("alpha", "beta", "indifference", "rate_threshold", "n_max"))


def parse_config(raw: dict) -> RunConfig:
    _take(raw, "config", required=("dataset", "arch", "train"),
          optional=("trigger", "poison", "fgsm", "detectors", "eval", "out_dir"))

    ds_raw = raw["dataset"]
    kind = ds_raw.get("kind")
    if kind == "blobs":
        _take(ds_raw, "dataset", required=("kind", "seed", "n_per_class", "classes", "side"),
              optional=("spread", "test_seed", "test_n_per_class"))
        params = {k: v for k, v in ds_raw.items() if k != "kind"}
        params.setdefault("spread", 1.0)
        params.setdefault("test_seed", params["seed"] + 1)
        params.setdefault("test_n_per_class", params["n_per_class"])
    elif kind == "mnist":
        _take(ds_raw, "dataset", required=("kind", "dir"), optional=("n_classes",))
        params = {"dir": ds_raw["dir"], "n_classes": ds_raw.get("n_classes", 10)}
    else:
        raise ConfigError(f"dataset.kind must be 'blobs' or 'mnist', got {kind!r}")
    dataset = DatasetConfig(kind, params)

    arch = dict(_take(raw["arch"], "arch", required=("preset",), optional=("seed", "hidden")))
    arch.setdefault("seed", 0)

    tr = _take(raw["train"], "train",
               required=("epochs", "batch_size", "learning_rate", "seed"),
               optional=("lr_decay",))
    train = TrainConfig(int(tr["epochs"]), int(tr["batch_size"]),
                        float(tr["learning_rate"]), int(tr["seed"]),
                        tr.get("lr_decay"))
    train.validate()

    trigger = dict(_take(raw.get("trigger", {}), "trigger",
                         optional=("size", "margin", "value")))
    trigger = {"size": int(trigger.get("size", 4)), "margin": int(trigger.get("margin", 1)),
               "value": float(trigger.get("value", 1.0))}

    poison = None
    if "poison" in raw:
        p = _take(raw["poison"], "poison", required=("count", "target_label", "seed"))
        poison = {"count": int(p["count"]), "target_label": int(p["target_label"]),
                  "seed": int(p["seed"])}

    fgsm = dict(_take(raw.get("fgsm", {}), "fgsm", optional=("epsilon",)))
    fgsm = {"epsilon": float(fgsm.get("epsilon", 0.2))}

    detectors = {}
    for det_id, det_raw in _take(raw.get("detectors", {}), "detectors",
                                 optional=tuple(_DETECTOR_KEYS)).items():
        req, opt = _DETECTOR_KEYS[det_id]
        cfg = dict(_take(det_raw, f"detectors.{det_id}", required=req, optional=opt))
        if det_id == "mm":
            for stage in ("stage1", "stage2"):
                cfg[stage] = dict(_take(cfg[stage], f"detectors.mm.{stage}",
                                        required=_STAGE_KEYS[0], optional=_STAGE_KEYS[1]))
            cfg["sprt"] = dict(_take(cfg.get("sprt", {}), "detectors.mm.sprt",
                                     optional=_SPRT_KEYS[1]))
        detectors[det_id] = cfg

    ev = dict(_take(raw.get("eval", {}), "eval",
                    optional=("n_malicious", "n_benign", "seed", "fpr_grid",
                              "warmup", "repeats", "timing_samples")))
    ev.setdefault("n_malicious", 1000)
    ev.setdefault("n_benign", 1000)
    ev.setdefault("seed", 2024)
    ev.setdefault("fpr_grid", [0.01, 0.05, 0.1])
    ev.setdefault("warmup", 1)
    ev.setdefault("repeats", 3)
    ev.setdefault("timing_samples", 20)

    return RunConfig(dataset, arch, train, trigger, poison, fgsm, detectors, ev,
                     raw.get("out_dir", "runs/out"))


def load_config(path) -> RunConfig:
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path) as f:
        try:
            raw = json.load(f)
        except ValueError as e:
            raise ConfigError(f"{path}: invalid JSON: {e}") from e
    return parse_config(raw)


def config_snapshot(cfg: RunConfig) -> dict:
    """JSON-serializable copy of the parsed config, for report embedding."""
    return {
        "dataset": {"kind": cfg.dataset.kind, **cfg.dataset.params},
        "arch": cfg.arch,
        "train": {"epochs": cfg.train.epochs, "batch_size": cfg.train.batch_size,
                  "learning_rate": cfg.train.learning_rate, "seed": cfg.train.seed,
                  "lr_decay": cfg.train.lr_decay},
        "trigger": cfg.trigger,
        "poison": cfg.poison,
        "fgsm": cfg.fgsm,
        "detectors": cfg.detectors,
        "eval": cfg.eval,
        "out_dir": cfg.out_dir,
    }
