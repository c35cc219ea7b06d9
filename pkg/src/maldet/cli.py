"""Batch command-line frontend.

Subcommands: train, attack, fit, detect, evaluate, bench. Every command
reads one JSON config (--config); outputs land under --out (default: the
config's out_dir). Exit codes: 0 success, 2 config error, 3 data/format
error, 4 runtime/training error.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np

from . import attacks, container
from .config import RunConfig, config_snapshot, load_config
from .data import (
    LabeledDataset, load_dataset, load_idx, poison_dataset,
    synth_blobs, white_square_trigger,
)
from .data.poison import PoisonConfig
from .detectors import (
    AuxState, BitDepthSqueeze, MedianFilterSqueeze, MmDetector, SprtConfig,
    as_fit, as_loglik, bu_dropout_score, fit_mm_detector, kde_fit, kde_score,
    lid_fit, lid_score, load_state, orientation, region_agreement_batch,
    save_state, squeeze_score,
)
from .detectors.activation import AsModel
from .detectors.density import KdeModel
from .detectors.lid import LidConfig, LidState
from .errors import ConfigError, DataFormatError, InputError, MaldetError, TrainingError
from .evaluation import (
    ScoreRecord, auc, auc_mann_whitney, cdf_points, read_score_csv, roc,
    time_detector, tpr_at_fpr, write_json_report, write_points, write_score_csv,
)
from .nn import (
    evaluate_accuracy, load_model, presets, save_model, train_sgd,
)


# ---------------------------------------------------------------- helpers

def _mnist_file(directory, base):
    for name in (base, base + ".gz"):
        p = os.path.join(directory, name)
        if os.path.exists(p):
            return p
    raise ConfigError(f"missing dataset file {base}[.gz] under {directory}")


def load_datasets(cfg: RunConfig):
    """(train, test) LabeledDatasets per the config's dataset block."""
    p = cfg.dataset.params
    if cfg.dataset.kind == "blobs":
        train = synth_blobs(p["seed"], p["n_per_class"], p["classes"], p["side"],
                            p["spread"])
        test = synth_blobs(p["test_seed"], p["test_n_per_class"], p["classes"],
                           p["side"], p["spread"])
        return train, test
    d = p["dir"]
    train = load_idx(_mnist_file(d, "train-images-idx3-ubyte"),
                     _mnist_file(d, "train-labels-idx1-ubyte"), p["n_classes"])
    test = load_idx(_mnist_file(d, "t10k-images-idx3-ubyte"),
                    _mnist_file(d, "t10k-labels-idx1-ubyte"), p["n_classes"])
    return train, test


def build_model(cfg: RunConfig, train_ds: LabeledDataset):
    preset = cfg.arch["preset"]
    seed = cfg.arch["seed"]
    h, w, c = train_ds.image_shape
    if preset == "mnist_cnn":
        return presets.mnist_cnn(seed)
    if preset == "small_cnn":
        return presets.small_cnn(h, train_ds.n_classes, seed, channels=c,
                                 hidden=cfg.arch.get("hidden", 64))
    if preset == "mlp":
        return presets.mlp(h, train_ds.n_classes, cfg.arch.get("hidden", 32), seed,
                           channels=c)
    if preset == "linear":
        return presets.linear_classifier(h, train_ds.n_classes, seed, channels=c)
    raise ConfigError(f"unknown arch preset {preset!r}; known: {sorted(presets.PRESETS)}")


def build_trigger(cfg: RunConfig, channels: int):
    t = cfg.trigger
    return white_square_trigger(t["size"], t["margin"], channels, t["value"])


def _out_dir(args, cfg: RunConfig) -> str:
    out = args.out or cfg.out_dir
    os.makedirs(out, exist_ok=True)
    return out


def _load_samples(path):
    """Accept a dataset archive or an attack batch archive."""
    kind = container.peek_kind(path)
    if kind == "DATASET":
        ds = load_dataset(path)
        return ds.images, {"source": "dataset", "labels": ds.labels}
    if kind == "ATKBATCH":
        batch = attacks.load_attack_batch(path)
        return batch.examples, {"source": f"attack:{batch.kind}",
                                "labels": batch.source_labels}
    raise DataFormatError(f"{path}: container kind {kind!r} holds no samples")


# ---------------------------------------------------------------- commands

def cmd_train(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.train.seed = args.seed  # dataclass is not frozen
    train_ds, test_ds = load_datasets(cfg)
    out = _out_dir(args, cfg)

    model = build_model(cfg, train_ds)
    fit_ds = train_ds
    if cfg.poison is not None:
        trig = build_trigger(cfg, train_ds.image_shape[2])
        fit_ds = poison_dataset(train_ds, trig,
                                PoisonConfig(cfg.poison["count"],
                                             cfg.poison["target_label"],
                                             cfg.poison["seed"]))
    trained, history = train_sgd(model, fit_ds, cfg.train)

    model_path = os.path.join(out, "model.bin")
    save_model(trained, model_path)
    with open(os.path.join(out, "history.csv"), "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["epoch", "loss", "accuracy", "learning_rate"])
        for h in history:
            w.writerow([h["epoch"], f"{h['loss']:.17g}", f"{h['accuracy']:.17g}",
                        f"{h['learning_rate']:.17g}"])

    summary = {"test_accuracy": evaluate_accuracy(trained, test_ds),
               "train_samples": len(fit_ds), "config": config_snapshot(cfg)}
    if cfg.poison is not None:
        trig = build_trigger(cfg, train_ds.image_shape[2])
        be = attacks.make_backdoor_examples(test_ds, trig, cfg.poison["target_label"])
        summary["backdoor_success_rate"] = attacks.attack_success_rate(trained, be)
    write_json_report(summary, os.path.join(out, "train_summary.json"))

    print(f"model -> {model_path}")
    print(f"test accuracy: {summary['test_accuracy']:.4f}")
    if "backdoor_success_rate" in summary:
        print(f"backdoor success rate: {summary['backdoor_success_rate']:.4f}")
    return 0


def cmd_attack(args) -> int:
    cfg = load_config(args.config)
    train_ds, test_ds = load_datasets(cfg)
    model = load_model(args.model)
    out = _out_dir(args, cfg)

    if args.kind == "fgsm":
        batch, yield_rate = attacks.fgsm(model, test_ds.images, test_ds.labels,
                                         cfg.fgsm["epsilon"])
        if len(batch) == 0:
            print(f"warning: FGSM with epsilon={cfg.fgsm['epsilon']} kept no samples "
                  f"(yield {yield_rate:.3f}); nothing written", file=sys.stderr)
            return 4
        path = os.path.join(out, "attack_fgsm.bin")
        attacks.save_attack_batch(batch, path)
        report = {"kind": "ae", "epsilon": cfg.fgsm["epsilon"], "n": len(batch),
                  "yield_rate": yield_rate,
                  "success_rate": attacks.attack_success_rate(model, batch)}
    else:
        if cfg.poison is None:
            raise ConfigError("backdoor attack needs a poison block (target label)")
        trig = build_trigger(cfg, test_ds.image_shape[2])
        batch = attacks.make_backdoor_examples(test_ds, trig,
                                               cfg.poison["target_label"])
        path = os.path.join(out, "attack_backdoor.bin")
        attacks.save_attack_batch(batch, path)
        report = {"kind": "be", "target_label": cfg.poison["target_label"],
                  "n": len(batch),
                  "success_rate": attacks.attack_success_rate(model, batch)}

    write_json_report(report, os.path.join(out, f"attack_{args.kind}_report.json"))
    print(f"batch -> {path} (n={report['n']}, success={report['success_rate']:.4f})")
    return 0


def _fit_one(det_id: str, cfg: RunConfig, model, train_ds: LabeledDataset):
    dcfg = cfg.detectors.get(det_id, {})
    if det_id == "mm":
        if not dcfg:
            raise ConfigError("detectors.mm block missing from config")
        sprt_raw = dcfg.get("sprt", {})
        sprt = SprtConfig(
            alpha=sprt_raw.get("alpha", 0.05), beta=sprt_raw.get("beta", 0.05),
            indifference=sprt_raw.get("indifference", 0.1),
            rate_threshold=sprt_raw.get("rate_threshold"),
            n_max=sprt_raw.get("n_max", max(dcfg["stage1"]["n"], dcfg["stage2"]["n"])))
        n_cal = dcfg.get("calibration_samples", 200)
        rng = np.random.default_rng(dcfg.get("seed", 0))
        cal = train_ds.images[rng.choice(len(train_ds), min(n_cal, len(train_ds)),
                                         replace=False)]
        return fit_mm_detector(model, cal, dcfg["stage1"], dcfg["stage2"],
                               sprt, sprt, seed=dcfg.get("seed", 0))
    if det_id == "as":
        return as_fit(model, train_ds, layers=dcfg.get("layers"),
                      n_components=dcfg.get("n_components", 100),
                      k=dcfg.get("k", 5), max_fit=dcfg.get("max_fit", 3000),
                      seed=dcfg.get("seed", 0))
    if det_id == "kd":
        if "bandwidth" not in dcfg:
            raise ConfigError("detectors.kd.bandwidth missing from config")
        return kde_fit(model, train_ds, dcfg["bandwidth"],
                       max_bank=dcfg.get("max_bank"), seed=dcfg.get("seed", 0))
    if det_id == "lid":
        lc = LidConfig(k=dcfg.get("k", 20),
                       layers=tuple(dcfg["layers"]) if dcfg.get("layers") else None,
                       pool_cap=dcfg.get("pool_cap", 1000), seed=dcfg.get("seed", 0))
        return lid_fit(model, train_ds, lc)
    if det_id in ("bu", "rb", "fs"):
        return AuxState(det_id, dcfg)
    raise ConfigError(f"unknown detector {det_id!r}")


def cmd_fit(args) -> int:
    cfg = load_config(args.config)
    train_ds, _ = load_datasets(cfg)
    model = load_model(args.model)
    out = _out_dir(args, cfg)
    state = _fit_one(args.detector, cfg, model, train_ds)
    path = os.path.join(out, f"state_{args.detector}.bin")
    save_state(state, path)
    if args.detector == "as":
        # per-layer-pair switching priors, bar-plot point list
        write_points(os.path.join(out, "switch_probs_as.txt"),
                     np.arange(len(state.switch_probs)), state.switch_probs,
                     figure="switch-probability/train-prior")
    print(f"state -> {path}")
    return 0


def _score_records(det_id, state, cfg: RunConfig, images, prefix, model):
    """ScoreRecord rows for one detector over a sample batch."""
    records = []
    dcfg = cfg.detectors.get(det_id, {})
    if det_id == "mm":
        verdicts = state.verdicts(images)
        for stage_id, scores in (("mm1", state.scores_stage1(images)),
                                 ("mm2", state.scores_stage2(images))):
            for i, s in enumerate(scores):
                records.append(ScoreRecord(f"{prefix}{i}", stage_id, float(s),
                                           orientation(stage_id), str(verdicts[i])))
        return records
    if det_id == "as":
        scores = as_loglik(state, images)
    elif det_id == "kd":
        scores = kde_score(state, images)
    elif det_id == "lid":
        scores = lid_score(state, images)
    elif det_id == "bu":
        p = state.params
        scores = bu_dropout_score(model, images, p.get("rate", 0.75),
                                  p.get("n_passes", 50), p.get("seed", 0))
    elif det_id == "rb":
        p = state.params
        scores = region_agreement_batch(model, images, p.get("radius", 0.3),
                                        p.get("m", 100), p.get("seed", 0))
    elif det_id == "fs":
        p = state.params
        sq = MedianFilterSqueeze(p.get("width", 2)) if p.get("squeezer", "median") == "median" \
            else BitDepthSqueeze(p.get("bits", 4))
        scores = squeeze_score(model, images, sq)
    else:
        raise ConfigError(f"unknown detector {det_id!r}")
    for i, s in enumerate(np.atleast_1d(scores)):
        records.append(ScoreRecord(f"{prefix}{i}", det_id, float(s),
                                   orientation(det_id), ""))
    return records


def cmd_detect(args) -> int:
    cfg = load_config(args.config)
    model = load_model(args.model)
    state = load_state(args.state, model)
    det_id = _detector_of(state)
    images, info = _load_samples(args.samples)
    prefix = os.path.splitext(os.path.basename(args.samples))[0] + ":"
    records = _score_records(det_id, state, cfg, images, prefix, model)
    write_score_csv(records, args.out)
    if det_id == "as":
        # observed per-layer-pair switch rates of this batch (bar data)
        from .detectors.activation import _label_sequences
        seqs = _label_sequences(state, np.asarray(images, dtype=np.float64))
        rates = (seqs[:, 1:] != seqs[:, :-1]).mean(axis=0)
        write_points(args.out + ".switchrates.txt", np.arange(len(rates)), rates,
                     figure="switch-probability/observed")
    print(f"{len(records)} records ({det_id}, {info['source']}) -> {args.out}")
    return 0


def _detector_of(state) -> str:
    if isinstance(state, MmDetector):
        return "mm"
    if isinstance(state, AsModel):
        return "as"
    if isinstance(state, KdeModel):
        return "kd"
    if isinstance(state, LidState):
        return "lid"
    if isinstance(state, AuxState):
        return state.detector
    raise ConfigError(f"unrecognized state object {type(state)}")


def _group_scores(records):
    by_det = {}
    for r in records:
        by_det.setdefault(r.detector, []).append(r.score)
    return {k: np.asarray(v) for k, v in by_det.items()}


def cmd_evaluate(args) -> int:
    cfg = load_config(args.config)
    out = _out_dir(args, cfg)
    benign = _group_scores(read_score_csv(args.benign))

    matrix = {}   # attack label -> detector -> auc
    details = {}
    for spec_arg in args.malicious:
        if "=" not in spec_arg:
            raise ConfigError(f"--malicious takes label=path, got {spec_arg!r}")
        label, path = spec_arg.split("=", 1)
        mal = _group_scores(read_score_csv(path))
        row = {}
        for det, mal_scores in sorted(mal.items()):
            if det not in benign:
                raise InputError(
                    f"detector {det!r} present in {path} but missing from the "
                    f"benign scores {args.benign}")
            orient = orientation(det)
            curve = roc(mal_scores, benign[det], orient)
            a = auc(curve)
            a_mw = auc_mann_whitney(mal_scores, benign[det], orient)
            if abs(a - a_mw) > 1e-9:
                raise MaldetError(
                    f"AUC routes disagree for {det}: {a} vs {a_mw}")
            row[det] = a
            details[f"{label}/{det}"] = {
                "auc": a,
                "tpr_at_fpr": dict(zip(map(str, cfg.eval["fpr_grid"]),
                                       tpr_at_fpr(curve, cfg.eval["fpr_grid"]))),
                "n_malicious": int(mal_scores.size),
                "n_benign": int(benign[det].size),
            }
            write_points(os.path.join(out, f"roc_{label}_{det}.txt"),
                         curve.fpr, curve.tpr, figure=f"roc/{label}/{det}")
            xs, ys = cdf_points(mal_scores)
            write_points(os.path.join(out, f"cdf_{label}_{det}.txt"), xs, ys,
                         figure=f"score-cdf/{label}/{det}")
        # the headline mutation column takes the stage matched to the attack
        if "mm1" in row and "mm2" in row:
            row["mm"] = row["mm2"] if ("backdoor" in label or label == "be") else row["mm1"]
        matrix[label] = row

    for det, scores in sorted(benign.items()):
        xs, ys = cdf_points(scores)
        write_points(os.path.join(out, f"cdf_benign_{det}.txt"), xs, ys,
                     figure=f"score-cdf/benign/{det}")

    detectors = sorted({d for row in matrix.values() for d in row})
    matrix_path = os.path.join(out, "auc_matrix.csv")
    with open(matrix_path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["attack"] + detectors)
        for label, row in matrix.items():
            w.writerow([label] + [f"{row[d]:.6f}" if d in row else "" for d in detectors])

    write_json_report({"auc_matrix": matrix, "details": details,
                       "config": config_snapshot(cfg)},
                      os.path.join(out, "report.json"))
    for label, row in matrix.items():
        for det in detectors:
            if det in row:
                print(f"AUC {label:>10s} {det:>4s}: {row[det]:.4f}")
    print(f"report -> {os.path.join(out, 'report.json')}")
    return 0


def cmd_bench(args) -> int:
    cfg = load_config(args.config)
    model = load_model(args.model)
    images, _ = _load_samples(args.samples)
    n = min(cfg.eval["timing_samples"], images.shape[0])
    batch = images[:n]
    out = _out_dir(args, cfg)

    rows = []
    for path in args.state:
        state = load_state(path, model)
        det_id = _detector_of(state)
        fn = _score_fn(det_id, state, model)
        t = time_detector(fn, batch, warmup=cfg.eval["warmup"],
                          repeats=cfg.eval["repeats"])
        rows.append({"detector": det_id, "mean_ms": t.mean_ms,
                     "median_ms": t.median_ms, "n_samples": t.n_samples})
        print(f"{det_id:>4s}: mean {t.mean_ms:9.3f} ms/sample "
              f"median {t.median_ms:9.3f} ms/sample")

    write_json_report({"timing": rows, "config": config_snapshot(cfg)},
                      os.path.join(out, "bench.json"))
    return 0


def _score_fn(det_id, state, model):
    if det_id == "mm":
        return lambda x: (state.scores_stage1(x), state.scores_stage2(x))
    if det_id == "as":
        return lambda x: as_loglik(state, x)
    if det_id == "kd":
        return lambda x: kde_score(state, x)
    if det_id == "lid":
        return lambda x: lid_score(state, x)
    dcfg = state.params
    if det_id == "bu":
        return lambda x: bu_dropout_score(model, x, dcfg.get("rate", 0.75),
                                          dcfg.get("n_passes", 50), dcfg.get("seed", 0))
    if det_id == "rb":
        return lambda x: region_agreement_batch(model, x, dcfg.get("radius", 0.3),
                                                dcfg.get("m", 100), dcfg.get("seed", 0))
    if det_id == "fs":
        sq = MedianFilterSqueeze(dcfg.get("width", 2)) \
            if dcfg.get("squeezer", "median") == "median" else BitDepthSqueeze(dcfg.get("bits", 4))
        return lambda x: squeeze_score(model, x, sq)
    raise ConfigError(f"unknown detector {det_id!r}")


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="maldet",
                                description="malicious-example detection toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="JSON run config")
        sp.add_argument("--out", default=None, help="output directory override")

    sp = sub.add_parser("train", help="train a clean or backdoored model")
    common(sp)
    sp.add_argument("--seed", type=int, default=None, help="training seed override")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("attack", help="generate an attack batch")
    common(sp)
    sp.add_argument("--model", required=True)
    sp.add_argument("--kind", required=True, choices=["fgsm", "backdoor"])
    sp.set_defaults(func=cmd_attack)

    sp = sub.add_parser("fit", help="fit a detector, writing its state file")
    common(sp)
    sp.add_argument("--model", required=True)
    sp.add_argument("--detector", required=True,
                    choices=["mm", "as", "kd", "lid", "bu", "rb", "fs"])
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("detect", help="score a sample archive with a fitted detector")
    sp.add_argument("--config", required=True)
    sp.add_argument("--model", required=True)
    sp.add_argument("--state", required=True)
    sp.add_argument("--samples", required=True)
    sp.add_argument("--out", required=True, help="score CSV path")
    sp.set_defaults(func=cmd_detect)

    sp = sub.add_parser("evaluate", help="AUC matrix + ROC/plot data from score CSVs")
    common(sp)
    sp.add_argument("--malicious", action="append", required=True,
                    metavar="LABEL=CSV", help="repeatable, e.g. backdoor=be.csv")
    sp.add_argument("--benign", required=True, help="benign score CSV")
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("bench", help="per-sample online detection timing")
    common(sp)
    sp.add_argument("--model", required=True)
    sp.add_argument("--samples", required=True)
    sp.add_argument("--state", action="append", required=True,
                    help="repeatable detector state file")
    sp.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (DataFormatError, InputError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return 3
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return 3
    except (TrainingError, MaldetError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
