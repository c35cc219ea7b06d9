import json
import os

import numpy as np
import pytest

from maldet.cli import main
from maldet.evaluation import read_score_csv


def _blob_config(tmp_path, poison=False, **overrides):
    cfg = {
        "dataset": {"kind": "blobs", "seed": 21, "n_per_class": 60, "classes": 3,
                    "side": 8, "spread": 1.0, "test_seed": 22,
                    "test_n_per_class": 40},
        "arch": {"preset": "small_cnn", "seed": 1, "hidden": 16},
        "train": {"epochs": 4, "batch_size": 16, "learning_rate": 0.08, "seed": 2},
        "trigger": {"size": 2, "margin": 1},
        "fgsm": {"epsilon": 0.35},
        "detectors": {
            "mm": {"stage1": {"mean_factor": 1.0, "var_factor": 0.15, "n": 12},
                   "stage2": {"mean_factor": 1.0, "var_factor": 0.65, "n": 12},
                   "sprt": {"alpha": 0.05, "beta": 0.05, "indifference": 0.1},
                   "calibration_samples": 60, "seed": 5},
            "kd": {"bandwidth": 1.0},
            "lid": {"k": 6, "pool_cap": 40},
            "as": {"n_components": 8, "k": 5, "max_fit": 120},
            "fs": {"squeezer": "median", "width": 2},
            "bu": {"rate": 0.5, "n_passes": 8, "seed": 1},
            "rb": {"radius": 0.2, "m": 20, "seed": 1},
        },
        "eval": {"n_malicious": 40, "n_benign": 40, "warmup": 1, "repeats": 2,
                 "timing_samples": 5},
        "out_dir": str(tmp_path / "out"),
    }
    if poison:
        cfg["poison"] = {"count": 60, "target_label": 1, "seed": 9}
    cfg.update(overrides)
    path = tmp_path / ("cfg_poison.json" if poison else "cfg.json")
    path.write_text(json.dumps(cfg))
    return str(path)


@pytest.fixture(scope="module")
def cli_world(tmp_path_factory):
    """One full CLI run: train backdoor model, attack, fit, detect."""
    tmp_path = tmp_path_factory.mktemp("cli")
    cfg = _blob_config(tmp_path, poison=True)
    out = str(tmp_path / "out")

    assert main(["train", "--config", cfg, "--out", out]) == 0
    model = os.path.join(out, "model.bin")

    assert main(["attack", "--config", cfg, "--model", model, "--kind", "backdoor",
                 "--out", out]) == 0
    assert main(["attack", "--config", cfg, "--model", model, "--kind", "fgsm",
                 "--out", out]) == 0
    return {"tmp": tmp_path, "cfg": cfg, "out": out, "model": model}


def test_train_outputs(cli_world):
    out = cli_world["out"]
    assert os.path.exists(os.path.join(out, "model.bin"))
    assert os.path.exists(os.path.join(out, "history.csv"))
    summary = json.loads(open(os.path.join(out, "train_summary.json")).read())
    assert summary["test_accuracy"] >= 0.9
    assert summary["backdoor_success_rate"] >= 0.95
    assert summary["config"]["poison"]["count"] == 60


def test_attack_outputs(cli_world):
    out = cli_world["out"]
    assert os.path.exists(os.path.join(out, "attack_backdoor.bin"))
    report = json.loads(open(os.path.join(out, "attack_backdoor_report.json")).read())
    assert report["success_rate"] >= 0.95
    # recomputation oracle: the stored batch reproduces the reported rate
    from maldet import attacks
    from maldet.nn import load_model
    model = load_model(cli_world["model"])
    batch = attacks.load_attack_batch(os.path.join(out, "attack_backdoor.bin"))
    assert attacks.attack_success_rate(model, batch) == pytest.approx(
        report["success_rate"])


def test_fit_detect_evaluate_bench(cli_world):
    cfg, out, model = cli_world["cfg"], cli_world["out"], cli_world["model"]
    for det in ("kd", "mm", "fs", "as"):
        assert main(["fit", "--config", cfg, "--model", model, "--detector", det,
                     "--out", out]) == 0
        assert os.path.exists(os.path.join(out, f"state_{det}.bin"))
    assert os.path.exists(os.path.join(out, "switch_probs_as.txt"))

    be_bin = os.path.join(out, "attack_backdoor.bin")
    # benign samples: export the test split through a dataset archive
    from maldet.cli import load_datasets
    from maldet.config import load_config
    from maldet.data import save_dataset
    _, test_ds = load_datasets(load_config(cfg))
    test_bin = os.path.join(out, "test_set.bin")
    save_dataset(test_ds, test_bin)

    for det in ("kd", "mm", "fs", "as"):
        state = os.path.join(out, f"state_{det}.bin")
        assert main(["detect", "--config", cfg, "--model", model, "--state", state,
                     "--samples", be_bin,
                     "--out", os.path.join(out, f"mal_{det}.csv")]) == 0
        assert main(["detect", "--config", cfg, "--model", model, "--state", state,
                     "--samples", test_bin,
                     "--out", os.path.join(out, f"ben_{det}.csv")]) == 0
    assert os.path.exists(os.path.join(out, "mal_as.csv.switchrates.txt"))

    mal_records = read_score_csv(os.path.join(out, "mal_mm.csv"))
    assert {r.detector for r in mal_records} == {"mm1", "mm2"}
    assert all(np.isfinite(r.score) for r in mal_records)
    assert all(r.verdict in ("ae", "be", "normal") for r in mal_records)

    # score the adversarial batch too, for a two-row AUC matrix
    fgsm_bin = os.path.join(out, "attack_fgsm.bin")
    for det in ("kd", "mm"):
        state = os.path.join(out, f"state_{det}.bin")
        assert main(["detect", "--config", cfg, "--model", model, "--state", state,
                     "--samples", fgsm_bin,
                     "--out", os.path.join(out, f"ae_{det}.csv")]) == 0

    # merge per-detector CSVs into joint malicious/benign files
    from maldet.evaluation import write_score_csv
    mal_all, ben_all, ae_all = [], [], []
    for det in ("kd", "mm", "fs", "as"):
        mal_all += read_score_csv(os.path.join(out, f"mal_{det}.csv"))
        ben_all += read_score_csv(os.path.join(out, f"ben_{det}.csv"))
    for det in ("kd", "mm"):
        ae_all += read_score_csv(os.path.join(out, f"ae_{det}.csv"))
    write_score_csv(mal_all, os.path.join(out, "mal.csv"))
    write_score_csv(ben_all, os.path.join(out, "ben.csv"))
    write_score_csv(ae_all, os.path.join(out, "ae.csv"))

    assert main(["evaluate", "--config", cfg, "--out", out,
                 "--malicious", f"backdoor={os.path.join(out, 'mal.csv')}",
                 "--malicious", f"fgsm={os.path.join(out, 'ae.csv')}",
                 "--benign", os.path.join(out, "ben.csv")]) == 0
    report = json.loads(open(os.path.join(out, "report.json")).read())
    assert set(report["auc_matrix"]) == {"backdoor", "fgsm"}
    row = report["auc_matrix"]["backdoor"]
    assert row["kd"] >= 0.9           # strong separation survives the CLI path
    assert row["mm"] == row["mm2"]    # backdoor row maps the mm column to stage II
    assert report["auc_matrix"]["fgsm"]["mm"] == report["auc_matrix"]["fgsm"]["mm1"]
    assert os.path.exists(os.path.join(out, "auc_matrix.csv"))
    assert os.path.exists(os.path.join(out, "roc_backdoor_kd.txt"))

    assert main(["bench", "--config", cfg, "--model", model,
                 "--samples", test_bin, "--out", out,
                 "--state", os.path.join(out, "state_kd.bin"),
                 "--state", os.path.join(out, "state_mm.bin")]) == 0
    bench = json.loads(open(os.path.join(out, "bench.json")).read())
    assert {r["detector"] for r in bench["timing"]} == {"kd", "mm"}
    assert all(r["mean_ms"] > 0 for r in bench["timing"])


def test_missing_dataset_path_no_partial_outputs(tmp_path):
    cfg = {
        "dataset": {"kind": "mnist", "dir": str(tmp_path / "nowhere")},
        "arch": {"preset": "mnist_cnn"},
        "train": {"epochs": 1, "batch_size": 32, "learning_rate": 0.1, "seed": 1},
        "out_dir": str(tmp_path / "out"),
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    assert main(["train", "--config", str(path)]) == 2
    assert not os.path.exists(tmp_path / "out")


def test_unknown_config_key_rejected(tmp_path):
    cfg_path = _blob_config(tmp_path)
    raw = json.loads(open(cfg_path).read())
    raw["detectors"]["kd"]["sigma"] = 1.0  # not a recognized key
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(raw))
    assert main(["train", "--config", str(bad)]) == 2


def test_fgsm_zero_epsilon_guard(tmp_path):
    cfg_path = _blob_config(tmp_path, **{"fgsm": {"epsilon": 0.0}})
    out = str(tmp_path / "out")
    assert main(["train", "--config", cfg_path, "--out", out]) == 0
    code = main(["attack", "--config", cfg_path,
                 "--model", os.path.join(out, "model.bin"),
                 "--kind", "fgsm", "--out", out])
    assert code == 4
    assert not os.path.exists(os.path.join(out, "attack_fgsm.bin"))


def test_evaluate_missing_detector_named(tmp_path, cli_world):
    out = cli_world["out"]
    # benign file lacking mm columns
    ben = read_score_csv(os.path.join(out, "ben_kd.csv"))
    from maldet.evaluation import write_score_csv
    ben_path = str(tmp_path / "ben_only_kd.csv")
    write_score_csv(ben, ben_path)
    code = main(["evaluate", "--config", cli_world["cfg"], "--out", str(tmp_path),
                 "--malicious", f"backdoor={os.path.join(out, 'mal_mm.csv')}",
                 "--benign", ben_path])
    assert code == 3


def test_seed_override_changes_model(tmp_path):
    cfg_path = _blob_config(tmp_path)
    out_a = str(tmp_path / "a")
    out_b = str(tmp_path / "b")
    assert main(["train", "--config", cfg_path, "--out", out_a]) == 0
    assert main(["train", "--config", cfg_path, "--out", out_b, "--seed", "777"]) == 0
    from maldet.nn import load_model
    ma = load_model(os.path.join(out_a, "model.bin"))
    mb = load_model(os.path.join(out_b, "model.bin"))
    assert not np.array_equal(ma.weights[-2][0], mb.weights[-2][0])


def test_rerun_byte_identical_outputs(tmp_path):
    cfg_path = _blob_config(tmp_path)
    out_a = str(tmp_path / "a")
    out_b = str(tmp_path / "b")
    assert main(["train", "--config", cfg_path, "--out", out_a]) == 0
    assert main(["train", "--config", cfg_path, "--out", out_b]) == 0
    with open(os.path.join(out_a, "model.bin"), "rb") as fa, \
            open(os.path.join(out_b, "model.bin"), "rb") as fb:
        assert fa.read() == fb.read()
