import gzip
import struct

import numpy as np
import pytest

from maldet.data import (
    LabeledDataset, PoisonConfig, load_dataset, load_idx, poison_dataset,
    save_dataset, stamp_trigger, synth_blobs, white_square_trigger,
    TAG_CLEAN, TAG_POISONED,
)
from maldet.data.trigger import TriggerSpec
from maldet.errors import ConfigError, DataFormatError, InputError
from maldet.nn import TrainConfig, presets, train_sgd


# ------------------------------------------------------------- IDX parsing

def _write_idx_images(path, images):
    n, h, w = images.shape
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, n, h, w))
        f.write(images.astype(np.uint8).tobytes())


def _write_idx_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(bytes(int(x) for x in labels))


def test_idx_round_trip_and_scaling(tmp_path):
    images = np.zeros((3, 4, 4), dtype=np.uint8)
    images[0, 0, 0] = 255
    images[1, 2, 3] = 128
    labels = [1, 0, 2]
    _write_idx_images(tmp_path / "imgs", images)
    _write_idx_labels(tmp_path / "labs", labels)
    ds = load_idx(tmp_path / "imgs", tmp_path / "labs", n_classes=3)
    assert len(ds) == 3
    assert ds.images.shape == (3, 4, 4, 1)
    assert ds.images[0, 0, 0, 0] == 1.0
    assert ds.images[0, 0, 1, 0] == 0.0
    assert ds.images[1, 2, 3, 0] == pytest.approx(128 / 255)
    assert list(ds.labels) == labels


def test_idx_gzip_transparent(tmp_path):
    images = np.full((2, 3, 3), 7, dtype=np.uint8)
    _write_idx_images(tmp_path / "imgs", images)
    gz = tmp_path / "imgs.gz"
    gz.write_bytes(gzip.compress((tmp_path / "imgs").read_bytes()))
    _write_idx_labels(tmp_path / "labs", [0, 1])
    ds = load_idx(gz, tmp_path / "labs", n_classes=2)
    assert len(ds) == 2


def test_idx_wrong_magic(tmp_path):
    with open(tmp_path / "bad", "wb") as f:
        f.write(struct.pack(">II", 0x00000801, 2))
        f.write(b"\x00\x01")
    _write_idx_labels(tmp_path / "labs", [0, 1])
    with pytest.raises(DataFormatError, match="magic"):
        load_idx(tmp_path / "bad", tmp_path / "labs")


def test_idx_count_mismatch(tmp_path):
    _write_idx_images(tmp_path / "imgs", np.zeros((3, 2, 2), dtype=np.uint8))
    _write_idx_labels(tmp_path / "labs", [0, 1])
    with pytest.raises(DataFormatError, match="count"):
        load_idx(tmp_path / "imgs", tmp_path / "labs")


def test_idx_truncated(tmp_path):
    _write_idx_images(tmp_path / "imgs", np.zeros((3, 2, 2), dtype=np.uint8))
    raw = (tmp_path / "imgs").read_bytes()
    (tmp_path / "imgs").write_bytes(raw[:-3])
    _write_idx_labels(tmp_path / "labs", [0, 1, 2])
    with pytest.raises(DataFormatError):
        load_idx(tmp_path / "imgs", tmp_path / "labs")


def test_random_bytes_scale_into_unit_interval(tmp_path, rng):
    images = rng.integers(0, 256, size=(5, 3, 3)).astype(np.uint8)
    _write_idx_images(tmp_path / "imgs", images)
    _write_idx_labels(tmp_path / "labs", [0] * 5)
    ds = load_idx(tmp_path / "imgs", tmp_path / "labs")
    assert ds.images.min() >= 0.0 and ds.images.max() <= 1.0


# ------------------------------------------------------------- synthetic

def test_blobs_deterministic():
    a = synth_blobs(seed=5, n_per_class=10, classes=3, side=8)
    b = synth_blobs(seed=5, n_per_class=10, classes=3, side=8)
    assert np.array_equal(a.images, b.images)
    assert np.array_equal(a.labels, b.labels)


def test_blobs_zero_spread_degenerate():
    ds = synth_blobs(seed=5, n_per_class=5, classes=2, side=8, spread=0.0)
    for cls in range(2):
        imgs = ds.images[ds.labels == cls]
        assert np.array_equal(imgs, np.broadcast_to(imgs[0], imgs.shape))


def test_blobs_linearly_separable_at_default_spread():
    ds = synth_blobs(seed=5, n_per_class=60, classes=3, side=8)
    model = presets.linear_classifier(8, 3, seed=1)
    _, hist = train_sgd(model, ds, TrainConfig(20, 16, 1.0, seed=2))
    assert hist[-1]["accuracy"] >= 0.99


def test_blobs_validation():
    with pytest.raises(ConfigError):
        synth_blobs(seed=1, n_per_class=5, classes=1, side=8)
    with pytest.raises(ConfigError):
        synth_blobs(seed=1, n_per_class=5, classes=2, side=8, spread=-1)


# ------------------------------------------------------------- trigger

def test_default_trigger_geometry():
    image = np.zeros((28, 28, 1))
    trig = white_square_trigger(size=4, margin=1)
    out = stamp_trigger(image, trig)
    assert np.all(out[23:27, 23:27, 0] == 1.0)
    border = out.copy()
    border[23:27, 23:27, 0] = 0.0
    assert np.all(border == 0.0)  # rows/cols 27 and everything else untouched


def test_stamp_white_on_white_identity():
    image = np.ones((10, 10, 1))
    trig = white_square_trigger(size=3, margin=1)
    assert np.array_equal(stamp_trigger(image, trig), image)


def test_stamp_idempotent(rng):
    image = rng.random((12, 12, 1))
    trig = white_square_trigger(size=3, margin=2)
    once = stamp_trigger(image, trig)
    twice = stamp_trigger(once, trig)
    assert np.array_equal(once, twice)


def test_stamp_changes_exactly_masked_pixels(rng):
    image = rng.random((12, 12, 1)) * 0.5
    mask = np.zeros((3, 3), dtype=bool)
    mask[1, 1] = True
    trig = TriggerSpec(np.ones((3, 3, 1)), (1, 1), "bottom_right", mask)
    out = stamp_trigger(image, trig)
    diff = out != image
    assert diff.sum() == 1
    assert out[9, 9, 0] == 1.0  # the masked center pixel of the patch


def test_trigger_out_of_bounds():
    trig = white_square_trigger(size=6, margin=0)
    with pytest.raises(ConfigError, match="bounds"):
        stamp_trigger(np.zeros((4, 4, 1)), trig)


def test_trigger_batch_stamping(rng):
    images = rng.random((5, 10, 10, 1))
    trig = white_square_trigger(size=2, margin=1)
    out = stamp_trigger(images, trig)
    assert out.shape == images.shape
    assert np.all(out[:, 7:9, 7:9, 0] == 1.0)


# ------------------------------------------------------------- poisoning

def _tiny_ds(rng, n=20, classes=3, side=8):
    return synth_blobs(seed=9, n_per_class=n, classes=classes, side=side)


def test_poison_zero_count_is_shuffled_copy(rng):
    ds = _tiny_ds(rng)
    out = poison_dataset(ds, white_square_trigger(2, 1), PoisonConfig(0, 1, seed=3))
    assert len(out) == len(ds)
    assert np.all(out.tags == TAG_CLEAN)
    # same multiset of (image, label) pairs
    assert sorted(out.labels.tolist()) == sorted(ds.labels.tolist())
    assert np.isclose(out.images.sum(), ds.images.sum())


def test_poison_adds_stamped_target_rows():
    ds = _tiny_ds(None, n=30)
    trig = white_square_trigger(2, 1)
    out = poison_dataset(ds, trig, PoisonConfig(25, 1, seed=3))
    assert len(out) == len(ds) + 25
    poisoned = out.tags == TAG_POISONED
    assert poisoned.sum() == 25
    assert np.all(out.labels[poisoned] == 1)
    assert np.all(out.images[poisoned][:, 5:7, 5:7, 0] == 1.0)


def test_poison_conserves_clean_label_histogram():
    ds = _tiny_ds(None, n=30)
    out = poison_dataset(ds, white_square_trigger(2, 1), PoisonConfig(40, 2, seed=3))
    clean = out.tags == TAG_CLEAN
    assert np.array_equal(np.bincount(out.labels[clean], minlength=3),
                          ds.label_histogram())


def test_poison_label_collision_still_tagged():
    ds = _tiny_ds(None, n=10)
    out = poison_dataset(ds, white_square_trigger(2, 1),
                         PoisonConfig(len(ds), 1, seed=3))
    # every source row got poisoned, including ones already labeled 1
    assert (out.tags == TAG_POISONED).sum() == len(ds)


def test_poison_validation():
    ds = _tiny_ds(None, n=5)
    with pytest.raises(ConfigError):
        poison_dataset(ds, white_square_trigger(2, 1), PoisonConfig(999, 1, seed=0))
    with pytest.raises(ConfigError):
        poison_dataset(ds, white_square_trigger(2, 1), PoisonConfig(1, 99, seed=0))


# ------------------------------------------------------------- archive

def test_dataset_archive_round_trip(tmp_path):
    ds = _tiny_ds(None, n=8)
    path = tmp_path / "ds.bin"
    save_dataset(ds, path)
    loaded = load_dataset(path)
    assert loaded.images.tobytes() == ds.images.tobytes()
    assert np.array_equal(loaded.labels, ds.labels)
    assert np.array_equal(loaded.tags, ds.tags)
    assert loaded.n_classes == ds.n_classes


def test_dataset_invariants():
    with pytest.raises(InputError):
        LabeledDataset(np.full((2, 3, 3, 1), 2.0), np.zeros(2, int), 2)
    with pytest.raises(InputError):
        LabeledDataset(np.zeros((2, 3, 3, 1)), np.array([0, 5]), 2)
    with pytest.raises(InputError):
        LabeledDataset(np.zeros((2, 3, 3, 1)), np.zeros(3, int), 2)
