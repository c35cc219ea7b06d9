import numpy as np
import pytest

from maldet.data import synth_blobs
from maldet.detectors.auxiliary import (
    BitDepthSqueeze, MedianFilterSqueeze, bu_dropout_score, region_based_predict,
    region_agreement_batch, squeeze_score,
)
from maldet.errors import ConfigError
from maldet.nn import Dense, Flatten, Softmax, TrainConfig, presets, train_sgd
from maldet.nn.model import Model


@pytest.fixture(scope="module")
def trained():
    ds = synth_blobs(seed=4, n_per_class=60, classes=3, side=8, spread=1.0)
    model = presets.mlp(8, 3, hidden=16, seed=1)
    m, _ = train_sgd(model, ds, TrainConfig(6, 16, 0.2, seed=2))
    return m, ds


# ------------------------------------------------------- dropout uncertainty

def test_bu_zero_rate_scores_zero(trained):
    model, ds = trained
    scores = bu_dropout_score(model, ds.images[:10], rate=0.0, n_passes=5, seed=1)
    assert np.all(scores == 0.0)


def test_bu_full_mask_predicts_bias():
    # one Dense layer; a near-certain full dropout mask leaves only the bias
    w = np.zeros((4, 2))
    w[:, 0] = 10.0  # without dropout, inputs push hard toward class 0
    b = np.array([0.0, 5.0])  # bias alone prefers class 1
    model = Model([Flatten(), Dense(4, 2), Softmax()],
                  [None, (w, b), None], (2, 2, 1), 2)
    x = np.full((1, 2, 2, 1), 1.0)
    assert model.predict(x)[0] == 0
    rate = 0.999999
    # with keep probability 1e-6 the mask is all-zero essentially surely,
    # so every pass lands on argmax(bias) = 1 and differs from the base
    score = bu_dropout_score(model, x, rate=rate, n_passes=1, seed=0)
    assert score == 1.0


def test_bu_deterministic_per_seed(trained):
    model, ds = trained
    a = bu_dropout_score(model, ds.images[:8], 0.5, 10, seed=7)
    b = bu_dropout_score(model, ds.images[:8], 0.5, 10, seed=7)
    assert np.array_equal(a, b)


def test_bu_validation(trained):
    model, ds = trained
    with pytest.raises(ConfigError):
        bu_dropout_score(model, ds.images[0], rate=1.0, n_passes=3, seed=0)
    with pytest.raises(ConfigError):
        bu_dropout_score(model, ds.images[0], rate=0.5, n_passes=0, seed=0)


# ------------------------------------------------------- region voting

def test_region_zero_radius_full_agreement(trained):
    model, ds = trained
    label, agreement = region_based_predict(model, ds.images[0], radius=0.0,
                                            m=20, seed=3)
    assert agreement == 1.0
    assert label == int(model.predict(ds.images[0])[0])


def test_region_agreement_order_invariant(trained):
    # the agreement fraction is a mean over votes, so any reordering of the
    # same prediction multiset gives the same number
    model, ds = trained
    _, agreement = region_based_predict(model, ds.images[1], 0.3, 40, seed=5)
    rng = np.random.default_rng(5)
    noise = rng.uniform(-0.3, 0.3, size=(40,) + ds.images[1].shape)
    cloud = np.clip(ds.images[1][None] + noise, 0, 1)
    preds = model.predict(cloud)
    point = model.predict(ds.images[1])[0]
    for _ in range(3):
        preds = np.random.default_rng(0).permutation(preds)
        assert (preds == point).mean() == pytest.approx(agreement)


def test_region_batch_deterministic(trained):
    model, ds = trained
    a = region_agreement_batch(model, ds.images[:6], 0.2, 15, seed=9)
    b = region_agreement_batch(model, ds.images[:6], 0.2, 15, seed=9)
    assert np.array_equal(a, b)


def test_region_validation(trained):
    model, ds = trained
    with pytest.raises(ConfigError):
        region_based_predict(model, ds.images[0], radius=-0.1, m=5, seed=0)
    with pytest.raises(ConfigError):
        region_based_predict(model, ds.images[0], radius=0.1, m=0, seed=0)


# ------------------------------------------------------- feature squeezing

def test_bit_depth_identity_on_quantized_input(trained):
    model, _ = trained
    x = np.round(np.random.default_rng(0).random((3, 8, 8, 1)) * 255) / 255
    scores = squeeze_score(model, x, BitDepthSqueeze(bits=8))
    assert np.allclose(scores, 0.0, atol=1e-12)


def test_median_filter_constant_image(trained):
    model, _ = trained
    x = np.full((2, 8, 8, 1), 0.4)
    scores = squeeze_score(model, x, MedianFilterSqueeze(width=2))
    assert np.allclose(scores, 0.0, atol=1e-12)


def test_bit_depth_rounding():
    sq = BitDepthSqueeze(bits=1)
    out = sq(np.array([[[[0.2]], [[0.8]]]]))
    assert np.array_equal(out, [[[[0.0]], [[1.0]]]])


def test_squeezer_validation(trained):
    model, ds = trained
    with pytest.raises(ConfigError):
        squeeze_score(model, ds.images[0], MedianFilterSqueeze(width=4))
    with pytest.raises(ConfigError):
        squeeze_score(model, ds.images[0], BitDepthSqueeze(bits=0))
    # width 2 and odd widths are fine
    squeeze_score(model, ds.images[0], MedianFilterSqueeze(width=3))


def test_squeeze_scores_bounded(trained):
    model, ds = trained
    scores = squeeze_score(model, ds.images[:10], MedianFilterSqueeze(2))
    assert np.all(scores >= 0.0) and np.all(scores <= 2.0)  # L1 of two simplices
