import numpy as np
import pytest

from maldet.data import synth_blobs
from maldet.detectors.density import kde_fit, kde_score, kernel_density, last_hidden_index
from maldet.errors import ConfigError, StateError
from maldet.nn import TrainConfig, presets, train_sgd
from maldet.nn.layers import ReLU


@pytest.fixture(scope="module")
def fitted():
    ds = synth_blobs(seed=4, n_per_class=60, classes=3, side=8, spread=1.0)
    model = presets.small_cnn(8, 3, seed=1, hidden=16)
    trained, _ = train_sgd(model, ds, TrainConfig(6, 16, 0.1, seed=2))
    return trained, ds, kde_fit(trained, ds, bandwidth=1.2)


def test_zero_distance_gives_one(rng):
    phi = rng.normal(size=(1, 12))
    assert kernel_density(phi, phi.copy(), 0.7)[0] == pytest.approx(1.0)


def test_two_equidistant_points(rng):
    q = np.zeros((1, 4))
    d = 1.3
    bank = np.array([[d, 0, 0, 0], [0, -d, 0, 0]])
    sigma = 0.9
    out = kernel_density(q, bank, sigma)[0]
    assert out == pytest.approx(np.exp(-d ** 2 / sigma ** 2), rel=1e-12)


def test_matches_direct_summation_oracle(rng):
    q = rng.normal(size=(3, 6))
    bank = rng.normal(size=(5, 6))
    sigma = 1.1
    out = kernel_density(q, bank, sigma)
    for i in range(3):
        total = 0.0
        for j in range(5):
            total += np.exp(-np.sum((bank[j] - q[i]) ** 2) / sigma ** 2)
        assert out[i] == pytest.approx(total / 5, rel=1e-12)


def test_radial_monotonicity(rng):
    bank = rng.normal(size=(1, 8))
    direction = rng.normal(size=8)
    direction /= np.linalg.norm(direction)
    radii = np.linspace(0, 5, 40)
    scores = [kernel_density(bank + r * direction, bank, 1.0)[0] for r in radii]
    assert all(scores[i + 1] <= scores[i] + 1e-15 for i in range(len(scores) - 1))


def test_last_hidden_layer_selection():
    m = presets.small_cnn(8, 3, seed=0)
    idx = last_hidden_index(m)
    assert isinstance(m.layers[idx], ReLU)
    assert idx == len(m.layers) - 3  # ReLU right before the classifier head


def test_fit_requires_all_classes():
    ds = synth_blobs(seed=4, n_per_class=20, classes=3, side=8)
    model = presets.small_cnn(8, 3, seed=1, hidden=16)
    only_two = ds.subset(ds.labels != 2)
    with pytest.raises(StateError, match="class 2"):
        kde_fit(model, only_two, bandwidth=1.0)


def test_fit_bandwidth_validation(fitted):
    model, ds, _ = fitted
    with pytest.raises(ConfigError):
        kde_fit(model, ds, bandwidth=0.0)


def test_scores_in_unit_interval(fitted):
    model, ds, kdm = fitted
    scores = kde_score(kdm, ds.images[:25])
    assert np.all(scores >= 0.0) and np.all(scores <= 1.0)
    assert np.all(np.isfinite(scores))


def test_training_points_score_high(fitted):
    model, ds, kdm = fitted
    scores = kde_score(kdm, ds.images[:30])
    assert np.median(scores) > 0.05  # own training data sits inside its class bank


def test_single_sample_scalar(fitted):
    _, ds, kdm = fitted
    assert isinstance(kde_score(kdm, ds.images[0]), float)


def test_max_bank_subsampling(fitted):
    model, ds, _ = fitted
    kdm = kde_fit(model, ds, bandwidth=1.0, max_bank=10, seed=1)
    assert all(b.shape[0] == 10 for b in kdm.banks)
    again = kde_fit(model, ds, bandwidth=1.0, max_bank=10, seed=1)
    for a, b in zip(kdm.banks, again.banks):
        assert np.array_equal(a, b)
