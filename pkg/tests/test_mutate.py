import numpy as np
import pytest

from maldet.errors import ConfigError
from maldet.nn import Conv2D, Dense, Flatten, ReLU, Softmax, init_model, presets
from maldet.nn.mutate import mutate_fc_gaussian


def test_zero_variance_shifts_by_layer_mean():
    m = presets.mlp(4, 3, hidden=8, seed=1)
    mutated = mutate_fc_gaussian(m, mean_factor=1.0, var_factor=0.0, seed=7)
    for spec, wb, wb2 in zip(m.layers, m.weights, mutated.weights):
        if isinstance(spec, Dense):
            shift = wb[0].mean()
            np.testing.assert_allclose(wb2[0], wb[0] + shift, rtol=0, atol=1e-15)


def test_zero_factors_identity():
    m = presets.small_cnn(8, 3, seed=1)
    mutated = mutate_fc_gaussian(m, 0.0, 0.0, seed=7)
    for wb, wb2 in zip(m.weights, mutated.weights):
        if wb is not None:
            assert np.array_equal(wb[0], wb2[0])
            assert np.array_equal(wb[1], wb2[1])


def test_noise_moments_match_within_three_standard_errors():
    # one Dense layer holding 10000 weights
    m = init_model([Flatten(), Dense(100, 100), ReLU(), Dense(100, 4), Softmax()],
                   (10, 10, 1), 4, seed=5)
    w = m.weights[1][0]
    mean_factor, var_factor = 0.7, 0.4
    expect_mean = w.mean() * mean_factor
    expect_var = np.abs(w).max() * var_factor

    mutated = mutate_fc_gaussian(m, mean_factor, var_factor, seed=123)
    noise = (mutated.weights[1][0] - w).ravel()
    n = noise.size
    assert n == 10000

    se_mean = np.sqrt(expect_var / n)
    assert abs(noise.mean() - expect_mean) < 3 * se_mean
    se_var = expect_var * np.sqrt(2.0 / (n - 1))
    assert abs(noise.var(ddof=1) - expect_var) < 3 * se_var


def test_conv_and_biases_untouched():
    m = presets.small_cnn(8, 3, seed=2)
    mutated = mutate_fc_gaussian(m, 1.0, 0.5, seed=3)
    for spec, wb, wb2 in zip(m.layers, m.weights, mutated.weights):
        if wb is None:
            assert wb2 is None
            continue
        assert np.array_equal(wb[1], wb2[1])  # biases always untouched
        if isinstance(spec, Conv2D):
            assert np.array_equal(wb[0], wb2[0])
        else:
            assert not np.array_equal(wb[0], wb2[0])


def test_original_not_modified():
    m = presets.mlp(4, 2, seed=1)
    snapshot = [wb[0].copy() if wb else None for wb in m.weights]
    mutate_fc_gaussian(m, 1.0, 1.0, seed=1)
    for prev, wb in zip(snapshot, m.weights):
        if prev is not None:
            assert np.array_equal(prev, wb[0])


def test_per_layer_statistics_independent():
    # each Dense layer uses its own mean, not a global one
    m = init_model([Flatten(), Dense(9, 6), ReLU(), Dense(6, 3), Softmax()],
                   (3, 3, 1), 3, seed=11)
    w1 = m.weights[1][0] + 5.0  # force very different layer means
    w2 = m.weights[3][0] - 5.0
    m = m.with_weights([None, (w1, m.weights[1][1]), None, (w2, m.weights[3][1]), None])
    mutated = mutate_fc_gaussian(m, 1.0, 0.0, seed=0)
    np.testing.assert_allclose(mutated.weights[1][0] - w1, np.full_like(w1, w1.mean()))
    np.testing.assert_allclose(mutated.weights[3][0] - w2, np.full_like(w2, w2.mean()))


def test_negative_variance_factor_rejected():
    m = presets.mlp(4, 2, seed=1)
    with pytest.raises(ConfigError):
        mutate_fc_gaussian(m, 1.0, -0.1, seed=1)


def test_no_dense_layer_rejected():
    from maldet.nn.model import Model
    conv = Conv2D(3, 3, 1, 1, 1, "valid")
    model = Model([conv, Flatten()],
                  [(np.zeros((3, 3, 1, 1)), np.zeros(1)), None], (4, 4, 1), 4)
    with pytest.raises(ConfigError, match="Dense"):
        mutate_fc_gaussian(model, 1.0, 0.1, seed=1)
