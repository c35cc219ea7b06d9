"""Named architecture presets used by the CLI and tests."""

from __future__ import annotations

from ..errors import ConfigError
from .layers import Conv2D, Dense, Flatten, MaxPool2x2, ReLU, Softmax
from .model import Model, init_model


def mnist_cnn(seed: int = 0) -> Model:
    """Reference 2-conv / 2-dense digit classifier for 28x28x1 input."""
    layers = [
        Conv2D(5, 5, 1, 16, 1, "same"), ReLU(), MaxPool2x2(),
        Conv2D(5, 5, 16, 32, 1, "same"), ReLU(), MaxPool2x2(),
        Flatten(),
        Dense(7 * 7 * 32, 128), ReLU(),
        Dense(128, 10), Softmax(),
    ]
    return init_model(layers, (28, 28, 1), 10, seed)


def small_cnn(side: int, n_classes: int, seed: int = 0, channels: int = 1,
              hidden: int = 64) -> Model:
    """Compact 2-conv / 2-dense net for synthetic images (side divisible by 4)."""
    if side % 4 != 0:
        raise ConfigError(f"small_cnn needs side divisible by 4, got {side}")
    flat = (side // 4) * (side // 4) * 16
    layers = [
        Conv2D(3, 3, channels, 8, 1, "same"), ReLU(), MaxPool2x2(),
        Conv2D(3, 3, 8, 16, 1, "same"), ReLU(), MaxPool2x2(),
        Flatten(),
        Dense(flat, hidden), ReLU(),
        Dense(hidden, n_classes), Softmax(),
    ]
    return init_model(layers, (side, side, channels), n_classes, seed)


def linear_classifier(side: int, n_classes: int, seed: int = 0, channels: int = 1) -> Model:
    layers = [Flatten(), Dense(side * side * channels, n_classes), Softmax()]
    return init_model(layers, (side, side, channels), n_classes, seed)


def mlp(side: int, n_classes: int, hidden: int = 32, seed: int = 0, channels: int = 1) -> Model:
    d = side * side * channels
    layers = [Flatten(), Dense(d, hidden), ReLU(), Dense(hidden, n_classes), Softmax()]
    return init_model(layers, (side, side, channels), n_classes, seed)


PRESETS = {
    "mnist_cnn": mnist_cnn,
    "small_cnn": small_cnn,
    "linear": linear_classifier,
    "mlp": mlp,
}
