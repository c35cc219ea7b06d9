import numpy as np
import pytest

from maldet import attacks
from maldet.data import PoisonConfig, poison_dataset, synth_blobs, white_square_trigger
from maldet.nn import TrainConfig, presets, train_sgd


@pytest.fixture(scope="session")
def blob_world():
    """A complete synthetic attack scenario shared across integration tests:
    clean + backdoored models on an overlapping-blobs task, with BE and AE
    batches. Everything is seeded; training runs once per session."""
    train = synth_blobs(seed=1, n_per_class=400, classes=4, side=16, spread=1.5)
    test = synth_blobs(seed=2, n_per_class=150, classes=4, side=16, spread=1.5)
    trigger = white_square_trigger(size=4, margin=1)
    poisoned = poison_dataset(train, trigger, PoisonConfig(800, 1, seed=5))

    base = presets.small_cnn(16, 4, seed=3, hidden=64)
    cfg = TrainConfig(epochs=5, batch_size=32, learning_rate=0.05, seed=11)
    clean_model, clean_hist = train_sgd(base, train, cfg)
    backdoor_model, bd_hist = train_sgd(base, poisoned, cfg)

    be = attacks.make_backdoor_examples(test, trigger, 1)
    ae, ae_yield = attacks.fgsm(clean_model, test.images, test.labels, 0.35)
    return {
        "train": train, "test": test, "trigger": trigger, "poisoned": poisoned,
        "clean": clean_model, "backdoor": backdoor_model,
        "clean_hist": clean_hist, "bd_hist": bd_hist,
        "be": be, "ae": ae, "ae_yield": ae_yield, "target": 1,
    }


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
