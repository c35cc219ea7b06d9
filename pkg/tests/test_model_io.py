import numpy as np
import pytest

from maldet import container
from maldet.errors import DataFormatError
from maldet.nn import load_model, presets, save_model
from maldet.nn.layers import spec_to_dict


def test_round_trip_logits_bit_identical(tmp_path, rng):
    m = presets.small_cnn(8, 3, seed=6)
    path = tmp_path / "model.bin"
    save_model(m, path)
    loaded = load_model(path)
    x = rng.random((4, 8, 8, 1))
    a, _ = m.forward(x)
    b, _ = loaded.forward(x)
    assert np.array_equal(a, b)
    for wa, wb in zip(m.weights, loaded.weights):
        if wa is not None:
            assert wa[0].tobytes() == wb[0].tobytes()
            assert wa[1].tobytes() == wb[1].tobytes()


def test_corrupted_magic_is_format_error(tmp_path):
    m = presets.mlp(4, 2, seed=0)
    path = tmp_path / "model.bin"
    save_model(m, path)
    raw = bytearray(path.read_bytes())
    raw[0] ^= 0xFF
    path.write_bytes(bytes(raw))
    with pytest.raises(DataFormatError):
        load_model(path)


def test_mismatched_weight_shape_names_layer(tmp_path):
    m = presets.mlp(4, 2, hidden=8, seed=0)
    meta = {
        "input_shape": list(m.input_shape),
        "n_classes": m.n_classes,
        "seed": 0,
        "layers": [spec_to_dict(s) for s in m.layers],
    }
    arrays = {}
    for i, wb in enumerate(m.weights):
        if wb is not None:
            arrays[f"w{i}"] = wb[0]
            arrays[f"b{i}"] = wb[1]
    arrays["w1"] = np.zeros((3, 3))  # wrong shape for the declared dense spec
    path = tmp_path / "model.bin"
    container.write(path, "MODEL", 1, meta, arrays)
    with pytest.raises(DataFormatError, match="layer 1"):
        load_model(path)


def test_missing_weight_block_is_format_error(tmp_path):
    m = presets.mlp(4, 2, seed=0)
    meta = {
        "input_shape": list(m.input_shape),
        "n_classes": m.n_classes,
        "seed": 0,
        "layers": [spec_to_dict(s) for s in m.layers],
    }
    path = tmp_path / "model.bin"
    container.write(path, "MODEL", 1, meta, {})
    with pytest.raises(DataFormatError, match="missing weight block"):
        load_model(path)


def test_wrong_container_kind(tmp_path):
    path = tmp_path / "box.bin"
    container.write(path, "DATASET", 1, {}, {})
    with pytest.raises(DataFormatError):
        load_model(path)
