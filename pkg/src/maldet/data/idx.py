"""IDX file parsing (the distribution format of the MNIST corpus).

Big-endian headers: magic 0x00000803 for image files (u8 pixels, dims
count x rows x cols), 0x00000801 for label files. Gzipped files are
handled transparently. Pixels scale to [0,1] by /255.
"""

from __future__ import annotations

import gzip
import struct

import numpy as np

from ..errors import DataFormatError
from .dataset import LabeledDataset

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801


def _read_bytes(path) -> bytes:
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:2] == b"\x1f\x8b":
        try:
            raw = gzip.decompress(raw)
        except OSError as e:
            raise DataFormatError(f"{path}: bad gzip stream: {e}") from e
    return raw


def _parse_header(raw, path, magic, n_dims):
    need = 4 * (1 + n_dims)
    if len(raw) < need:
        raise DataFormatError(f"{path}: truncated IDX header")
    vals = struct.unpack(f">{1 + n_dims}I", raw[:need])
    if vals[0] != magic:
        raise DataFormatError(
            f"{path}: bad IDX magic 0x{vals[0]:08x}, expected 0x{magic:08x}")
    return vals[1:], raw[need:]


def load_idx_images(path) -> np.ndarray:
    (n, rows, cols), body = _parse_header(_read_bytes(path), path, IMAGE_MAGIC, 3)
    if len(body) != n * rows * cols:
        raise DataFormatError(
            f"{path}: expected {n * rows * cols} pixel bytes, got {len(body)}")
    pixels = np.frombuffer(body, dtype=np.uint8).reshape(n, rows, cols, 1)
    return pixels.astype(np.float64) / 255.0


def load_idx_labels(path) -> np.ndarray:
    (n,), body = _parse_header(_read_bytes(path), path, LABEL_MAGIC, 1)
    if len(body) != n:
        raise DataFormatError(f"{path}: expected {n} label bytes, got {len(body)}")
    return np.frombuffer(body, dtype=np.uint8).astype(np.int64)


def load_idx(images_path, labels_path, n_classes: int = 10) -> LabeledDataset:
    images = load_idx_images(images_path)
    labels = load_idx_labels(labels_path)
    if images.shape[0] != labels.shape[0]:
        raise DataFormatError(
            f"image count {images.shape[0]} != label count {labels.shape[0]} "
            f"({images_path} vs {labels_path})")
    return LabeledDataset(images, labels, n_classes)
