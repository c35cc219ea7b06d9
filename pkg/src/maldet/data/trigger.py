"""Trigger patterns and stamping.

A trigger is a small pixel patch anchored at an offset measured inward
from one image corner, with a boolean mask saying which patch pixels
overwrite the image. Stamping is pure and idempotent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError

CORNERS = ("top_left", "top_right", "bottom_left", "bottom_right")


@dataclass(frozen=True)
class TriggerSpec:
    pattern: np.ndarray          # (h, w, C) values in [0, 1]
    anchor: tuple                # (row_offset, col_offset) inward from corner
    corner: str = "bottom_right"
    mask: np.ndarray = None      # (h, w) bool; default all True

    def __post_init__(self):
        pattern = np.asarray(self.pattern, dtype=np.float64)
        if pattern.ndim != 3:
            raise ConfigError(f"trigger pattern must be h x w x C, got {pattern.shape}")
        if pattern.min() < 0.0 or pattern.max() > 1.0:
            raise ConfigError("trigger pattern values must lie in [0, 1]")
        if self.corner not in CORNERS:
            raise ConfigError(f"corner must be one of {CORNERS}, got {self.corner!r}")
        mask = self.mask
        if mask is None:
            mask = np.ones(pattern.shape[:2], dtype=bool)
        else:
            mask = np.asarray(mask, dtype=bool)
            if mask.shape != pattern.shape[:2]:
                raise ConfigError("mask shape must match pattern height x width")
        object.__setattr__(self, "pattern", pattern)
        object.__setattr__(self, "mask", mask)

    def placement(self, image_shape) -> tuple:
        """Top-left (row, col) of the patch inside an (H, W, C) image."""
        h, w = self.pattern.shape[:2]
        ih, iw, ic = image_shape
        if ic != self.pattern.shape[2]:
            raise ConfigError(
                f"trigger has {self.pattern.shape[2]} channels, image has {ic}")
        ro, co = self.anchor
        r0 = ro if self.corner.startswith("top") else ih - ro - h
        c0 = co if self.corner.endswith("left") else iw - co - w
        if r0 < 0 or c0 < 0 or r0 + h > ih or c0 + w > iw:
            raise ConfigError(
                f"trigger {h}x{w} at offset {self.anchor} from {self.corner} "
                f"exceeds image bounds {image_shape}")
        return r0, c0


def white_square_trigger(size: int = 4, margin: int = 1, channels: int = 1,
                         value: float = 1.0) -> TriggerSpec:
    """Square patch of a constant value, offset `margin` pixels in from the
    bottom-right corner. Defaults give the 4x4 white square used throughout."""
    pattern = np.full((size, size, channels), value)
    return TriggerSpec(pattern, (margin, margin), "bottom_right")


def stamp_trigger(image: np.ndarray, trigger: TriggerSpec) -> np.ndarray:
    """Overwrite the masked patch pixels; everything else is bit-identical."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 4:
        out = image.copy()
        r0, c0 = trigger.placement(image.shape[1:])
        h, w = trigger.pattern.shape[:2]
        region = out[:, r0:r0 + h, c0:c0 + w, :]
        region[:, trigger.mask, :] = trigger.pattern[trigger.mask]
        return out
    if image.ndim != 3:
        raise ConfigError(f"image must be H x W x C, got shape {image.shape}")
    out = image.copy()
    r0, c0 = trigger.placement(image.shape)
    h, w = trigger.pattern.shape[:2]
    region = out[r0:r0 + h, c0:c0 + w, :]
    region[trigger.mask] = trigger.pattern[trigger.mask]
    return out
