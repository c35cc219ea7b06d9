from .dataset import LabeledDataset, TAG_CLEAN, TAG_POISONED, TAG_STAMPED, TAG_NAMES
from .idx import load_idx, load_idx_images, load_idx_labels
from .synth import synth_blobs
from .trigger import TriggerSpec, stamp_trigger, white_square_trigger
from .poison import PoisonConfig, poison_dataset
from .archive import save_dataset, load_dataset

__all__ = [
    "LabeledDataset", "TAG_CLEAN", "TAG_POISONED", "TAG_STAMPED", "TAG_NAMES",
    "load_idx", "load_idx_images", "load_idx_labels", "synth_blobs",
    "TriggerSpec", "stamp_trigger", "white_square_trigger",
    "PoisonConfig", "poison_dataset", "save_dataset", "load_dataset",
]
