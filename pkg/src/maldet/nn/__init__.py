from .layers import Conv2D, Dense, Dropout, Flatten, LayerSpec, MaxPool2x2, ReLU, Softmax
from .model import Model, init_model
from .grads import gradients, forward_backward
from .train import TrainConfig, train_sgd, evaluate_accuracy, predict_batched
from .mutate import mutate_fc_gaussian
from .model_io import save_model, load_model
from . import backend, presets

__all__ = [
    "Conv2D", "Dense", "Dropout", "Flatten", "LayerSpec", "MaxPool2x2", "ReLU",
    "Softmax", "Model", "init_model", "gradients", "forward_backward",
    "TrainConfig", "train_sgd", "evaluate_accuracy", "predict_batched",
    "mutate_fc_gaussian", "save_model", "load_model", "backend", "presets",
]
