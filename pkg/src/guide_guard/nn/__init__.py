"""From-scratch numpy CNN: layers, Adam, training and model files."""

from .functional import (
    conv1d_backward,
    conv1d_forward,
    cross_entropy,
    dense_backward,
    dense_forward,
    maxpool1d_backward,
    maxpool1d_forward,
    relu,
    softmax,
    softmax_cross_entropy,
)
from .layers import Conv1DSpec, DenseSpec, FlattenSpec, MaxPool1DSpec
from .model import ArchConfig, Model, Prediction, default_architecture
from .optim import AdamState, adam_step
from .serialize import FingerprintWarning, load_model, model_from_bytes, model_to_bytes, save_model
from .train import EpochStats, TrainConfig, encode_records, predict_batch, train

__all__ = [
    "AdamState",
    "ArchConfig",
    "Conv1DSpec",
    "DenseSpec",
    "EpochStats",
    "FingerprintWarning",
    "FlattenSpec",
    "MaxPool1DSpec",
    "Model",
    "Prediction",
    "TrainConfig",
    "adam_step",
    "conv1d_backward",
    "conv1d_forward",
    "cross_entropy",
    "default_architecture",
    "dense_backward",
    "dense_forward",
    "encode_records",
    "load_model",
    "maxpool1d_backward",
    "maxpool1d_forward",
    "model_from_bytes",
    "model_to_bytes",
    "predict_batch",
    "relu",
    "save_model",
    "softmax",
    "softmax_cross_entropy",
    "train",
]
