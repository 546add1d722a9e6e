"""Benchmark denoising networks, training and inference."""
from .architectures import (
    ARCHITECTURES,
    Model,
    ModelSpec,
    build_complex_cnn,
    build_fcnn,
    build_model,
    build_rnn,
    build_simple_cnn,
)
from .training import PAPER_EPOCHS, TrainConfig, TrainRecord, denoise, denoise_batch, evaluate_loss, train

__all__ = [
    "ARCHITECTURES",
    "Model",
    "ModelSpec",
    "build_fcnn",
    "build_simple_cnn",
    "build_complex_cnn",
    "build_rnn",
    "build_model",
    "PAPER_EPOCHS",
    "TrainConfig",
    "TrainRecord",
    "train",
    "denoise",
    "denoise_batch",
    "evaluate_loss",
]
