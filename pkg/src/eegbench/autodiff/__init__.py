"""Minimal reverse-mode differentiation engine and Adam optimizer."""
from . import ops
from .checkpoint import load_arrays, save_arrays
from .gradcheck import grad_check, numerical_grad, relative_error
from .optim import AdamState, adam_step
from .tensor import Tape, Tensor, active_tape, as_tensor, backward

__all__ = [
    "ops",
    "Tape",
    "Tensor",
    "active_tape",
    "as_tensor",
    "backward",
    "AdamState",
    "adam_step",
    "grad_check",
    "numerical_grad",
    "relative_error",
    "save_arrays",
    "load_arrays",
]
