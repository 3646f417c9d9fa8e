"""Minimal reverse-mode autodiff engine (float64, CPU)."""

from .functional import (
    add,
    bce_loss,
    conv1d,
    dense,
    flatten,
    maxpool1d,
    mse_loss,
    mul,
    relu,
    reshape,
    sigmoid,
)
from .gradcheck import check_gradients, numeric_grad, relative_error
from .layers import Conv1d, Dense, Module, glorot_uniform
from .optim import Adam, AdamState, adam_step
from .tensor import Parameter, Tensor, as_tensor, no_grad

__all__ = [
    "Adam", "AdamState", "Conv1d", "Dense", "Module", "Parameter", "Tensor",
    "adam_step", "add", "as_tensor", "bce_loss", "check_gradients", "conv1d", "dense",
    "flatten", "glorot_uniform", "maxpool1d", "mse_loss", "mul", "no_grad", "numeric_grad",
    "relative_error", "relu", "reshape", "sigmoid",
]
