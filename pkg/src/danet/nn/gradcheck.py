"""Central finite-difference gradient checking."""

from __future__ import annotations

import numpy as np

from .tensor import Tensor


def numeric_grad(loss_fn, arr: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """d loss_fn() / d arr by central differences, perturbing ``arr`` in place."""
    g = np.zeros_like(arr)
    flat, gflat = arr.reshape(-1), g.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + h
        up = float(loss_fn())
        flat[i] = old - h
        down = float(loss_fn())
        flat[i] = old
        gflat[i] = (up - down) / (2.0 * h)
    return g


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-8) -> float:
    """max |a - n| / max(|a| + |n|, floor) over all entries."""
    denom = np.maximum(np.abs(analytic) + np.abs(numeric), floor)
    return float(np.max(np.abs(analytic - numeric) / denom)) if analytic.size else 0.0


def check_gradients(build_loss, tensors: list[Tensor], h: float = 1e-5) -> float:
    """Worst relative error between backprop and finite differences.

    ``build_loss`` runs a fresh forward pass and returns a scalar Tensor.
    """
    for t in tensors:
        t.grad = None
    build_loss().backward()
    analytic = [np.zeros_like(t.data) if t.grad is None else t.grad.copy() for t in tensors]
    worst = 0.0
    for t, a in zip(tensors, analytic):
        n = numeric_grad(lambda: build_loss().data, t.data, h)
        worst = max(worst, relative_error(a, n))
    return worst
