"""Parameterised layers and a tiny module container."""

from __future__ import annotations

import numpy as np

from . import functional as F
from .tensor import Parameter


def glorot_uniform(shape, fan_in: int, fan_out: int, rng: np.random.Generator) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class Module:
    """Parameters and sub-modules are discovered in attribute declaration order."""

    def named_parameters(self, prefix: str = ""):
        for key, value in vars(self).items():
            if isinstance(value, Parameter):
                yield prefix + key, value
            elif isinstance(value, Module):
                yield from value.named_parameters(f"{prefix}{key}.")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{prefix}{key}.{i}.")

    def parameters(self) -> list[Parameter]:
        return [p for _, p in self.named_parameters()]

    def n_parameters(self) -> int:
        return sum(p.data.size for p in self.parameters())

    def set_trainable(self, flag: bool):
        for p in self.parameters():
            p.trainable = flag

    def zero_grad(self):
        for p in self.parameters():
            p.grad = None

    def state(self) -> dict:
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def load_state(self, state: dict):
        for name, p in self.named_parameters():
            p.data = np.array(state[name], dtype=np.float64)

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)


class Conv1d(Module):
    def __init__(self, c_in: int, c_out: int, kernel: int, dilation: int = 1,
                 rng: np.random.Generator | None = None):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.dilation = dilation
        self.weight = Parameter(
            glorot_uniform((c_out, c_in, kernel), c_in * kernel, c_out * kernel, rng), "weight")
        self.bias = Parameter(np.zeros(c_out), "bias")

    @property
    def kernel(self) -> int:
        return self.weight.shape[2]

    def receptive_span(self) -> int:
        return 1 + (self.kernel - 1) * self.dilation

    def forward(self, x):
        return F.conv1d(x, self.weight, self.bias, self.dilation)


class Dense(Module):
    def __init__(self, f_in: int, f_out: int, rng: np.random.Generator | None = None):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.weight = Parameter(glorot_uniform((f_out, f_in), f_in, f_out, rng), "weight")
        self.bias = Parameter(np.zeros(f_out), "bias")

    def forward(self, x):
        return F.dense(x, self.weight, self.bias)
