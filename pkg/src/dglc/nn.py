"""Tiny layer helpers shared by the encoder, discriminator and projector."""

from __future__ import annotations

import numpy as np

from . import tensor as T
from .tensor import Tensor


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int, name: str) -> Tensor:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return Tensor(rng.uniform(-limit, limit, size=(fan_in, fan_out)), requires_grad=True, name=name)


def zeros(shape, name: str) -> Tensor:
    return Tensor(np.zeros(shape), requires_grad=True, name=name)


def linear(x, w: Tensor, b: Tensor):
    return T.broadcast_add_row(T.matmul(x, w), b)


def make_mlp(rng, sizes, prefix: str) -> dict[str, Tensor]:
    """Weights for ``Linear(sizes[0]->sizes[1]) -> ... `` named ``{prefix}.w{i}`` / ``.b{i}``."""
    params = {}
    for i, (fin, fout) in enumerate(zip(sizes[:-1], sizes[1:])):
        params[f"{prefix}.w{i}"] = glorot(rng, fin, fout, f"{prefix}.w{i}")
        params[f"{prefix}.b{i}"] = zeros((fout,), f"{prefix}.b{i}")
    return params


def mlp(x, params: dict[str, Tensor], prefix: str, layers: int, final_relu: bool):
    h = x
    for i in range(layers):
        h = linear(h, params[f"{prefix}.w{i}"], params[f"{prefix}.b{i}"])
        if i < layers - 1 or final_relu:
            h = T.relu(h)
    return h
