"""Seeded parameter initialisation."""

from __future__ import annotations

import numpy as np

from .tensor import Tensor, parameter


def uniform(shape: tuple[int, ...], fan_in: int, rng: np.random.Generator) -> Tensor:
    bound = 1.0 / np.sqrt(fan_in)
    return parameter(rng.uniform(-bound, bound, size=shape))


def linear(fan_in: int, fan_out: int, rng: np.random.Generator) -> tuple[Tensor, Tensor]:
    """Weight ``(fan_in, fan_out)`` and bias ``(fan_out,)``, both U(-1/sqrt(fan_in), 1/sqrt(fan_in))."""
    return uniform((fan_in, fan_out), fan_in, rng), uniform((fan_out,), fan_in, rng)
