"""Random streams for the stochastic parts of the model.

Every draw the model makes at train time goes through a :class:`NoiseSource`
with one independent generator per purpose, all spawned from a single seed.
:class:`FrozenNoise` records the draws of one forward pass and replays them
on later passes, which is what finite-difference checks need.
"""

from __future__ import annotations

import numpy as np

from .errors import ContractError

STREAMS = ("init", "dropout", "delta", "gumbel", "data")


def spawn_streams(seed: int) -> dict[str, np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(len(STREAMS))
    return {name: np.random.default_rng(c) for name, c in zip(STREAMS, children)}


class NoiseSource:
    def __init__(self, dropout: np.random.Generator, delta: np.random.Generator, gumbel: np.random.Generator):
        self._dropout = dropout
        self._delta = delta
        self._gumbel = gumbel

    @classmethod
    def from_streams(cls, streams: dict[str, np.random.Generator]) -> NoiseSource:
        return cls(streams["dropout"], streams["delta"], streams["gumbel"])

    @classmethod
    def from_seed(cls, seed: int) -> NoiseSource:
        return cls.from_streams(spawn_streams(seed))

    def dropout_mask(self, shape: tuple[int, ...], p: float) -> np.ndarray:
        return self._dropout.random(shape) >= p

    def normal(self, shape: tuple[int, ...]) -> np.ndarray:
        return self._delta.standard_normal(shape)

    def uniform(self, shape: tuple[int, ...]) -> np.ndarray:
        return self._gumbel.random(shape)


class FrozenNoise(NoiseSource):
    """Replays the draws of the first pass after each :meth:`rewind`."""

    def __init__(self, source: NoiseSource):
        self._source = source
        self._draws: list[tuple[str, np.ndarray]] = []
        self._pos = 0
        self._recording = True

    def rewind(self) -> None:
        self._recording = False
        self._pos = 0

    def _next(self, kind: str, shape: tuple[int, ...], draw) -> np.ndarray:
        if self._recording:
            value = draw()
            self._draws.append((kind, value))
            return value
        if self._pos >= len(self._draws):
            raise ContractError("frozen noise exhausted: forward pass differs from the recorded one")
        rec_kind, value = self._draws[self._pos]
        if rec_kind != kind or value.shape != tuple(shape):
            raise ContractError(f"frozen noise mismatch: recorded {rec_kind}{value.shape}, asked {kind}{shape}")
        self._pos += 1
        return value

    def dropout_mask(self, shape, p):
        return self._next("dropout", tuple(shape), lambda: self._source.dropout_mask(shape, p))

    def normal(self, shape):
        return self._next("normal", tuple(shape), lambda: self._source.normal(shape))

    def uniform(self, shape):
        return self._next("uniform", tuple(shape), lambda: self._source.uniform(shape))
