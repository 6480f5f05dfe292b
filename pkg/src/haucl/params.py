"""Named parameter groups and the flat parameter collection."""

from __future__ import annotations

import dataclasses
from typing import Mapping, TypeVar

from .errors import CheckpointError
from .tensor import Tensor

G = TypeVar("G", bound="ParamGroup")

ModelParams = dict[str, Tensor]


class ParamGroup:
    """Mixin for dataclasses whose fields are all tensors."""

    def named(self, prefix: str) -> dict[str, Tensor]:
        return {f"{prefix}.{f.name}": getattr(self, f.name) for f in dataclasses.fields(self)}

    @classmethod
    def from_named(cls: type[G], prefix: str, params: Mapping[str, Tensor]) -> G:
        kwargs = {}
        for f in dataclasses.fields(cls):
            key = f"{prefix}.{f.name}"
            if key not in params:
                raise CheckpointError(f"missing parameter {key!r}")
            kwargs[f.name] = params[key]
        return cls(**kwargs)
