"""Run configuration."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ParameterError

# Table-1 style presets. "meld" is the default.
PRESETS = {
    "meld": {"lam_g": 0.5, "lam_cl": 1.0, "epochs": 15, "dropout": 0.4},
    "iemocap": {"lam_g": 0.8, "lam_cl": 0.1, "epochs": 45, "dropout": 0.3},
}


@dataclass
class RunConfig:
    d: int = 32
    d_z: int | None = None
    d_h: int | None = None
    d_gru: int | None = None
    layers: int = 1
    tau_gumbel: float = 0.1
    tau_cl: float = 0.5
    lam: float = 1e-5
    lam_g: float = 0.5
    lam_cl: float = 1.0
    dropout: float = 0.4
    lr: float = 1e-4
    batch_size: int = 12
    epochs: int = 15
    seed: int = 0
    no_speaker_embedding: bool = False
    no_vhgae_paths: bool = False
    no_contrastive: bool = False
    soft_incidence: bool = False
    data: str | None = None
    checkpoint: str | None = None

    def __post_init__(self):
        self.validate()

    @property
    def latent_dim(self) -> int:
        return self.d_z or self.d

    @property
    def head_dim(self) -> int:
        return self.d_h or self.d

    @property
    def gru_dim(self) -> int:
        return self.d_gru or max(1, self.d // 2)

    def validate(self) -> None:
        for name in ("d", "layers", "batch_size"):
            if int(getattr(self, name)) < 1:
                raise ParameterError(f"{name} must be >= 1, got {getattr(self, name)}")
        for name in ("d_z", "d_h", "d_gru"):
            v = getattr(self, name)
            if v is not None and int(v) < 1:
                raise ParameterError(f"{name} must be >= 1, got {v}")
        if self.epochs < 0:
            raise ParameterError(f"epochs must be >= 0, got {self.epochs}")
        for name in ("tau_gumbel", "tau_cl", "lr"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("lam", "lam_g", "lam_cl"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be non-negative, got {getattr(self, name)}")
        if not 0.0 <= self.dropout < 1.0:
            raise ParameterError(f"dropout must lie in [0, 1), got {self.dropout}")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, values: dict) -> RunConfig:
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise ParameterError(f"unknown config keys: {sorted(unknown)}")
        return cls(**values)

    def replace(self, **changes) -> RunConfig:
        return dataclasses.replace(self, **changes)


def load_config(path) -> dict:
    """Read a JSON config file into a plain dict (validated when merged)."""
    path = Path(path)
    try:
        values = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ParameterError(f"{path}: cannot read config: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParameterError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc
    if not isinstance(values, dict):
        raise ParameterError(f"{path}: config must be a JSON object")
    preset = values.pop("preset", None)
    if preset is not None:
        if preset not in PRESETS:
            raise ParameterError(f"{path}: unknown preset {preset!r}")
        values = {**PRESETS[preset], **values}
    return values
