"""View fusion, emotion head and training objectives."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import tensor as T
from .errors import DimensionError, EmptyDialogueError, ParameterError
from .init import linear
from .params import ParamGroup
from .tensor import Tensor

LOG_FLOOR = 1e-12


@dataclass
class HeadParams(ParamGroup):
    W_2: Tensor
    b_2: Tensor
    W_3: Tensor
    b_3: Tensor

    @property
    def num_classes(self) -> int:
        return self.W_3.shape[1]


def init_head(d: int, d_h: int, num_classes: int, rng: np.random.Generator) -> HeadParams:
    W_2, b_2 = linear(3 * d, d_h, rng)
    W_3, b_3 = linear(d_h, num_classes, rng)
    return HeadParams(W_2, b_2, W_3, b_3)


@dataclass(frozen=True)
class LossWeights:
    lam_g: float = 0.5
    lam_cl: float = 1.0
    lam: float = 1e-5

    def __post_init__(self):
        for name in ("lam_g", "lam_cl", "lam"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be non-negative, got {getattr(self, name)}")


def fuse_views(V1: Tensor, V2: Tensor) -> Tensor:
    if V1.shape != V2.shape:
        raise DimensionError(f"cannot fuse views of shapes {V1.shape} and {V2.shape}")
    return (V1 + V2) * 0.5


def utterance_features(V: Tensor) -> Tensor:
    """Concatenate the textual, acoustic and visual rows of each utterance: ``(N, 3d)``."""
    if V.shape[0] % 3:
        raise DimensionError(f"node count {V.shape[0]} is not a multiple of 3")
    n = V.shape[0] // 3
    if n == 0:
        raise EmptyDialogueError("no utterances to classify")
    return T.concat([V[0:n], V[n:2 * n], V[2 * n:3 * n]], axis=1)


def classify(V_fused: Tensor, p: HeadParams) -> tuple[Tensor, np.ndarray]:
    """Class probabilities ``(N, C)`` and argmax predictions (ties go to the lowest index)."""
    x = utterance_features(V_fused)
    hidden = T.relu(x @ p.W_2 + p.b_2)
    probs = T.softmax(hidden @ p.W_3 + p.b_3, axis=1)
    return probs, probs.data.argmax(axis=1)


def l2_norm(params: Iterable[Tensor]) -> Tensor:
    total = None
    for t in params:
        sq = (t * t).sum()
        total = sq if total is None else total + sq
    if total is None:
        return Tensor(0.0)
    return T.sqrt(total)


def nll_sum(probs: Tensor, labels) -> Tensor:
    """Summed negative log-likelihood of ``labels`` under row distributions ``probs``."""
    labels = np.asarray(labels, dtype=np.int64)
    n, c = probs.shape
    if labels.shape != (n,):
        raise DimensionError(f"{labels.shape[0] if labels.ndim else 0} labels for {n} rows")
    if np.any(labels < 0) or np.any(labels >= c):
        raise IndexError(f"labels must lie in [0, {c}), got {labels.tolist()}")
    picked = probs[np.arange(n), labels]
    return -T.log(T.clamp_min(picked, LOG_FLOOR)).sum()


def cross_entropy_l2(probs, labels, params_for_reg: Iterable[Tensor] = (), lam: float = 0.0) -> Tensor:
    """Mean categorical cross-entropy plus ``lam`` times the global L2 norm.

    ``probs``/``labels`` may be single arrays or parallel lists (one entry per
    dialogue); the mean is over all utterances.
    """
    if isinstance(probs, Tensor):
        probs, labels = [probs], [labels]
    total = None
    count = 0
    for P, y in zip(probs, labels):
        s = nll_sum(P, y)
        total = s if total is None else total + s
        count += P.shape[0]
    if count == 0:
        raise EmptyDialogueError("no utterances in batch")
    loss = total * (1.0 / count)
    if lam:
        loss = loss + l2_norm(params_for_reg) * lam
    return loss


def total_loss(L_ce, L_g_view1, L_g_view2, L_cl, w: LossWeights) -> Tensor:
    return L_ce + (L_g_view1 + L_g_view2) * (0.5 * w.lam_g) + L_cl * w.lam_cl
