"""Node-level contrastive loss between two views of the same dialogue graph.

Row ``i`` of each view is the positive partner of row ``i`` of the other
view. Every other row, in the other view and in the same view, is a
negative. The loss is computed in log space::

    f(i) = -s12[i, i] + logsumexp(s12[i, :] ++ s11[i, j != i])

with ``s = cosine / tau``, symmetrised over the two view orders and averaged
over nodes.
"""

from __future__ import annotations

import numpy as np

from . import tensor as T
from .errors import DimensionError, ParameterError
from .tensor import Tensor

NORM_FLOOR = 1e-12


def cosine_similarity(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    nx, ny = np.linalg.norm(x), np.linalg.norm(y)
    if nx == 0 or ny == 0:
        return 0.0
    return float(np.dot(x, y) / (nx * ny))


def normalize_rows(X: Tensor) -> Tensor:
    """Unit-norm rows; an all-zero row stays zero, so its cosine with anything is 0."""
    norms = T.sqrt((X * X).sum(axis=1, keepdims=True))
    return X / T.clamp_min(norms, NORM_FLOOR)


def _one_side(Za: Tensor, Zb: Tensor, tau: float) -> Tensor:
    n = Za.shape[0]
    cross = (Za @ Zb.T) * (1.0 / tau)
    same = (Za @ Za.T) * (1.0 / tau)
    logits = T.concat([cross, same], axis=1)
    mask = np.concatenate([np.ones((n, n), dtype=bool), ~np.eye(n, dtype=bool)], axis=1)
    positive = (cross * Tensor(np.eye(n))).sum(axis=1)
    return (T.masked_logsumexp(logits, mask, axis=1) - positive).sum()


def contrastive_loss(V1: Tensor, V2: Tensor, tau: float = 0.5) -> Tensor:
    if not tau > 0:
        raise ParameterError(f"contrastive temperature must be positive, got {tau}")
    if V1.shape != V2.shape or V1.ndim != 2:
        raise DimensionError(f"contrastive views must share a 2-D shape, got {V1.shape} and {V2.shape}")
    n = V1.shape[0]
    if n < 1:
        raise DimensionError("contrastive loss needs at least one node")
    Z1, Z2 = normalize_rows(V1), normalize_rows(V2)
    return (_one_side(Z1, Z2, tau) + _one_side(Z2, Z1, tau)) * (1.0 / (2 * n))
