"""Degree-normalised hypergraph convolution.

One layer does two half-steps::

    E' = relu(mean over member nodes of X,     then W_edge, b_edge)
    X' = relu(mean over incident edges of E',  then W_node, b_node)

Weights are stored ``(in, out)`` and applied on the right of row-feature
matrices. The incidence may be a plain array or a :class:`Tensor` (soft or
straight-through incidence from the autoencoder); degrees are recomputed
from it so gradients reach the incidence entries as well. A zero degree
yields a zero aggregate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .errors import DimensionError
from .init import linear
from .params import ParamGroup
from .tensor import Tensor


@dataclass
class ConvParams(ParamGroup):
    W_edge: Tensor
    b_edge: Tensor
    W_node: Tensor
    b_node: Tensor


def init_conv(d: int, rng: np.random.Generator) -> ConvParams:
    W_e, b_e = linear(d, d, rng)
    W_n, b_n = linear(d, d, rng)
    return ConvParams(W_e, b_e, W_n, b_n)


def hypergraph_conv(X: Tensor, H, p: ConvParams) -> tuple[Tensor, Tensor]:
    """Return updated ``(node_feats, edge_feats)``."""
    H = T.as_tensor(H)
    if H.ndim != 2 or X.ndim != 2 or H.shape[0] != X.shape[0]:
        raise DimensionError(f"hypergraph_conv: features {X.shape} vs incidence {H.shape}")
    d = X.shape[1]
    if p.W_edge.shape[0] != d or p.W_node.shape[0] != p.W_edge.shape[1]:
        raise DimensionError(
            f"hypergraph_conv: features of width {d} vs weights {p.W_edge.shape}, {p.W_node.shape}"
        )
    inv_edge_deg = T.safe_reciprocal(H.sum(axis=0)).reshape(-1, 1)
    inv_node_deg = T.safe_reciprocal(H.sum(axis=1)).reshape(-1, 1)
    edge_agg = (H.T @ X) * inv_edge_deg
    E = T.relu(edge_agg @ p.W_edge + p.b_edge)
    node_agg = (H @ E) * inv_node_deg
    Xn = T.relu(node_agg @ p.W_node + p.b_node)
    return Xn, E


def conv_stack(X: Tensor, H, layers: list[ConvParams]) -> tuple[Tensor, Tensor]:
    E = None
    for p in layers:
        X, E = hypergraph_conv(X, H, p)
    return X, E
