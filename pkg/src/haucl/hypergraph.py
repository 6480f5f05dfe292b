"""Dialogue hypergraph structure.

Nodes are (utterance, modality) pairs laid out in three blocks of ``N``:
all textual nodes, then all acoustic, then all visual. Node ``k*N + i`` is
utterance ``i`` in modality ``k``.

Hyperedges come in two families, in this column order:

* three modality edges (columns 0, 1, 2), each holding every node of one
  modality;
* ``N`` utterance edges (column ``3 + i``), each joining the three modality
  nodes of utterance ``i``.

So a freshly built dialogue graph always has ``M = N + 3`` hyperedges and
every node has degree 2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyDialogueError
from .tensor import Tensor

MODALITIES = ("t", "a", "v")


@dataclass(frozen=True)
class Hypergraph:
    num_utterances: int
    incidence: np.ndarray
    node_feats: Tensor | None = None
    edge_feats: Tensor | None = None

    @property
    def num_nodes(self) -> int:
        return self.incidence.shape[0]

    @property
    def num_edges(self) -> int:
        return self.incidence.shape[1]

    @property
    def node_ids(self) -> list[tuple[int, str]]:
        """``(utterance, modality)`` for each node row."""
        n = self.num_utterances
        return [(i, m) for m in MODALITIES for i in range(n)]

    def with_features(self, node_feats: Tensor, edge_feats: Tensor | None = None) -> Hypergraph:
        return Hypergraph(self.num_utterances, self.incidence, node_feats, edge_feats)


def node_index(utterance: int, modality: str, num_utterances: int) -> int:
    return MODALITIES.index(modality) * num_utterances + utterance


def build_initial_incidence(num_utterances: int) -> Hypergraph:
    n = int(num_utterances)
    if n < 1:
        raise EmptyDialogueError("cannot build a hypergraph for a dialogue with no utterances")
    H = np.zeros((3 * n, n + 3), dtype=np.float64)
    for k in range(3):
        H[k * n:(k + 1) * n, k] = 1.0
    for i in range(n):
        H[[i, n + i, 2 * n + i], 3 + i] = 1.0
    H.setflags(write=False)
    return Hypergraph(n, H)


def degrees(H: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Node degrees (row sums) and hyperedge degrees (column sums)."""
    H = np.asarray(H, dtype=np.float64)
    return H.sum(axis=1), H.sum(axis=0)
