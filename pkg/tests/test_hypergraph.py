from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from haucl.errors import EmptyDialogueError
from haucl.hypergraph import MODALITIES, build_initial_incidence, degrees, node_index


def test_single_utterance_by_hand():
    H = build_initial_incidence(1).incidence
    expected = np.array([
        [1, 0, 0, 1],
        [0, 1, 0, 1],
        [0, 0, 1, 1],
    ], dtype=float)
    np.testing.assert_array_equal(H, expected)


def test_two_utterances_by_hand():
    g = build_initial_incidence(2)
    assert g.incidence.shape == (6, 5)
    np.testing.assert_array_equal(g.incidence.sum(axis=0), [2, 2, 2, 3, 3])
    assert g.node_ids == [(0, "t"), (1, "t"), (0, "a"), (1, "a"), (0, "v"), (1, "v")]


def test_zero_utterances_rejected():
    with pytest.raises(EmptyDialogueError):
        build_initial_incidence(0)


def test_incidence_is_read_only():
    H = build_initial_incidence(3).incidence
    with pytest.raises(ValueError):
        H[0, 0] = 0.0


@given(st.integers(1, 60))
def test_structure_invariants(n):
    g = build_initial_incidence(n)
    H = g.incidence
    assert H.shape == (3 * n, n + 3)
    assert g.num_edges - n == 3
    assert set(np.unique(H)) <= {0.0, 1.0}
    node_deg, edge_deg = degrees(H)
    np.testing.assert_array_equal(node_deg, 2)
    np.testing.assert_array_equal(edge_deg[:3], n)
    np.testing.assert_array_equal(edge_deg[3:], 3)
    assert node_deg.sum() == edge_deg.sum() == H.sum()


@given(st.integers(1, 12), st.data())
def test_utterance_relabeling_permutes_rows_and_columns(n, data):
    perm = np.array(data.draw(st.permutations(range(n))))
    H = build_initial_incidence(n).incidence
    rows = np.concatenate([k * n + perm for k in range(3)])
    cols = np.concatenate([[0, 1, 2], 3 + perm])
    np.testing.assert_array_equal(H[np.ix_(rows, cols)], H)


def test_node_index_matches_layout():
    n = 5
    H = build_initial_incidence(n).incidence
    for i in range(n):
        for k, m in enumerate(MODALITIES):
            r = node_index(i, m, n)
            assert H[r, k] == 1 and H[r, 3 + i] == 1


def test_degrees_zero_column():
    H = np.array([[1.0, 0.0], [1.0, 0.0]])
    node_deg, edge_deg = degrees(H)
    assert edge_deg.tolist() == [2.0, 0.0]
    assert node_deg.tolist() == [1.0, 1.0]


def test_initial_graph_n4_modality_degree():
    _, edge_deg = degrees(build_initial_incidence(4).incidence)
    assert edge_deg[:3].tolist() == [4.0, 4.0, 4.0]
