import io
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sheaflap.errors import ParseError, ValidationError
from sheaflap.hypercore import (Hypergraph, degrees, dumps_hypergraph, incidence_pairs, load_hypergraph,
                                loads_hypergraph, save_hypergraph)


@st.composite
def hypergraphs(draw, max_nodes=8, max_edges=6):
    n = draw(st.integers(1, max_nodes))
    edges = draw(st.lists(st.sets(st.integers(0, n - 1), min_size=1), max_size=max_edges))
    with_features = draw(st.booleans())
    feats = None
    if with_features:
        f = draw(st.integers(1, 3))
        feats = draw(st.lists(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=f, max_size=f),
                              min_size=n, max_size=n))
    labels = draw(st.one_of(st.none(), st.lists(st.integers(0, 3), min_size=n, max_size=n)))
    return Hypergraph(n, [sorted(e) for e in edges], feats, labels)


def test_minimal_load():
    H = loads_hypergraph('{"num_nodes":3,"hyperedges":[[0,1,2]]}')
    assert H.num_nodes == 3 and H.num_edges == 1
    assert H.features is None and H.labels is None


def test_out_of_range_index():
    with pytest.raises(ValidationError):
        loads_hypergraph('{"num_nodes":2,"hyperedges":[[0,5]]}')


def test_labels_round_trip():
    text = '{"num_nodes":3,"hyperedges":[[0,1],[1,2]],"labels":[0,1,1]}'
    H = loads_hypergraph(text)
    assert list(H.labels) == [0, 1, 1]
    assert dumps_hypergraph(H) == text
    assert loads_hypergraph(dumps_hypergraph(H)) == H


@pytest.mark.parametrize("text", [
    "not json", "[1,2]", '{"hyperedges":[[0]]}', '{"num_nodes":"3","hyperedges":[[0]]}',
    '{"num_nodes":3,"hyperedges":[0,1]}', '{"num_nodes":3,"hyperedges":[[0.5]]}',
    '{"num_nodes":3,"hyperedges":[[true]]}',
])
def test_malformed_text(text):
    with pytest.raises(ParseError):
        loads_hypergraph(text)


@pytest.mark.parametrize("obj", [
    {"num_nodes": 3, "hyperedges": [[]]},
    {"num_nodes": 3, "hyperedges": [[1, 1]]},
    {"num_nodes": 3, "hyperedges": [[-1]]},
    {"num_nodes": 3, "hyperedges": [[0]], "labels": [0, 1]},
    {"num_nodes": 2, "hyperedges": [[0]], "features": [[1.0], [2.0], [3.0]]},
    {"num_nodes": 2, "hyperedges": [[0]], "features": [[1.0], [2.0, 3.0]]},
])
def test_invalid_values(obj):
    with pytest.raises((ValidationError, ParseError)):
        loads_hypergraph(json.dumps(obj))


def test_duplicate_node_rejected_by_constructor():
    with pytest.raises(ValidationError):
        Hypergraph(4, [[0, 2, 2]])


def test_degrees_H3(H3):
    prof = degrees(H3)
    assert prof.node_degrees.tolist() == [1, 1, 1]
    assert prof.edge_degrees.tolist() == [3]


def test_shared_node_degrees():
    prof = degrees(Hypergraph(3, [[0, 1], [1, 2]]))
    assert prof.node_degrees.tolist() == [1, 2, 1]
    assert prof.edge_degrees.tolist() == [2, 2]


def test_degree_sums_on_random_edges(rng):
    edges = [rng.choice(40, size=rng.integers(1, 10), replace=False).tolist() for _ in range(100)]
    H = Hypergraph(40, edges)
    prof = degrees(H)
    pairs = [(v, e) for e, members in enumerate(edges) for v in members]
    assert prof.node_degrees.sum() == prof.edge_degrees.sum() == len(pairs)
    for v in range(40):
        assert prof.node_degrees[v] == sum(1 for u, _ in pairs if u == v)


def test_incidence_pairs_order():
    assert incidence_pairs(Hypergraph(3, [[0, 1, 2]])) == [(0, 0), (1, 0), (2, 0)]
    assert incidence_pairs(Hypergraph(3, [[0, 1], [1, 2]])) == [(0, 0), (1, 0), (1, 1), (2, 1)]


def test_unsorted_input_is_canonicalized():
    H = Hypergraph(4, [[3, 0, 2]])
    assert H.hyperedges == ((0, 2, 3),)
    assert incidence_pairs(H) == [(0, 0), (2, 0), (3, 0)]


def test_singleton_and_empty_hypergraph():
    H = Hypergraph(2, [[1]])
    assert degrees(H).edge_degrees.tolist() == [1]
    E = Hypergraph(3, [])
    assert E.num_edges == 0 and incidence_pairs(E) == []


def test_features_are_read_only():
    H = Hypergraph(2, [[0, 1]], [[1.0], [2.0]])
    with pytest.raises(ValueError):
        H.features[0, 0] = 5.0


def test_relabel_permutes_membership():
    H = Hypergraph(3, [[0, 1]], [[0.0], [1.0], [2.0]], [0, 1, 1])
    R = H.relabel([2, 0, 1])  # old node v becomes perm[v]
    assert R.hyperedges == ((0, 2),)
    assert R.features[:, 0].tolist() == [1.0, 2.0, 0.0]
    assert R.labels.tolist() == [1, 1, 0]


def test_file_and_stream_io(tmp_path):
    H = Hypergraph(3, [[0, 1], [1, 2]], [[0.1, -2.5], [1e-300, 3.0], [7.0, 0.0]], [0, 1, 0])
    path = tmp_path / "h.json"
    save_hypergraph(H, str(path))
    assert load_hypergraph(str(path)) == H
    assert load_hypergraph(io.BytesIO(path.read_bytes())) == H
    assert load_hypergraph(io.StringIO(path.read_text())) == H


def test_canonical_numbers():
    H = Hypergraph(2, [[0, 1]], [[0.1, 1.0], [2.5e-8, -3.0]])
    assert dumps_hypergraph(H) == ('{"num_nodes":2,"hyperedges":[[0,1]],'
                                   '"features":[[0.1,1.0],[2.5e-08,-3.0]]}')


def test_non_utf8_bytes():
    with pytest.raises(ParseError):
        load_hypergraph(io.BytesIO(b"\xff\xfe{"))


@settings(max_examples=60, deadline=None)
@given(hypergraphs())
def test_save_load_identity(H):
    text = dumps_hypergraph(H)
    again = loads_hypergraph(text)
    assert again == H
    assert dumps_hypergraph(again) == text
    prof = degrees(H)
    assert len(incidence_pairs(H)) == prof.edge_degrees.sum() == prof.node_degrees.sum()
    if H.features is not None:
        assert np.array_equal(again.features, H.features)
