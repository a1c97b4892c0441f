import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ppne.graph import (EdgeListError, FlipDelta, Graph, NodePair, PrivatePairSet, apply_flip, apply_flips,
                        format_node_map, format_pairs, load_edge_list, parse_pairs, sample_private_pairs)

from conftest import er


def test_load_path_graph():
    g, index = load_edge_list("a b\nb c")
    assert g.node_count == 3
    assert g.edge_count == 2
    assert g.degrees.tolist() == [1, 2, 1]
    assert index == {"a": 0, "b": 1, "c": 2}


def test_load_collapses_duplicates_and_drops_self_loops():
    g, index = load_edge_list("a b\nb a\na a")
    assert g.node_count == 2
    assert g.edge_count == 1


def test_load_keeps_first_appearance_order_and_comments():
    g, index = load_edge_list("# header\nz y  # trailing\n\nx z\n")
    assert index == {"z": 0, "y": 1, "x": 2}
    assert g.has_edge(0, 2) and g.has_edge(0, 1)


def test_load_self_loop_token_kept_as_isolated_node():
    g, index = load_edge_list("a b\nc c")
    assert g.node_count == 3
    assert g.degrees.tolist() == [1, 1, 0]


def test_load_malformed_line_reports_line_number():
    with pytest.raises(EdgeListError) as e:
        load_edge_list("a b\nb c d\n")
    assert e.value.lineno == 2


def test_load_empty_graph_rejected():
    with pytest.raises(ValueError):
        load_edge_list("# nothing\n\n")


def test_node_map_format():
    _, index = load_edge_list("b a\n")
    assert format_node_map(index) == "b\t0\na\t1\n"


def test_node_pair_canonical():
    assert NodePair.of(5, 2) == (2, 5)
    with pytest.raises(ValueError):
        NodePair.of(3, 3)


def test_triangle_remove_gives_path(triangle):
    g = apply_flip(triangle, FlipDelta(0, 1, -1))
    assert g.volume == 4
    assert not g.has_edge(0, 1) and not g.has_edge(1, 0)
    assert g.degrees.tolist() == [1, 1, 2]


def test_add_on_empty_two_node_graph():
    g = Graph.from_edges(2, np.zeros((0, 2)))
    g2 = apply_flip(g, FlipDelta(0, 1, 1))
    assert g2.degrees.tolist() == [1, 1]
    assert g.volume == 0  # input untouched


def test_flip_direction_checked(triangle):
    with pytest.raises(ValueError):
        apply_flip(triangle, FlipDelta(0, 1, 1))
    with pytest.raises(ValueError):
        apply_flip(apply_flip(triangle, FlipDelta(0, 1, -1)), FlipDelta(0, 1, -1))


def test_same_pair_twice_in_batch_rejected():
    g = Graph.from_edges(3, [(0, 1)])
    with pytest.raises(ValueError):
        apply_flips(g, [FlipDelta(1, 2, 1), FlipDelta(2, 1, -1)])


@given(st.integers(0, 10_000), st.integers(4, 12))
def test_flip_then_inverse_is_identity(seed, n):
    g = er(n, 0.4, seed)
    rng = np.random.default_rng(seed)
    i, j = rng.choice(n, size=2, replace=False)
    d = -1 if g.has_edge(i, j) else 1
    g2 = apply_flip(g, FlipDelta(int(i), int(j), d))
    back = apply_flip(g2, FlipDelta(int(i), int(j), -d))
    assert back.same_as(g)
    assert (back.adjacency != g.adjacency).nnz == 0
    diff = (g2.adjacency - g.adjacency).tocoo()
    assert sorted(zip(diff.row.tolist(), diff.col.tolist())) == sorted([(i, j), (j, i)])
    assert g2.volume == g.volume + 2 * d


@given(st.integers(0, 10_000))
def test_graph_invariants_after_flip_sequence(seed):
    rng = np.random.default_rng(seed)
    g = er(10, 0.3, seed)
    for _ in range(15):
        i, j = (int(x) for x in rng.choice(10, size=2, replace=False))
        g = apply_flip(g, FlipDelta(i, j, -1 if g.has_edge(i, j) else 1))
    A = g.dense()
    assert np.array_equal(A, A.T)
    assert np.all(np.diag(A) == 0)
    assert g.degrees.tolist() == A.sum(axis=1).astype(int).tolist()
    assert g.volume % 2 == 0 and g.volume == g.degrees.sum()


def test_edges_sorted_canonical():
    g = Graph.from_edges(4, [(3, 1), (2, 0), (1, 0)])
    assert g.edges().tolist() == [[0, 1], [0, 2], [1, 3]]


def test_private_pairs_counts_and_disjointness():
    g = er(40, 0.2, 3)
    observed, pairs = sample_private_pairs(g, 0.1, seed=7)
    n_pos = math.ceil(0.1 * g.edge_count)
    assert len(pairs.pos) == len(pairs.neg) == n_pos
    assert observed.edge_count == g.edge_count - n_pos
    assert g.has_edges(pairs.pos[:, 0], pairs.pos[:, 1]).all()
    assert not g.has_edges(pairs.neg[:, 0], pairs.neg[:, 1]).any()
    pairs.check(observed)


def test_private_pairs_tiny_fraction_gives_one_each():
    g = er(12, 0.5, 1)
    assert g.edge_count >= 10
    _, pairs = sample_private_pairs(g, 1e-9, seed=0)
    assert len(pairs.pos) == len(pairs.neg) == 1


def test_private_pairs_deterministic():
    g = er(30, 0.2, 5)
    a = sample_private_pairs(g, 0.1, seed=11)[1]
    b = sample_private_pairs(g, 0.1, seed=11)[1]
    assert np.array_equal(a.pos, b.pos) and np.array_equal(a.neg, b.neg)


def test_private_pairs_large_graph_uses_rejection_path():
    from ppne.synth import synth_er_graph

    g = synth_er_graph(800, 6, 0)
    observed, pairs = sample_private_pairs(g, 0.05, seed=2)
    assert len(pairs.neg) == len(pairs.pos)
    assert not g.has_edges(pairs.neg[:, 0], pairs.neg[:, 1]).any()
    assert len({tuple(p) for p in pairs.neg}) == len(pairs.neg)


def test_private_pairs_bad_fraction():
    g = er(10, 0.5, 0)
    with pytest.raises(ValueError):
        sample_private_pairs(g, 0.0, 0)
    with pytest.raises(ValueError):
        sample_private_pairs(Graph.from_edges(2, [(0, 1)]), 0.5, 0)


def test_pair_set_rejects_overlap():
    with pytest.raises(ValueError):
        PrivatePairSet(np.array([[0, 1]]), np.array([[1, 0]]))


def test_pair_set_check_rejects_linked_target(triangle):
    with pytest.raises(ValueError):
        PrivatePairSet(np.array([[0, 1]]), np.zeros((0, 2))).check(triangle)


def test_pairs_round_trip():
    pairs = PrivatePairSet(np.array([[0, 2]]), np.array([[1, 3]]))
    tokens = ["a", "b", "c", "d"]
    text = format_pairs(pairs, tokens)
    assert text == "a c 1\nb d 0\n"
    back = parse_pairs(text, {t: i for i, t in enumerate(tokens)})
    assert np.array_equal(back.pos, pairs.pos) and np.array_equal(back.neg, pairs.neg)


def test_parse_pairs_errors():
    with pytest.raises(ValueError):
        parse_pairs("a b 2\n", {"a": 0, "b": 1})
    with pytest.raises(ValueError):
        parse_pairs("a z 1\n", {"a": 0, "b": 1})
