"""Tests for the graph data model and the derived graphs.

Test categories:
  - property_based: Graph(H) and Trip(H) against direct definitions
  - unit: known input/output pairs
  - negative: malformed graphs rejected
"""
from fractions import Fraction
from itertools import combinations

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modules.core import (BipartiteGraph, ThreeGraph, TripartiteGraph, VertexPartition, all_pairs, bip,
                          count_edges_across, graph_of, induce, pair_index, relabel, triangle_triples, trip)
from modules.helpers import InvalidInputError


@st.composite
def three_graphs(draw, max_n=7):
    n = draw(st.integers(3, max_n))
    triples = list(combinations(range(n), 3))
    edges = draw(st.sets(st.sampled_from(triples), max_size=len(triples)))
    return ThreeGraph(n, frozenset(edges))


@pytest.mark.property_based
@given(st.integers(2, 12))
@settings(max_examples=20)
def test_pair_index_is_lexicographic(n):
    """pair_index numbers the pairs of [n] in lexicographic order."""
    assert [pair_index(u, v, n) for u, v in all_pairs(n)] == list(range(n * (n - 1) // 2))
    assert pair_index(1, 0, n) == pair_index(0, 1, n)


@pytest.mark.property_based
@given(three_graphs())
@settings(max_examples=50)
def test_graph_of_matches_definition(h):
    """u ~ {v, w} in Graph(H) iff uvw is an edge."""
    g = graph_of(h)
    pairs = all_pairs(h.n)
    for u in range(h.n):
        for k, (v, w) in enumerate(pairs):
            assert ((u, k) in g.edges) == h.has_edge(u, v, w)


@pytest.mark.property_based
@given(three_graphs(max_n=5))
@settings(max_examples=30)
def test_trip_has_six_copies_per_edge(h):
    """Trip(H) holds every ordering of every edge and nothing else."""
    t = trip(h)
    assert len(t.edges) == 6 * len(h.edges)
    assert t.partition is not None


def test_three_graph_normalises_edges():
    """Edges are stored sorted and deduplicated."""
    h = ThreeGraph(4, frozenset([(2, 1, 0), (0, 1, 2), (3, 1, 0)]))
    assert h.edges == frozenset([(0, 1, 2), (0, 1, 3)])
    assert h.has_edge(2, 0, 1)
    assert not h.has_edge(0, 2, 3)
    assert h.link(1, 0) == (1 << 2) | (1 << 3)
    assert h.degree(0) == 2


def test_three_graph_rejects_bad_edges():
    """Degenerate, out-of-range and part-crossing-twice edges are refused."""
    with pytest.raises(InvalidInputError):
        ThreeGraph(3, frozenset([(0, 0, 1)]))
    with pytest.raises(InvalidInputError):
        ThreeGraph(3, frozenset([(0, 1, 3)]))
    with pytest.raises(InvalidInputError):
        ThreeGraph(4, frozenset([(0, 1, 2)]), ((0, 1), (2,), (3,)))


def test_bipartite_basics():
    """Neighbour masks, density, restriction and transpose."""
    g = BipartiteGraph(2, 3, frozenset([(0, 0), (0, 2), (1, 1)]))
    assert g.left_neighbors == (0b101, 0b010)
    assert g.right_neighbors == (0b01, 0b10, 0b01)
    assert g.density() == Fraction(1, 2)
    assert g.restrict([0], [0, 2]).edges == frozenset([(0, 0), (0, 1)])
    assert g.transpose().edges == frozenset([(0, 0), (2, 0), (1, 1)])
    with pytest.raises(InvalidInputError):
        BipartiteGraph(1, 1, frozenset([(1, 0)]))


def test_tripartite_complete_triangles():
    """The complete tripartite graph has every cross triple as a triangle."""
    g = TripartiteGraph.complete(((0, 1), (2,), (3, 4, 5)))
    assert g.sizes == (2, 1, 3)
    assert len(triangle_triples(g)) == 6
    assert g.densities() == (1, 1, 1)


def test_tripartite_consecutive_labels():
    """Consecutive parts are labelled 0..n-1 in order."""
    g = TripartiteGraph.consecutive((1, 2, 1), e12=[(0, 1)], e13=[(0, 0)], e23=[(1, 0)])
    assert g.labels == ((0,), (1, 2), (3,))
    assert triangle_triples(g) == {(0, 1, 0)}


def test_vertex_partition():
    """Partitions must cover [n] without overlap."""
    p = VertexPartition(((2, 0), (1, 3)), 4)
    assert p.classes == ((0, 2), (1, 3))
    assert p.class_of[3] == 1
    assert p.is_equipartition()
    assert VertexPartition.from_assignment([0, 0, 1]).classes == ((0, 1), (2,))
    with pytest.raises(InvalidInputError):
        VertexPartition(((0, 1), (1, 2)), 3)
    with pytest.raises(InvalidInputError):
        VertexPartition(((0,), (2,)), 3)


def test_bip_of_networkx_graph():
    """Bip(G) is symmetric and drops loops."""
    g = nx.Graph([(0, 1), (1, 2), (2, 2)])
    b = bip(g)
    assert (b.left_size, b.right_size) == (3, 3)
    assert b.edges == frozenset([(0, 1), (1, 0), (1, 2), (2, 1)])


def test_induce_relabel_and_cross_counts():
    """Induced subgraphs reindex, relabelling permutes, cross counts see one vertex per set."""
    h = ThreeGraph(5, frozenset([(0, 1, 2), (2, 3, 4)]))
    assert induce(h, [2, 3, 4]).edges == frozenset([(0, 1, 2)])
    assert relabel(h, [4, 3, 2, 1, 0]).edges == frozenset([(2, 3, 4), (0, 1, 2)])
    assert count_edges_across(h, [[0], [1], [2, 3]]) == 1
