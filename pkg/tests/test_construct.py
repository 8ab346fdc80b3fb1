"""Tests for the canonical families, slicing and FOP2 witnesses.

Test categories:
  - unit: family sizes and edge counts
  - property_based: slicing keeps every pair exactly once; interval slicing keeps its radius, count and leftover bounds
  - negative: bad family parameters and undersized intervals
"""
import math
from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import constants
from modules.construct import (Ball, FamilySpec, build_canonical, even_repartition, f_graph, fop2_negation_transform,
                               fop_witness_from_embedding, gs_a_set, gs_graph, half_graph, hbar, hp_graph,
                               ordered_triples_graph, otherway_hypergraph, powerset_graph, random_disc2_bipartite,
                               slice_bipartite, slice_interval, triangle_hypergraph, vcfop_example, verify_fop2,
                               w_graph)
from modules.core import BipartiteGraph, TripartiteGraph
from modules.helpers import InvalidInputError, PreconditionError


def _complete(m, n):
    return BipartiteGraph(m, n, frozenset((i, j) for i in range(m) for j in range(n)))


def test_half_and_powerset_graphs():
    """H(k) has k(k+1)/2 edges; U(k) joins i to the sets holding it."""
    assert len(half_graph(4).edges) == 10
    assert (0, 1) in half_graph(2).edges and (1, 0) not in half_graph(2).edges
    assert powerset_graph(2).edges == frozenset([(0, 1), (1, 2), (0, 3), (1, 3)])


def test_hp_graph_threshold():
    """HP(2) misses only the all-ones triple."""
    h = hp_graph(2)
    assert len(h.edges) == 7
    assert not h.has_edge(0, 2, 4)


@pytest.mark.parametrize('n,size', [(1, 1), (2, 4), (3, 13)])
def test_gs_a_set_sizes(n, size):
    """|A(3, n)| = (3^n - 1) / 2."""
    assert len(gs_a_set(3, n)) == size


def test_gs_graph_one_coordinate():
    """For n = 1 every (x, y) has exactly one z with x + y + z = 1 mod 3."""
    h = gs_graph(3, 1)
    assert len(h.edges) == 9
    assert h.has_edge(0, 3, 7)


def test_tensor_families():
    """H-bar(k) has k copies of H(k); W(k) joins j to the sets holding it."""
    assert len(hbar(3).edges) == 3 * 6
    assert [len(p) for p in hbar(3).parts] == [3, 3, 3]
    assert len(w_graph(2).edges) == 2 * 4


def test_vcfop_example_sizes():
    """Parts U, W and Z_1..Z_k have the requested sizes."""
    h = vcfop_example(2, 3, seed=1)
    assert [len(p) for p in h.parts] == [3, 3, 6]


def test_family_spec_parse_and_label():
    """Specs parse key=value pairs, 'l' standing for ell."""
    assert FamilySpec.parse('HP:k=5').label() == 'HP:k=5'
    assert FamilySpec.parse('F:l=2').ell == 2
    assert FamilySpec.parse('gs:p=3,n=2').label() == 'GS:p=3,n=2'
    assert FamilySpec.parse('HALF_GRAPH:k=2').is_bipartite


@pytest.mark.parametrize('text', ['NOPE:k=2', 'HP', 'HP:k=0', 'GS:p=4,n=1', 'HP:q=2', 'HP:k=x'])
def test_family_spec_rejects(text):
    """Unknown families, missing or bad parameters are input errors."""
    with pytest.raises(InvalidInputError):
        FamilySpec.parse(text)


def test_tensor_needs_graph():
    """TENSOR without an attached graph is refused."""
    with pytest.raises(InvalidInputError):
        build_canonical(FamilySpec(constants.TENSOR, n=2))
    h = build_canonical(FamilySpec(constants.TENSOR, n=2, graph=half_graph(2)))
    assert len(h.edges) == 2 * 3


def test_vertex_cap_enforced(monkeypatch):
    """Families above the vertex cap are refused before building."""
    monkeypatch.setattr(constants, 'VERTEX_CAP', 10)
    with pytest.raises(InvalidInputError):
        build_canonical(FamilySpec(constants.UBAR, k=4))


def test_random_bipartite_extremes():
    """Density 0 gives no edges, density 1 all of them."""
    assert not random_disc2_bipartite(4, 5, 0, seed=3).edges
    assert len(random_disc2_bipartite(4, 5, 1, seed=3).edges) == 20


@pytest.mark.property_based
@given(st.integers(1, 5), st.integers(1, 5), st.integers(1, 4), st.integers(0, 1000))
@settings(max_examples=40)
def test_slice_bipartite_partitions_edges(m, n, ell, seed):
    """The ell parts are disjoint and cover E; reruns are identical."""
    g = _complete(m, n)
    result = slice_bipartite(g, ell, seed, measure=False)
    assert len(result.parts) == ell
    assert sum(len(p) for p in result.parts) == len(g.edges)
    assert result.union() == set(g.edges)
    assert slice_bipartite(g, ell, seed, measure=False).parts == result.parts


@pytest.mark.property_based
@given(st.integers(2, 4), st.integers(0, 1000))
@settings(max_examples=30)
def test_even_repartition_covers_all_pairs(ell, seed):
    """Re-partitioning gives the target count over all pairs, disjointly."""
    parts = slice_bipartite(_complete(4, 4), ell, seed, measure=False)
    result = even_repartition(parts, 4, seed=seed, measure=False)
    assert len(result.parts) == 4
    assert sum(len(p) for p in result.parts) == 16
    assert result.union() == {(i, j) for i in range(4) for j in range(4)}


def test_slice_measures_parts():
    """Measured slices report densities and disc2 deviations."""
    result = slice_bipartite(_complete(3, 3), 2, seed=0)
    assert sum(result.densities) == 1
    assert len(result.deviations) == 2


def test_slice_interval_single_ball():
    """A short interval is one ball."""
    out = slice_interval(Fraction(1, 10), Fraction(1, 10), (1, 20), 100)
    assert out.balls == [Ball(10, 10)]
    assert out.uncovered == 1


def test_slice_interval_many_balls():
    """A long interval splits its radius evenly over the fewest balls no wider than rN."""
    out = slice_interval(Fraction(1, 2), Fraction(1, 10), (1, 100), 100)
    assert out.balls == [Ball(10, 10), Ball(30, 10), Ball(50, 10), Ball(70, 10), Ball(90, 10)]
    assert out.uncovered == 5


def test_slice_interval_uneven_radii():
    """Radii differ by at most one and the larger ones come last."""
    out = slice_interval(Fraction(1, 4), Fraction(6, 100), (10, 50), 100)
    assert [b.radius for b in out.balls] == [5, 5, 5, 6]
    assert out.balls[-1] == Ball(45, 6)
    assert out.uncovered == 3


def test_slice_interval_unit_radius():
    """With rN = 1 every ball is a single point."""
    out = slice_interval(1, Fraction(1, 100), (0, 9), 100)
    assert out.balls == [Ball(c, 1) for c in (0, 2, 4, 6, 8)]
    assert out.uncovered == 5


@pytest.mark.parametrize('radius_big,radius_small,interval', [
    (Fraction(1, 10), Fraction(1, 10), (1, 2)),
    (Fraction(1, 10), Fraction(1, 10), (1, 100)),
    (Fraction(1, 10), Fraction(1, 200), (0, 9)),
    (Fraction(1, 10), Fraction(1, 5), (0, 9)),
    (Fraction(1, 10), Fraction(1, 10), (5, 4)),
])
def test_slice_interval_rejects(radius_big, radius_small, interval):
    """Too short, wider than the big radius, no integer radius, radii out of order, empty."""
    with pytest.raises(PreconditionError):
        slice_interval(radius_big, radius_small, interval, 100)


@pytest.mark.property_based
@given(st.data())
@settings(max_examples=1000, deadline=None)
def test_slice_interval_bounds(data):
    """Radii in [rN/3, rN], disjoint balls inside the interval, at most 2m uncovered, at most 4R/r balls."""
    N = data.draw(st.integers(10, 400))
    units = Fraction(data.draw(st.integers(3, 3 * N // 2)), 3)
    radius_small = units / N
    radius_big = radius_small * Fraction(data.draw(st.integers(4, 40)), 4)
    shortest = 2 * math.ceil(units / 3) - 1
    longest = math.ceil(2 * radius_big * N)
    length = data.draw(st.integers(shortest, longest))
    alpha = data.draw(st.integers(0, 50))
    out = slice_interval(radius_big, radius_small, (alpha, alpha + length - 1), N)
    seen = set()
    for b in out.balls:
        assert radius_small * N / 3 <= b.radius <= radius_small * N
        members = set(b.members)
        assert not seen & members
        assert alpha <= min(members) and max(members) <= alpha + length - 1
        seen |= members
    assert out.uncovered == length - len(seen)
    assert out.uncovered <= 2 * len(out.balls)
    assert len(out.balls) <= 4 * radius_big / radius_small


def test_f_graph_is_its_own_witness():
    """F(2) read through the identity embedding is a 2-FOP2 witness."""
    h = f_graph(2)
    w = fop_witness_from_embedding(2, {v: v for v in range(h.n)})
    assert verify_fop2(h, w)


def test_fop2_negation_transform():
    """A 2-FOP2 witness of E yields a 1-FOP2 witness of the complement."""
    h = f_graph(2)
    out = fop2_negation_transform(h, fop_witness_from_embedding(2, {v: v for v in range(h.n)}))
    assert out.ell == 1
    assert out.polarity is False
    assert verify_fop2(h, out)


def test_fop2_negation_rejects_non_witness():
    """A tuple that is not a witness is refused."""
    h = hp_graph(2)
    w = fop_witness_from_embedding(1, {0: 0, 1: 2, 2: 4})
    assert not verify_fop2(h, w)
    with pytest.raises(InvalidInputError):
        fop2_negation_transform(h, w)


def test_ordered_triples_graph():
    """a_i b_j c_k is an edge iff i < j < k, and the splits cover each pair."""
    inst = ordered_triples_graph(4)
    assert len(inst.h.edges) == 4
    assert inst.h.has_edge(0, 5, 10)
    for (i, j), parts in inst.splits.items():
        assert sum(len(p) for p in parts) == 16


def test_triangle_hypergraph():
    """Edges are exactly the triangles of the tripartite graph."""
    tg = TripartiteGraph.consecutive((1, 1, 2), e12=[(0, 0)], e13=[(0, 0), (0, 1)], e23=[(0, 1)])
    inst = triangle_hypergraph(tg)
    assert inst.h.edges == frozenset([(0, 1, 3)])
    assert inst.splits[(1, 2)][0] == frozenset([(1, 3)])


@pytest.mark.parametrize('seed', [0, 1, 2])
def test_otherway_edges_follow_slices(seed):
    """xyz with z in Z_beta and xy in Q^alpha is an edge iff beta <= alpha."""
    inst = otherway_hypergraph(2, 3, seed)
    label = {pair: alpha for alpha, part in enumerate(inst.q_xy, start=1) for pair in part}
    for x, y in product(inst.xs, inst.ys):
        for beta, block in enumerate(inst.zs, start=1):
            for z in block:
                assert inst.h.has_edge(x, y, z) == (beta <= label[(x, y)])
