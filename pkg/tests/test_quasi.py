"""Tests for the quasirandomness measures against brute-force oracles.

Test categories:
  - property_based: exact searches equal full enumeration
  - unit: closed-form values on complete and empty instances
  - negative: caps and missing partitions
"""
from fractions import Fraction
from itertools import chain, combinations, product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modules.construct import half_graph, hp_graph
from modules.core import BipartiteGraph, ThreeGraph, TripartiteGraph
from modules.helpers import CapExceededError, PreconditionError
from modules.quasi import (adding_bound_holds, cycle2_count, dev23_sum, dev2_sum, disc23_witness_search,
                           disc2_deviation, induced_pattern_count, measure_triad, oct23_count, rank_agreement,
                           subpair_bound_holds, triad_density, vdisc3_deviation)
from modules.suite import _random_triad, naive_dev23


def _subsets(items):
    items = list(items)
    return chain.from_iterable(combinations(items, r) for r in range(len(items) + 1))


def brute_disc2(g, d):
    best = Fraction(0)
    for left in _subsets(range(g.left_size)):
        for right in _subsets(range(g.right_size)):
            e = sum(1 for u in left for w in right if (u, w) in g.edges)
            best = max(best, abs(e - d * len(left) * len(right)))
    return best / (g.left_size * g.right_size)


def brute_vdisc3(h, d):
    parts = h.parts
    best = Fraction(0)
    for a in _subsets(parts[0]):
        for b in _subsets(parts[1]):
            for c in _subsets(parts[2]):
                e = sum(1 for x, y, z in product(a, b, c) if h.has_edge(x, y, z))
                best = max(best, abs(e - d * len(a) * len(b) * len(c)))
    return best / (len(parts[0]) * len(parts[1]) * len(parts[2]))


@st.composite
def bipartite_graphs(draw, max_side=4):
    m, n = draw(st.integers(1, max_side)), draw(st.integers(1, max_side))
    pairs = [(i, j) for i in range(m) for j in range(n)]
    return BipartiteGraph(m, n, frozenset(draw(st.sets(st.sampled_from(pairs)))))


@st.composite
def tripartite_three_graphs(draw, side=2):
    parts = (range(0, side), range(side, 2 * side), range(2 * side, 3 * side))
    cells = list(product(*parts))
    edges = draw(st.sets(st.sampled_from(cells)))
    return ThreeGraph(3 * side, frozenset(edges), parts)


@pytest.mark.property_based
@given(bipartite_graphs())
@settings(max_examples=60, deadline=None)
def test_disc2_matches_brute_force(g):
    """Greedy completion over the smaller side is exact."""
    d = g.density()
    report = disc2_deviation(g, d, mode='exact', threads=1)
    assert report.exact
    assert report.deviation == brute_disc2(g, d)


@pytest.mark.property_based
@given(bipartite_graphs(), st.fractions(0, 1, max_denominator=5))
@settings(max_examples=40, deadline=None)
def test_disc2_witness_attains_deviation(g, d):
    """The reported rectangle realises the reported deviation at any density."""
    report = disc2_deviation(g, d, threads=1)
    left, right = report.witness
    e = sum(1 for u in left for w in right if (u, w) in g.edges)
    assert abs(e - d * len(left) * len(right)) / (g.left_size * g.right_size) == report.deviation


@pytest.mark.property_based
@given(tripartite_three_graphs())
@settings(max_examples=40, deadline=None)
def test_vdisc3_matches_brute_force(h):
    """Two parts enumerated and the third completed greedily is exact."""
    d = Fraction(len(h.edges), 8)
    assert vdisc3_deviation(h).deviation == brute_vdisc3(h, d)


@pytest.mark.property_based
@given(bipartite_graphs())
@settings(max_examples=40, deadline=None)
def test_dev2_at_zero_density_counts_cycles(g):
    """With d2 = 0 the signed sum is the normalised 4-cycle count."""
    m, n = g.left_size, g.right_size
    assert dev2_sum(g, 0) == Fraction(cycle2_count(g), m * m * n * n)


@pytest.mark.property_based
@given(st.integers(0, 10 ** 6))
@settings(max_examples=15, deadline=None)
def test_dev23_matches_naive_sum(seed):
    """The factorised dev23 equals the six-fold sum written out."""
    h, g = _random_triad(seed, 0)
    assert dev23_sum(h, g) == naive_dev23(h, g)


@pytest.mark.parametrize('eps', [Fraction(1, 100), Fraction(1, 20), Fraction(1, 10)])
def test_sparse_three_graph_has_small_vdisc3(eps):
    """Triple density at most eps keeps vdisc3 at most eps."""
    side = 6
    parts = (range(0, side), range(side, 2 * side), range(2 * side, 3 * side))
    cells = sorted(product(*parts))
    h = ThreeGraph(3 * side, frozenset(cells[::7][:int(eps * side ** 3)]), parts)
    assert vdisc3_deviation(h).deviation <= eps


def test_complete_graph_is_quasirandom():
    """K_{m,n} at its own density deviates by 0 and has m^2 n^2 4-cycles."""
    g = BipartiteGraph(3, 4, frozenset((i, j) for i in range(3) for j in range(4)))
    assert disc2_deviation(g).deviation == 0
    assert cycle2_count(g) == 9 * 16
    assert dev2_sum(g, 1) == 0


def test_half_graph_deviation():
    """H(2) at density 3/4 deviates most on its single non-edge."""
    assert disc2_deviation(half_graph(2), Fraction(3, 4)).deviation == Fraction(3, 16)


def test_disc2_eps_restricts_subsets():
    """With eps, both sides of the witness are at least eps of their side."""
    g = half_graph(4)
    report = disc2_deviation(g, Fraction(1, 2), eps=Fraction(1, 2))
    left, right = report.witness
    assert len(left) >= 2 and len(right) >= 2


def test_disc2_cap():
    """Exact mode past the cap raises; auto mode samples instead."""
    g = half_graph(3)
    with pytest.raises(CapExceededError):
        disc2_deviation(g, mode='exact', cap=2)
    report = disc2_deviation(g, mode='auto', cap=2, samples=64)
    assert not report.exact


def test_vdisc3_needs_partition():
    """vdisc3 is defined for 3-partite 3-graphs only."""
    with pytest.raises(PreconditionError):
        vdisc3_deviation(ThreeGraph(3, frozenset([(0, 1, 2)])))


def test_complete_triad_measures():
    """A complete triad has d3 = 1, no deviation and every octahedron."""
    g = TripartiteGraph.consecutive((2, 2, 2), [(a, b) for a in range(2) for b in range(2)],
                                    [(a, c) for a in range(2) for c in range(2)],
                                    [(b, c) for b in range(2) for c in range(2)])
    h = ThreeGraph(6, frozenset(product(range(2), range(2, 4), range(4, 6))), g.labels)
    assert triad_density(h, g) == (1, 8)
    assert dev23_sum(h, g) == 0
    assert oct23_count(h, g) == 64
    assert disc23_witness_search(h, g).deviation == 0
    tm = measure_triad(h, g)
    assert tm.d3 == 1 and tm.triangles == 8 and tm.oct23_count == 64


def test_adding_and_subpair_bounds():
    """Deviation is subadditive and survives restriction to large sub-pairs."""
    g1 = BipartiteGraph(3, 3, frozenset([(0, 0), (1, 1)]))
    g2 = BipartiteGraph(3, 3, frozenset([(2, 2), (0, 1)]))
    assert adding_bound_holds(g1, g2)[0]
    assert subpair_bound_holds(half_graph(6), [0, 1, 2], [3, 4, 5])[0]


def test_rank_agreement():
    """Monotone series agree perfectly."""
    assert rank_agreement([1, 2, 3], [2, 4, 9]) == 1.0
    assert rank_agreement([1], [5]) == 1.0


def test_induced_pattern_count_hp():
    """HP(2) maps onto itself only through the identity."""
    h = hp_graph(2)
    assert induced_pattern_count(h, h.parts, h) == 1
