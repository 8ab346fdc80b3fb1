"""Tests for pattern search, VC dimension and tree rank.

Test categories:
  - property_based: tree rank of half graphs, VC of powersets
  - unit: named patterns found or certified absent
  - negative: zero budget and bad tree depth
"""
from itertools import chain, combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import constants
from modules.construct import half_graph, hp_graph, powerset_graph
from modules.core import BipartiteGraph
from modules.detect import (DimensionCaps, count_d_trees, dimension_report, find_pattern, search_embedding,
                            tree_rank, vc_dimension, vc_graph)
from modules.helpers import InvalidInputError


def _all_subsets(n):
    return [set(c) for c in chain.from_iterable(combinations(range(n), r) for r in range(n + 1))]


@pytest.mark.property_based
@given(st.integers(1, 5))
@settings(max_examples=5, deadline=None)
def test_powerset_family_shatters_ground(n):
    """Every subset of the ground set shatters it completely."""
    result = vc_dimension(range(n), _all_subsets(n))
    assert result.value == n
    assert not result.capped
    assert sorted(result.witness) == list(range(n))


@pytest.mark.property_based
@given(st.integers(1, 4))
@settings(max_examples=4, deadline=None)
def test_half_graph_tree_rank(d):
    """H(2^d) has tree rank exactly d, with a witness that re-verifies."""
    g = half_graph(2 ** d)
    value, witness = tree_rank(g)
    assert value == d
    assert witness.verify(g)
    assert len(witness.leaves) == 2 ** d


def test_vc_cap_marks_lower_bound():
    """Reaching the cap reports the cap as a lower bound."""
    result = vc_dimension(range(3), _all_subsets(3), cap=2)
    assert result.value == 2
    assert result.capped


def test_vc_of_chains_and_singletons():
    """Nested neighbourhoods and singletons both have VC dimension 1."""
    forward, backward = vc_graph(half_graph(4))
    assert forward.value == 1 and backward.value == 1
    assert vc_dimension(range(4), [{x} for x in range(4)]).value == 1
    assert vc_dimension(range(4), []).value == 0


def test_powerset_graph_vc():
    """The powerset graph on k points has VC dimension k."""
    forward, _ = vc_graph(powerset_graph(3).transpose())
    assert forward.value == 3


def test_hp_two_found_in_hp_three():
    """HP(2) embeds in HP(3) with the embedding re-verified."""
    witness = find_pattern(hp_graph(3), 'HP:k=2')
    assert witness.status == constants.FOUND
    assert witness.found
    assert len(witness.embedding) == 6


def test_half_graph_absent_from_empty_graph():
    """An edgeless host has one twin class and cannot host H(2)."""
    host = BipartiteGraph(3, 3, frozenset())
    witness = find_pattern(host, 'HALF_GRAPH:k=2')
    assert witness.status == constants.ABSENT_CERTIFIED


def test_half_graph_found_in_larger_half_graph():
    """H(2) sits inside H(5) as an induced subgraph."""
    witness = find_pattern(half_graph(5), 'HALF_GRAPH:k=2')
    assert witness.status == constants.FOUND


def test_zero_budget_is_inconclusive():
    """No search nodes means no verdict."""
    witness = search_embedding(half_graph(4), half_graph(2), 'HALF_GRAPH:k=2', budget=0)
    assert witness.status == constants.INCONCLUSIVE


def test_count_d_trees_depth_one():
    """Depth-one trees count node splits weighted by both sides."""
    assert count_d_trees(half_graph(2)).count == 1
    full = BipartiteGraph(2, 2, frozenset((i, j) for i in range(2) for j in range(2)))
    assert count_d_trees(full).count == 0
    assert count_d_trees(half_graph(2)).exact


def test_count_d_trees_rejects_depth_zero():
    """Trees have at least one node level."""
    with pytest.raises(InvalidInputError):
        count_d_trees(half_graph(2), d=0)


def test_dimension_report_hp_ladder():
    """HP(2) contains every HP member up to the cap, so hop2 is only a lower bound."""
    caps = DimensionCaps(vc=2, vc2=1, order=2, weak=1, fop=1, hop=2)
    report = dimension_report(hp_graph(2), caps)
    assert report['hop2'] == {'value': 2, 'status': constants.INCONCLUSIVE}
    assert set(report) >= {'vc', 'wvc', 'vc2_lower_bound', 'order_property', 'weak_stability', 'fop2', 'hop2'}
