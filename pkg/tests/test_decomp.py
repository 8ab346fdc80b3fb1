"""Tests for decompositions, triad classification, error shapes, refinement and encodings.

Test categories:
  - property_based: random decompositions are valid and survive JSON
  - unit: complete triads, synthetic error shapes, known encodings
  - negative: malformed decompositions and bad parameters
"""
from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import constants
from modules.core import ThreeGraph
from modules.decomp import (Decomposition, TriadReport, binary_disc3_construction, build_decomposition,
                            classify_triads, common_refinement, error_shape, extract_fop2_witness, find_encoding,
                            fix_disc2_irregular, homogeneity_report, ip2_encoding_instance, linear_from_binary,
                            reduced_encoding, verify_approx_refinement)
from modules.detect import PatternWitness
from modules.helpers import InvalidInputError, PreconditionError


def complete_tripartite(side):
    parts = (range(0, side), range(side, 2 * side), range(2 * side, 3 * side))
    return ThreeGraph(3 * side, frozenset(product(*parts)), parts)


def report(triple, classification=constants.DISC3_IRREGULAR):
    return TriadReport(triple, (0, 0, 0), (0, 0, 0), 1, Fraction(1, 2), Fraction(0), Fraction(1, 2), True,
                       classification)


@pytest.mark.property_based
@given(st.integers(3, 12), st.integers(1, 3), st.integers(1, 3), st.integers(0, 1000))
@settings(max_examples=30, deadline=None)
def test_random_decomposition_is_valid(n, t, ell, seed):
    """Classes are an equipartition and every pair is covered by l disjoint parts."""
    t = min(t, n)
    d = build_decomposition(ThreeGraph(n), t, ell, seed=seed)
    assert d.t == t and d.n == n
    assert max(map(len, d.classes)) - min(map(len, d.classes)) <= 1
    assert Decomposition.from_json(d.to_json()).dumps() == d.dumps()


def test_decomposition_file_round_trip(tmp_path):
    """save then load keeps classes and parts."""
    d = build_decomposition(ThreeGraph(9), 3, 2, seed=4)
    path = tmp_path / 'd.json'
    d.save(path)
    assert Decomposition.load(path).dumps() == d.dumps()


def test_build_is_reproducible():
    """The same seed gives the same decomposition."""
    h = ThreeGraph(10)
    assert build_decomposition(h, 3, 2, seed=7).dumps() == build_decomposition(h, 3, 2, seed=7).dumps()


def test_natural_strategy_keeps_parts():
    """With t = 3 the natural classes are the parts of the 3-partition."""
    h = complete_tripartite(2)
    d = build_decomposition(h, 3, 1, strategy='natural')
    assert d.classes == ((0, 1), (2, 3), (4, 5))


def test_decomposition_rejects():
    """Unequal classes, overlapping parts, bad strategies and missing files are rejected."""
    with pytest.raises(InvalidInputError):
        Decomposition([[0], [1, 2, 3]], 1, {(0, 1): [{(0, 1), (0, 2), (0, 3)}]})
    with pytest.raises(InvalidInputError):
        Decomposition([[0], [1]], 2, {(0, 1): [{(0, 1)}, {(0, 1)}]})
    with pytest.raises(InvalidInputError):
        Decomposition([[0], [1]], 1, {(0, 1): [set()]})
    with pytest.raises(InvalidInputError):
        build_decomposition(complete_tripartite(2), 2, 1, strategy='natural')
    with pytest.raises(InvalidInputError):
        build_decomposition(ThreeGraph(4), 2, 1, strategy='given')
    with pytest.raises(InvalidInputError):
        build_decomposition(ThreeGraph(4), 5, 1)
    with pytest.raises(InvalidInputError):
        Decomposition.load('no/such/decomposition.json')


def test_from_json_checks_class_count():
    """A declared t disagreeing with the classes is rejected."""
    data = build_decomposition(ThreeGraph(6), 3, 1).to_json()
    data['t'] = 4
    with pytest.raises(InvalidInputError):
        Decomposition.from_json(data)


def test_complete_triad_is_regular():
    """One part per pair over a complete 3-partite 3-graph gives a single regular triad of density 1."""
    h = complete_tripartite(2)
    d = build_decomposition(h, 3, 1, strategy='natural')
    reports = classify_triads(h, d, Fraction(1, 10), Fraction(1, 10), mu=Fraction(1, 4), threads=1)
    assert len(reports) == 1
    r = reports[0]
    assert r.classification == constants.REGULAR
    assert r.triangles == 8 and r.d3 == 1 and r.homogeneous
    assert error_shape(reports, 3, eps1=Fraction(1, 10)).kind == constants.ZERO
    hom = homogeneity_report(h, d, Fraction(1, 4))
    assert hom.fraction == Fraction(8, 20)
    assert hom.covered_triples == 8


def test_error_shape_kinds():
    """Two irregular triples through one pair are BINARY, LINEAR or neither by budget."""
    reports = [report((0, 1, 2)), report((0, 1, 3)), report((1, 2, 3), constants.REGULAR)]
    binary = error_shape(reports, 4, budgets=(1, 4))
    assert binary.kind == constants.BINARY
    assert binary.cover == ((0, 1),)
    linear = error_shape(reports, 4, budgets=(0, 4))
    assert linear.kind == constants.LINEAR
    assert linear.cover == ((0, 1, 2), (0, 1, 3))
    assert error_shape(reports, 4, budgets=(0, 1)).kind == constants.NONE_OF_THESE
    assert linear_from_binary([(0, 1)], 4) == ((0, 1, 2), (0, 1, 3))


def test_error_shape_needs_budgets():
    """Without budgets the eps1 default is required."""
    with pytest.raises(InvalidInputError):
        error_shape([], 3)


def test_binary_construction_uses_half_classes():
    """Every new part of a cover pair lives on one half of the lower class."""
    h = ThreeGraph(12)
    d = build_decomposition(h, 3, 2, seed=1)
    out = binary_disc3_construction(h, d, [(0, 1)], seed=1)
    lower = out.classes[0]
    halves = (set(lower[:2]), set(lower[2:]))
    for part in out.edge_parts[(0, 1)]:
        rows = {u for u, _ in part}
        assert rows <= halves[0] or rows <= halves[1]
    assert out.edge_parts[(1, 2)] == d.edge_parts[(1, 2)]


def test_binary_construction_needs_two_parts():
    """The half-class slicing is impossible with a single part per pair."""
    h = ThreeGraph(6)
    with pytest.raises(PreconditionError):
        binary_disc3_construction(h, build_decomposition(h, 3, 1), [(0, 1)])


def test_fix_with_loose_target_keeps_everything():
    """A target of 1 passes every part, so nothing is re-sliced."""
    h = ThreeGraph(8)
    d = build_decomposition(h, 2, 2, seed=3)
    out, fix = fix_disc2_irregular(h, d, 1)
    assert fix.resliced_pairs == ()
    assert fix.kept == 2 and fix.failing_before == 0 and fix.failing_after == 0
    assert out.dumps() == d.dumps()


def test_fix_result_is_a_decomposition():
    """A strict target still yields l covering parts per pair."""
    h = ThreeGraph(12)
    d = build_decomposition(h, 3, 2, seed=5)
    out, fix = fix_disc2_irregular(h, d, 0)
    assert out.classes == d.classes and out.ell == d.ell
    assert fix.failing_after == len(fix.residual)


def test_decomposition_refines_itself():
    """Every part of d sits inside a part of d, with no exceptional pairs."""
    d = build_decomposition(ThreeGraph(9), 3, 2, seed=2)
    check = verify_approx_refinement(d, d, Fraction(1, 10), 0)
    assert check.passed
    assert check.sigma == ()


def test_common_refinement_passes_at_achieved_values():
    """The common refinement of two decompositions checks out against both."""
    h = ThreeGraph(8)
    p = build_decomposition(h, 2, 2, seed=0)
    q = build_decomposition(h, 2, 2, seed=1)
    r, checks = common_refinement(p, q)
    assert r.ell == 4
    assert r.n == 8
    assert checks['p'].passed and checks['q'].passed


def test_ip2_encoding_relation():
    """For k = 1 the decided E1/E0 entries follow the B-C part index."""
    h, d = ip2_encoding_instance(1, 3, seed=0)
    enc = reduced_encoding(h, d, Fraction(1, 10))
    for (edge, corner), value in enc.relation.items():
        u, i, j, beta, gamma = corner
        if u == 0:
            assert value == edge[2]
        else:
            assert value == gamma
    assert set(enc.densities.values()) <= {0, 1}


def test_ip2_has_no_half_graph_encoding_for_one_class():
    """With a single A class no pair varies with both the row and the column."""
    h, d = ip2_encoding_instance(1, 3, seed=0)
    enc = reduced_encoding(h, d, Fraction(1, 10))
    assert find_encoding(enc, 'HALF_GRAPH:k=2').status == constants.ABSENT_CERTIFIED
    assert find_encoding(enc, 'HALF_GRAPH:k=2', budget=0).status == constants.INCONCLUSIVE


def test_encoding_rejects():
    """Thresholds outside (0, 1/2), non-bipartite patterns and missing witnesses are rejected."""
    h, d = ip2_encoding_instance(1, 2, seed=0)
    with pytest.raises(InvalidInputError):
        reduced_encoding(h, d, Fraction(1, 2))
    enc = reduced_encoding(h, d, Fraction(1, 10))
    with pytest.raises(InvalidInputError):
        find_encoding(enc, 'HP:k=2')
    with pytest.raises(InvalidInputError):
        extract_fop2_witness(h, d, PatternWitness('HALF_GRAPH:k=2', constants.ABSENT_CERTIFIED), 2)
