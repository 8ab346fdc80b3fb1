"""Tests for special instances: metrics, axioms, split witnesses and irregularity witnesses.

Test categories:
  - property_based: random equipartitions
  - unit: known witnesses on GS_3(2) and HP(N)
  - negative: broken metrics, failed preconditions, unknown axioms
"""
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import constants
from modules.construct import gs_graph
from modules.core import ThreeGraph, VertexPartition
from modules.helpers import InvalidInputError, PreconditionError
from modules.special import (MetricPart, build_instance, gs_ball_partition, gs_distance, gs_instance, gs_metric,
                             hbark_irregular_witness, hp_instance, mixed_density_scan, neighborhood_intersection_ball,
                             pair_split_witness, parse_axioms, random_equipartition, split_witness, verify_axioms)


def natural_partition(sizes):
    classes, start = [], 0
    for s in sizes:
        classes.append(tuple(range(start, start + s)))
        start += s
    return VertexPartition(tuple(classes), start)


@pytest.mark.property_based
@given(st.integers(3, 60), st.integers(1, 8), st.integers(0, 1000))
@settings(max_examples=50)
def test_random_equipartition(n, t, seed):
    """Random equipartitions cover the vertex set with class sizes differing by at most one."""
    t = min(t, n)
    partition = random_equipartition(n, t, seed)
    assert partition.t == t and partition.n == n
    assert partition.is_equipartition()


def test_gs_distance():
    """Distance halves its exponent with each shared leading digit."""
    assert gs_distance((0, 1), (0, 2), 3) == Fraction(1, 3)
    assert gs_distance((1, 1), (0, 1), 3) == 1
    assert gs_distance((2, 2), (2, 2), 3) == 0


def test_gs_ball_partition_by_first_digit():
    """Open balls of radius 1/2 in GS_3(2) are the three first-digit cosets."""
    metric = gs_metric(3, 2)[0]
    family = gs_ball_partition(metric, 0, Fraction(1, 2))
    assert family.m == 3
    assert family.defect(0, 1) is None
    assert sorted(family.members[0]) == [0, 1, 2]


def test_asymmetric_metric_rejected():
    """A distance table must be symmetric."""
    with pytest.raises(InvalidInputError):
        MetricPart(0, range(2), [[0, 1], [2, 0]], 2, 0, Fraction(1, 2), 0, Fraction(1, 2), Fraction(1, 4))


def test_build_instance():
    """Parameters arrive as strings; missing or unknown ones are rejected."""
    inst = build_instance('gs', {'p': '3', 'n': '2'})
    assert inst.family == constants.GS
    assert inst.graph.n == 27
    with pytest.raises(InvalidInputError):
        build_instance('gs', {'p': '3'})
    with pytest.raises(InvalidInputError):
        build_instance('xx', {})
    with pytest.raises(PreconditionError):
        build_instance('hp', {'N': '50', 'tau': '1/3', 'mu': '1/100'})


def test_parse_axioms():
    """Axiom lists take ranges and single ids between 1 and 9."""
    assert parse_axioms('1,3,5-7') == [1, 3, 5, 6, 7]
    assert parse_axioms('1-9') == list(range(1, 10))
    for bad in ('0', '10', 'a', ''):
        with pytest.raises(InvalidInputError):
            parse_axioms(bad)


def test_gs_passes_every_axiom():
    """GS_3(2) satisfies all nine axioms; 5 to 8 hold vacuously."""
    reports = verify_axioms(gs_instance(3, 2), threads=1)
    assert all(r.passed for r in reports)
    assert [r.axiom for r in reports if r.mode == constants.VACUOUS] == [5, 6, 7, 8]


def test_hp_passes_sampled_axioms():
    """HP(200) with tau = 1/5, mu = 1/25 satisfies axioms 1, 3 and 9."""
    inst = hp_instance(200, Fraction(1, 5), Fraction(1, 25))
    reports = verify_axioms(inst, axioms=(1, 3, 9), threads=1)
    assert all(r.passed for r in reports)


def test_gs_split_witness():
    """GS_3(2) splits B(0) and B(9) at radius 1/3 with the formula's pair."""
    w = split_witness(gs_instance(3, 2), 0, 9, Fraction(1, 3))
    assert (w.f0, w.f1) == (20, 19)
    assert w.source == constants.FROM_FORMULA


def test_hp_split_witness():
    """HP(100) splits x = 49 from y = 109 at radius 1/100."""
    inst = hp_instance(100, Fraction(6, 25), Fraction(1, 15))
    w = split_witness(inst, 49, 109, Fraction(1, 100))
    assert (w.f0, w.f1) == (238, 244)
    with pytest.raises(PreconditionError):
        split_witness(inst, 0, 109, Fraction(1, 100))
    with pytest.raises(InvalidInputError):
        split_witness(inst, 49, 50, Fraction(1, 100))


@pytest.mark.parametrize('y', range(9, 18))
def test_gs_pair_split(y):
    """Every y of the middle part separates x = 3 from x' = 6 on the x side."""
    w = pair_split_witness(gs_instance(3, 2), 3, 6, y)
    assert w.certified
    assert w.edge_side == 'x'


def test_hp_pair_split():
    """HP(200) separates 99 from 109 against 211, with the edge block at x'."""
    inst = hp_instance(200, Fraction(1, 5), Fraction(1, 25))
    radii = (Fraction(1, 1000), Fraction(1, 1000), Fraction(48, 1000))
    w = pair_split_witness(inst, 99, 109, 211, radii)
    assert w.z == 481
    assert w.edge_side == 'x_prime'
    with pytest.raises(PreconditionError):
        pair_split_witness(inst, 99, 109, 211, (Fraction(1, 1000), Fraction(1, 1000), Fraction(40, 1000)))
    with pytest.raises(PreconditionError):
        pair_split_witness(inst, 99, 109, 211)


def test_neighborhood_intersection():
    """N(y, z) minus N(y, z') in HP(10) is {23, 24}."""
    inst = hp_instance(10, Fraction(6, 25), Fraction(7, 100))
    ball = neighborhood_intersection_ball(inst, 1, 15, 13)
    assert set(ball.members) == {23, 24}
    assert ball.part == 2
    with pytest.raises(InvalidInputError):
        neighborhood_intersection_ball(inst, 1, 15, 25)


def test_gs_intersection_ball_within_distance():
    """On GS_3(2), over all 9^3 choices of y, z, z', the set is exact and its least ball is no wider than d(z, z')."""
    inst = gs_instance(3, 2)
    edges = gs_graph(3, 2).edges
    for y in range(9):
        for z in range(9, 18):
            for z_prime in range(9, 18):
                ball = neighborhood_intersection_ball(inst, y, z, z_prime)
                expected = {v for v in range(18, 27) if (y, z, v) in edges and (y, z_prime, v) not in edges}
                assert set(ball.members) == expected
                assert ball.bound == inst.metrics[1].distance(z - 9, z_prime - 9)
                assert ball.radius <= ball.bound
                if z == z_prime:
                    assert ball.members == () and ball.radius == 0


def test_hbark_witness_on_natural_partition():
    """The three parts of H-bar(9) give a midpoint witness at threshold 4."""
    w = hbark_irregular_witness(9, natural_partition((9, 9, 9)))
    assert w.classes == (0, 1, 2)
    assert w.thresholds == (4, 4)
    assert w.b1 == tuple(range(9, 13)) and w.b0 == tuple(range(13, 18))
    assert w.c1 == tuple(range(21, 27)) and w.c0 == (18, 19, 20)
    assert w.certificates['order'] and w.certificates['scan']


def test_hbark_needs_three_classes():
    """Two classes cannot hold an irregular triple."""
    with pytest.raises(PreconditionError):
        hbark_irregular_witness(9, natural_partition((14, 13)))
    with pytest.raises(PreconditionError):
        hbark_irregular_witness(9, natural_partition((9, 9, 9)), eps1=Fraction(1, 2))


def test_mixed_density_scan():
    """GS_3(3) over its own parts has one class triple of density 13/27; an empty 3-graph has none."""
    rows = mixed_density_scan(gs_graph(3, 3), natural_partition((27, 27, 27)), Fraction(1, 10))
    assert [(r.classes, r.density) for r in rows] == [((0, 1, 2), Fraction(13, 27))]
    assert mixed_density_scan(ThreeGraph(6), natural_partition((2, 2, 2)), Fraction(1, 10)) == []
    with pytest.raises(InvalidInputError):
        mixed_density_scan(ThreeGraph(6), natural_partition((2, 2)), Fraction(1, 10))
