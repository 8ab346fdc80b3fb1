"""Tests for goodness levels, the staged partitioners, removal and cleanup.

Test categories:
  - property_based: schedules are non-increasing and bounded
  - unit: half graphs with known carves, complete and empty graphs
  - negative: rank above the cap, bad parameters, vertex caps
"""
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import constants
from modules.core import BipartiteGraph, ThreeGraph
from modules.construct import half_graph
from modules.helpers import CapExceededError, InvalidInputError, PreconditionError
from modules.stable import (Schedule, cross_density, epsilon_good_level, fiberwise_good_partition,
                            good_pair_report, goodsets1_partition, goodstrong_partition, stable_removal_cleanup,
                            symmetry_classify, tree_removal_partition)


def complete(m, n):
    return BipartiteGraph(m, n, frozenset((i, j) for i in range(m) for j in range(n)))


@pytest.mark.property_based
@given(st.sampled_from(['geometric', 'harmonic', 'constant']),
       st.fractions(Fraction(1, 100), 1, max_denominator=100), st.integers(1, 50))
@settings(max_examples=100)
def test_schedules_are_non_increasing(kind, value, i):
    """Every schedule stays in (0, 1] and never grows."""
    f = Schedule(kind, value)
    assert 0 < f(i + 1) <= f(i) <= 1


def test_schedule_parse():
    """Schedules parse with or without the f= prefix."""
    assert Schedule.parse('geometric:1/2')(3) == Fraction(1, 8)
    assert Schedule.parse('harmonic:1')(2) == Fraction(1, 2)
    assert Schedule.parse('f=constant:1/10')(7) == Fraction(1, 10)
    assert Schedule.parse('geometric:0.5').label() == 'geometric:1/2'


@pytest.mark.parametrize('text', ['linear:1/2', 'geometric:0', 'geometric:3/2', 'geometric', 'harmonic:x'])
def test_schedule_rejects(text):
    """Unknown kinds, values outside (0, 1] and missing values are rejected."""
    with pytest.raises(InvalidInputError):
        Schedule.parse(text)


def test_epsilon_good_level():
    """The half graph's middle vertex splits the right side in half."""
    assert epsilon_good_level(half_graph(4), range(4)) == (Fraction(1, 2), 2)
    assert epsilon_good_level(complete(3, 3), range(3))[0] == 0
    with pytest.raises(InvalidInputError):
        epsilon_good_level(half_graph(4), [])
    with pytest.raises(InvalidInputError):
        epsilon_good_level(half_graph(4), [0], side='middle')


def test_cross_density():
    """Cross density counts edges over the rectangle."""
    assert cross_density(half_graph(2), [0, 1], [0, 1]) == Fraction(3, 4)
    assert cross_density(half_graph(2), [], [0]) == 0


def test_symmetry_classify():
    """Homogeneous sides force an extreme density; the half graph breaks the hypotheses."""
    assert symmetry_classify(complete(4, 4), Fraction(1, 10)).outcome == constants.DENSITY_HIGH
    assert symmetry_classify(BipartiteGraph(4, 4), Fraction(1, 10)).outcome == constants.DENSITY_LOW
    report = symmetry_classify(half_graph(4), Fraction(1, 10))
    assert report.outcome == constants.HYPOTHESES_FAIL
    assert 1 in report.failing_left
    with pytest.raises(InvalidInputError):
        symmetry_classify(complete(2, 2), Fraction(1, 4))


def test_goodsets1_on_half_graph():
    """H(16) carves {8..15}, {4..7}, {2, 3}, {1} in one stage and leaves {0}."""
    g = half_graph(16)
    partition = goodsets1_partition(g, d_cap=4)
    members = [m for _, m in partition.sets()]
    assert members == [tuple(range(8, 16)), (4, 5, 6, 7), (2, 3), (1,), (0,)]
    assert partition.t == 1
    assert all(partition.checks.values())
    assert partition.to_json()['residue'] == [0]


def test_goodsets1_rank_above_cap():
    """A leaf set of rank 4 is refused with a cap of 3."""
    with pytest.raises(PreconditionError):
        goodsets1_partition(half_graph(16), d_cap=3)


def test_goodsets1_zero_carve():
    """A schedule that rounds the first carve to zero is a precondition failure."""
    with pytest.raises(PreconditionError):
        goodsets1_partition(half_graph(4), d_cap=2, f='geometric:1/100')


def test_good_pair_report_on_half_graph():
    """Only the singleton carves are good from both sides, and every pair among them is complete."""
    g = half_graph(16)
    sets = [m for _, m in goodsets1_partition(g, d_cap=4).sets()]
    rows = good_pair_report(g, sets, Fraction(1, 100))
    assert [r['pair'] for r in rows] == [(3, 3), (3, 4), (4, 4)]
    assert all(r['density'] == 1 and r['outcome'] == constants.DENSITY_HIGH for r in rows)


def test_goodstrong_covers_parts():
    """Every part is either set aside or split into a residue and good sets."""
    g = half_graph(8)
    result = goodstrong_partition(g, [range(4), range(4, 8)], Fraction(1, 2), threads=1)
    assert result.d == 2
    assert result.checks['partition']
    assert result.mode == 'goodstrong'
    assert set(result.omega) <= {0, 1}
    assert result.to_json()['d'] == 2


def test_goodstrong_rejects():
    """Overlapping parts, out-of-range vertices, bad eps, unequal equitable parts and a low d are rejected."""
    g = half_graph(8)
    with pytest.raises(InvalidInputError):
        goodstrong_partition(g, [[0, 1], [1, 2]], Fraction(1, 2))
    with pytest.raises(InvalidInputError):
        goodstrong_partition(g, [[0, 9]], Fraction(1, 2))
    with pytest.raises(InvalidInputError):
        goodstrong_partition(g, [[0, 1]], 1)
    with pytest.raises(PreconditionError):
        goodstrong_partition(g, [[0, 1], [2, 3, 4]], Fraction(1, 2), equitable=True)
    with pytest.raises(PreconditionError):
        goodstrong_partition(g, [range(4)], Fraction(1, 2), d=1, threads=1)


def test_fiberwise_on_empty_three_graph():
    """Empty links have rank 0, so V x V is one good set."""
    result = fiberwise_good_partition(ThreeGraph(3), threads=1)
    assert result.d == 0
    split = result.splits[0]
    assert split.residue == ()
    assert split.good_sets == [tuple((a, b) for a in range(3) for b in range(3))]
    assert all(result.checks.values())


def test_fiberwise_rejects():
    """The vertex cap and overlapping relations are enforced."""
    with pytest.raises(CapExceededError):
        fiberwise_good_partition(ThreeGraph(5), max_vertices=4)
    with pytest.raises(InvalidInputError):
        fiberwise_good_partition(ThreeGraph(3), alpha=[[(0, 1)], [(0, 1)]])


def test_removal_on_complete_graph():
    """No node splits a complete graph, so all leaves form one part."""
    g = complete(4, 4)
    removal = tree_removal_partition(g, d=2)
    assert removal.parts == [(0, 1, 2, 3)]
    assert removal.u_prime == ()
    assert all(removal.checks.values())
    cleanup = stable_removal_cleanup(g, removal, Fraction(1, 4))
    assert cleanup.passed
    assert cleanup.residual.count == 0
    assert cleanup.graph.edges == g.edges


def test_removal_depth_one_on_half_graph():
    """At depth 1 the balanced splitters of H(8) become exceptional."""
    g = half_graph(8)
    removal = tree_removal_partition(g, d=1, mu=Fraction(1, 8))
    assert removal.u_prime == (2, 3, 4, 5, 6)
    assert not removal.checks['u_prime']
    assert removal.checks['goodness']
    cleanup = stable_removal_cleanup(g, removal, Fraction(1, 8))
    assert cleanup.classes == {'1': (0, 1), '0': (7,)}
    assert cleanup.max_defect == Fraction(1, 8)
    assert cleanup.u_zero == (2, 3, 4, 5, 6)
    with pytest.raises(PreconditionError):
        stable_removal_cleanup(g, removal, Fraction(1, 16))


def test_removal_rejects():
    """Depth must be positive and mu inside (0, 1)."""
    with pytest.raises(InvalidInputError):
        tree_removal_partition(half_graph(4), d=0)
    with pytest.raises(InvalidInputError):
        tree_removal_partition(half_graph(4), mu=1)
