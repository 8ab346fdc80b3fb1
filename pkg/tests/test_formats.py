"""Tests for the "3G v1" and "bip" text formats.

Test categories:
  - unit: known texts parsed and written
  - negative: malformed files rejected with their line number
"""
import pytest

from modules.core import BipartiteGraph, ThreeGraph
from modules.formats import dumps, file_hash, loads, read_graph, write_graph
from modules.helpers import InvalidInputError


def test_three_graph_text():
    """Edges sorted, parts written after them."""
    h = ThreeGraph(6, frozenset([(3, 0, 5), (1, 2, 5)]), ((0, 1), (2, 3), (4, 5)))
    text = dumps(h)
    assert text == '3graph 6\n0 3 5\n1 2 5\npart 0 0 1\npart 1 2 3\npart 2 4 5\n'
    assert loads(text) == h


def test_bip_text():
    """The header picks the bipartite reader."""
    g = BipartiteGraph(2, 3, frozenset([(1, 2), (0, 0)]))
    assert dumps(g) == 'bip 2 3\n0 0\n1 2\n'
    assert loads(dumps(g)) == g


@pytest.mark.parametrize('text,line', [
    ('3graph 4\n0 1\n', 2),
    ('3graph 4\n0 1 2\n2 1 3\n', 3),
    ('3graph 4\n0 1 9\n', 2),
    ('3graph x\n', 1),
    ('graph 4\n', 1),
    ('3graph 4\n0 1 2\n\n', 3),
    ('3graph 4\n0 a 2\n', 2),
    ('bip 2 2\n0 5\n', 2),
])
def test_malformed_reports_line(text, line):
    """Parse errors carry the offending line."""
    with pytest.raises(InvalidInputError) as info:
        loads(text)
    assert info.value.line == line
    assert str(info.value).startswith(f"line {line}: ")


def test_file_round_trip_and_hash(tmp_path):
    """Writing then reading gives the same graph; the hash is the file sha256."""
    path = tmp_path / 'h.3g'
    h = ThreeGraph(3, frozenset([(0, 1, 2)]))
    write_graph(h, str(path))
    assert read_graph(str(path)) == h
    assert len(file_hash(str(path))) == 64
    assert file_hash(str(path)) == file_hash(str(path))


def test_missing_file(tmp_path):
    """A missing file is an input error."""
    with pytest.raises(InvalidInputError):
        read_graph(str(tmp_path / 'nope.3g'))


def test_partition_conflicting_with_edges():
    """Part lines that put two vertices of an edge together are refused."""
    with pytest.raises(InvalidInputError, match='meets a part twice'):
        loads('3graph 6\n1 2 3\npart 0 0 1\npart 1 2 3\npart 2 4 5\n')
