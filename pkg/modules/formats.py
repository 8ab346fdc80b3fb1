"""Text formats.

3G v1::

    3graph <n>
    i j k            one edge per line, i < j < k, 0-based
    part <p> v ...   optional, p in {0, 1, 2}; written after the edges

bip::

    bip <m> <n>
    i j
"""
import hashlib

from modules.core import BipartiteGraph, ThreeGraph
from modules.helpers import InvalidInputError, get_logger

logger = get_logger(__name__)


def _ints(tokens, lineno):
    try:
        return [int(t) for t in tokens]
    except ValueError:
        raise InvalidInputError(f"expected integers, got {' '.join(tokens)!r}", line=lineno)


def dumps_3g(h):
    lines = [f"3graph {h.n}"]
    lines.extend(f"{a} {b} {c}" for a, b, c in sorted(h.edges))
    if h.partition is not None:
        for p, part in enumerate(h.parts):
            lines.append(' '.join(['part', str(p), *map(str, part)]))
    return '\n'.join(lines) + '\n'


def loads_3g(text):
    lines = text.split('\n')
    if lines and lines[-1] == '':
        lines.pop()
    if not lines:
        raise InvalidInputError("empty input, expected '3graph <n>' header", line=1)
    header = lines[0].split()
    if len(header) != 2 or header[0] != '3graph':
        raise InvalidInputError("expected '3graph <n>' header", line=1)
    n = _ints(header[1:], 1)[0]
    edges, parts = [], {}
    for lineno, line in enumerate(lines[1:], start=2):
        tokens = line.split()
        if not tokens:
            raise InvalidInputError("blank line", line=lineno)
        if tokens[0] == 'part':
            values = _ints(tokens[1:], lineno)
            if not values or values[0] not in (0, 1, 2) or values[0] in parts:
                raise InvalidInputError("bad part line", line=lineno)
            parts[values[0]] = values[1:]
            continue
        if len(tokens) != 3:
            raise InvalidInputError(f"expected 3 vertices, got {len(tokens)}", line=lineno)
        i, j, k = _ints(tokens, lineno)
        if not (i < j < k):
            raise InvalidInputError(f"edge {i} {j} {k} is not strictly increasing", line=lineno)
        if i < 0 or k >= n:
            raise InvalidInputError(f"edge {i} {j} {k} out of range for n={n}", line=lineno)
        edges.append((i, j, k))
    partition = None
    if parts:
        if sorted(parts) != [0, 1, 2]:
            raise InvalidInputError("partition needs parts 0, 1 and 2")
        partition = (parts[0], parts[1], parts[2])
    return ThreeGraph(n, frozenset(edges), partition)


def dumps_bip(g):
    lines = [f"bip {g.left_size} {g.right_size}"]
    lines.extend(f"{i} {j}" for i, j in sorted(g.edges))
    return '\n'.join(lines) + '\n'


def loads_bip(text):
    lines = text.split('\n')
    if lines and lines[-1] == '':
        lines.pop()
    if not lines:
        raise InvalidInputError("empty input, expected 'bip <m> <n>' header", line=1)
    header = lines[0].split()
    if len(header) != 3 or header[0] != 'bip':
        raise InvalidInputError("expected 'bip <m> <n>' header", line=1)
    m, n = _ints(header[1:], 1)
    edges = []
    for lineno, line in enumerate(lines[1:], start=2):
        tokens = line.split()
        if len(tokens) != 2:
            raise InvalidInputError(f"expected 2 vertices, got {len(tokens)}", line=lineno)
        i, j = _ints(tokens, lineno)
        if not (0 <= i < m and 0 <= j < n):
            raise InvalidInputError(f"pair {i} {j} out of range", line=lineno)
        edges.append((i, j))
    if len(set(edges)) != len(edges):
        raise InvalidInputError("duplicate bipartite pair")
    return BipartiteGraph(m, n, frozenset(edges))


def dumps(graph):
    if isinstance(graph, ThreeGraph):
        return dumps_3g(graph)
    return dumps_bip(graph)


def loads(text):
    """ Either format, picked by the header word """
    head = text.lstrip().split(None, 1)
    if head and head[0] == 'bip':
        return loads_bip(text)
    return loads_3g(text)


def read_graph(path):
    try:
        with open(path, encoding='ascii') as fh:
            text = fh.read()
    except OSError as e:
        raise InvalidInputError(f"cannot read {path}: {e}")
    except UnicodeDecodeError:
        raise InvalidInputError(f"{path} is not ASCII")
    logger.info(f"read graph from {path}")
    return loads(text)


def write_graph(graph, path):
    with open(path, 'w', encoding='ascii', newline='\n') as fh:
        fh.write(dumps(graph))
    logger.info(f"wrote {graph!r} to {path}")


def file_hash(path):
    with open(path, 'rb') as fh:
        return hashlib.sha256(fh.read()).hexdigest()
