"""Graph data model shared by every other module.

Vertices are 0-based integers. Families defined with 1-based indices are
shifted where they are built (see modules/construct.py).
"""
from dataclasses import dataclass, field
from functools import cached_property
from fractions import Fraction
from itertools import combinations, permutations

import numpy as np

from modules.helpers import InvalidInputError, bits, get_logger

logger = get_logger(__name__)


def _sorted_triple(triple):
    a, b, c = sorted(int(x) for x in triple)
    return a, b, c


@dataclass(frozen=True)
class ThreeGraph:
    n: int
    edges: frozenset = frozenset()
    partition: tuple = None

    def __post_init__(self):
        if self.n < 0:
            raise InvalidInputError(f"negative vertex count {self.n}")
        edges = set()
        for triple in self.edges:
            if len(triple) != 3:
                raise InvalidInputError(f"edge {tuple(triple)} is not a triple")
            a, b, c = _sorted_triple(triple)
            if a == b or b == c:
                raise InvalidInputError(f"degenerate triple {tuple(triple)}")
            if a < 0 or c >= self.n:
                raise InvalidInputError(f"triple {tuple(triple)} out of range for n={self.n}")
            edges.add((a, b, c))
        object.__setattr__(self, 'edges', frozenset(edges))
        if self.partition is not None:
            parts = tuple(frozenset(int(v) for v in part) for part in self.partition)
            if len(parts) != 3:
                raise InvalidInputError(f"partition must have 3 parts, got {len(parts)}")
            seen = set()
            for part in parts:
                if seen & part:
                    raise InvalidInputError("partition parts overlap")
                if any(v < 0 or v >= self.n for v in part):
                    raise InvalidInputError("partition vertex out of range")
                seen |= part
            object.__setattr__(self, 'partition', parts)
            for e in self.edges:
                for part in parts:
                    if sum(v in part for v in e) > 1:
                        raise InvalidInputError(f"edge {e} meets a part twice")

    @cached_property
    def pair_links(self):
        """ (u, v) with u < v -> bitmask of the third vertices w with uvw an edge """
        links = {}
        for a, b, c in self.edges:
            links[(a, b)] = links.get((a, b), 0) | (1 << c)
            links[(a, c)] = links.get((a, c), 0) | (1 << b)
            links[(b, c)] = links.get((b, c), 0) | (1 << a)
        return links

    def link(self, u, v):
        if u > v:
            u, v = v, u
        return self.pair_links.get((u, v), 0)

    def has_edge(self, a, b, c):
        if a == b or b == c or a == c:
            return False
        return _sorted_triple((a, b, c)) in self.edges

    has_triple = has_edge

    @cached_property
    def vertex_links(self):
        """ a -> set of pairs (b, c), b < c, forming an edge with a """
        links = {v: set() for v in range(self.n)}
        for a, b, c in self.edges:
            links[a].add((b, c))
            links[b].add((a, c))
            links[c].add((a, b))
        return links

    def degree(self, v):
        return len(self.vertex_links[v])

    @property
    def parts(self):
        """ Parts as sorted tuples, or None """
        if self.partition is None:
            return None
        return tuple(tuple(sorted(p)) for p in self.partition)

    def __repr__(self):
        return f"<ThreeGraph: n {self.n}, edges {len(self.edges)}, partitioned {self.partition is not None}>"


@dataclass(frozen=True)
class BipartiteGraph:
    left_size: int
    right_size: int
    edges: frozenset = frozenset()

    def __post_init__(self):
        edges = set()
        for pair in self.edges:
            i, j = int(pair[0]), int(pair[1])
            if not (0 <= i < self.left_size and 0 <= j < self.right_size):
                raise InvalidInputError(f"bipartite edge {(i, j)} out of range")
            edges.add((i, j))
        object.__setattr__(self, 'edges', frozenset(edges))

    @cached_property
    def matrix(self):
        m = np.zeros((self.left_size, self.right_size), dtype=np.int64)
        for i, j in self.edges:
            m[i, j] = 1
        return m

    @cached_property
    def left_neighbors(self):
        """ per left vertex, bitmask over the right side """
        masks = [0] * self.left_size
        for i, j in self.edges:
            masks[i] |= 1 << j
        return tuple(masks)

    @cached_property
    def right_neighbors(self):
        masks = [0] * self.right_size
        for i, j in self.edges:
            masks[j] |= 1 << i
        return tuple(masks)

    def density(self):
        total = self.left_size * self.right_size
        if total == 0:
            return Fraction(0)
        return Fraction(len(self.edges), total)

    def restrict(self, left, right):
        """ Induced subgraph on the given sides, reindexed in sorted order """
        left = sorted(set(left))
        right = sorted(set(right))
        li = {v: k for k, v in enumerate(left)}
        ri = {v: k for k, v in enumerate(right)}
        edges = {(li[i], ri[j]) for i, j in self.edges if i in li and j in ri}
        return BipartiteGraph(len(left), len(right), frozenset(edges))

    def transpose(self):
        return BipartiteGraph(self.right_size, self.left_size, frozenset((j, i) for i, j in self.edges))

    def __repr__(self):
        return f"<BipartiteGraph: {self.left_size}x{self.right_size}, edges {len(self.edges)}>"


@dataclass(frozen=True)
class TripartiteGraph:
    """ Three labelled parts and the three cross edge sets in local indices.

    labels[i][k] is the host vertex carried by local vertex k of part i.
    """
    labels: tuple
    e12: frozenset = frozenset()
    e13: frozenset = frozenset()
    e23: frozenset = frozenset()

    def __post_init__(self):
        labels = tuple(tuple(int(v) for v in part) for part in self.labels)
        if len(labels) != 3:
            raise InvalidInputError("a tripartite graph has exactly three parts")
        object.__setattr__(self, 'labels', labels)
        for name, (p, q) in (('e12', (0, 1)), ('e13', (0, 2)), ('e23', (1, 2))):
            pairs = frozenset((int(a), int(b)) for a, b in getattr(self, name))
            for a, b in pairs:
                if not (0 <= a < len(labels[p]) and 0 <= b < len(labels[q])):
                    raise InvalidInputError(f"{name} pair {(a, b)} out of range")
            object.__setattr__(self, name, pairs)

    @property
    def sizes(self):
        return tuple(len(part) for part in self.labels)

    @classmethod
    def complete(cls, labels):
        n1, n2, n3 = (len(p) for p in labels)
        return cls(labels,
                   frozenset((a, b) for a in range(n1) for b in range(n2)),
                   frozenset((a, c) for a in range(n1) for c in range(n3)),
                   frozenset((b, c) for b in range(n2) for c in range(n3)))

    @classmethod
    def consecutive(cls, sizes, e12=(), e13=(), e23=()):
        """ Parts labelled 0..n1-1, n1..n1+n2-1, and so on """
        start, labels = 0, []
        for s in sizes:
            labels.append(tuple(range(start, start + s)))
            start += s
        return cls(tuple(labels), frozenset(e12), frozenset(e13), frozenset(e23))

    def pair(self, p, q):
        """ The cross bipartite graph between parts p < q """
        edges = {(0, 1): self.e12, (0, 2): self.e13, (1, 2): self.e23}[(p, q)]
        return BipartiteGraph(len(self.labels[p]), len(self.labels[q]), edges)

    def densities(self):
        return tuple(self.pair(p, q).density() for p, q in ((0, 1), (0, 2), (1, 2)))

    def __repr__(self):
        return f"<TripartiteGraph: sizes {self.sizes}, edges {len(self.e12)}/{len(self.e13)}/{len(self.e23)}>"


@dataclass(frozen=True)
class VertexPartition:
    classes: tuple
    n: int = field(default=None)

    def __post_init__(self):
        classes = tuple(tuple(sorted(int(v) for v in c)) for c in self.classes)
        object.__setattr__(self, 'classes', classes)
        flat = [v for c in classes for v in c]
        n = len(flat) if self.n is None else self.n
        object.__setattr__(self, 'n', n)
        if len(set(flat)) != len(flat):
            raise InvalidInputError("partition classes overlap")
        if set(flat) != set(range(n)):
            raise InvalidInputError("partition classes do not cover the vertex set")

    @classmethod
    def from_assignment(cls, assignment):
        t = max(assignment) + 1 if assignment else 0
        classes = [[] for _ in range(t)]
        for v, c in enumerate(assignment):
            classes[c].append(v)
        return cls(tuple(tuple(c) for c in classes), len(assignment))

    @cached_property
    def class_of(self):
        return {v: i for i, c in enumerate(self.classes) for v in c}

    @property
    def t(self):
        return len(self.classes)

    def is_equipartition(self):
        sizes = [len(c) for c in self.classes]
        return not sizes or max(sizes) - min(sizes) <= 1


def pair_index(u, v, n):
    """ Position of the pair {u, v} in the lexicographic list of all pairs of [n] """
    if u > v:
        u, v = v, u
    return u * n - u * (u + 1) // 2 + (v - u - 1)


def all_pairs(n):
    return list(combinations(range(n), 2))


def graph_of(h):
    """ Graph(H): left side is V, right side is every pair of V in lexicographic order """
    n = h.n
    edges = set()
    for a, b, c in h.edges:
        edges.add((a, pair_index(b, c, n)))
        edges.add((b, pair_index(a, c, n)))
        edges.add((c, pair_index(a, b, n)))
    return BipartiteGraph(n, n * (n - 1) // 2, frozenset(edges))


def trip(h):
    """ Trip(H): copies X = [0,n), Y = [n,2n), Z = [2n,3n); x_u y_v z_w is an edge iff uvw is """
    n = h.n
    edges = set()
    for e in h.edges:
        for u, v, w in permutations(e):
            edges.add((u, n + v, 2 * n + w))
    partition = (range(0, n), range(n, 2 * n), range(2 * n, 3 * n))
    return ThreeGraph(3 * n, frozenset(edges), partition)


def bip(g):
    """ Bip(G) of a networkx graph; vertices indexed in the graph's node order """
    index = {v: k for k, v in enumerate(g.nodes())}
    edges = set()
    for u, v in g.edges():
        if u == v:
            continue
        edges.add((index[u], index[v]))
        edges.add((index[v], index[u]))
    return BipartiteGraph(len(index), len(index), frozenset(edges))


def triangle_triples(g):
    """ K3 of a tripartite graph, as local (a, b, c) index triples """
    n1, n2, n3 = g.sizes
    n12 = [0] * n1
    n13 = [0] * n1
    n23 = [0] * n2
    for a, b in g.e12:
        n12[a] |= 1 << b
    for a, c in g.e13:
        n13[a] |= 1 << c
    for b, c in g.e23:
        n23[b] |= 1 << c
    out = set()
    for a in range(n1):
        for b in bits(n12[a]):
            for c in bits(n13[a] & n23[b]):
                out.add((a, b, c))
    return out


def induce(h, s):
    s = sorted(set(int(v) for v in s))
    if any(v < 0 or v >= h.n for v in s):
        raise InvalidInputError(f"induce: vertex out of range for n={h.n}")
    index = {v: k for k, v in enumerate(s)}
    edges = {tuple(index[v] for v in e) for e in h.edges if all(v in index for v in e)}
    partition = None
    if h.partition is not None:
        partition = tuple(frozenset(index[v] for v in part if v in index) for part in h.partition)
    return ThreeGraph(len(s), frozenset(edges), partition)


def relabel(h, perm):
    """ Image of h under the vertex permutation v -> perm[v] """
    edges = frozenset(tuple(perm[v] for v in e) for e in h.edges)
    partition = None
    if h.partition is not None:
        partition = tuple(frozenset(perm[v] for v in part) for part in h.partition)
    return ThreeGraph(h.n, edges, partition)


def count_edges_across(h, parts):
    """ Edges of h with one vertex in each of the three given sets """
    sets = [set(p) for p in parts]
    count = 0
    for e in h.edges:
        hits = [sum(v in s for v in e) for s in sets]
        if hits == [1, 1, 1]:
            count += 1
    return count
