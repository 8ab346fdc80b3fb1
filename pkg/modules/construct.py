"""Canonical families, random bipartite graphs, edge slicing and interval slicing.

Vertex layout per family (0-based, parts in the order A, B, C):

- HALF_GRAPH(k): bipartite, a_i ~ b_j iff i <= j.
- POWERSET_GRAPH(k): bipartite, left i, right S in [0, 2^k); i ~ S iff bit i of S.
- V(k): a_S for S a k*k bitmask (bit v*k+w), then b_0..b_{k-1}, then c_0..c_{k-1};
  a_S b_v c_w iff (v, w) in S.
- HBAR(k): a_i b_j c_l iff j <= l.
- UBAR(k): a_i, b_S, c_j; edge iff j in S.
- USTAR(k): a single a, b_S, c_j; edge iff j in S.
- HSTAR(k): a single a, b_i, c_j; edge iff i <= j.
- F(l): a_i, then b_j^f stored f-major (f * l + j), then c_k; edge iff k+1 <= f(i, j).
  Functions are numbered by their value tables read as base-l numbers, most
  significant entry first, entries row-major in (i, j).
- HP(k): a_u = u-1, b_v = k+v-1, c_w = 2k+w-1 for 1-based u, v, w; edge iff u+v+w >= k+2.
- GS(p, n): three copies of F_p^n, vectors as base-p integers (most significant
  coordinate first); edge iff the coordinatewise sum lies in A(p, n).
- W(k): a_i, b_j, c_S; edge iff j in S.
- W1(k): a_S, b_j, c_l; edge iff j == l and j in S.
- W2(k): a_i, b_j, c_l; edge iff i <= j and j == l.
- TENSOR(n, G): n adjoined vertices, then the left side of G, then its right side;
  a b c edge iff bc in G.
- VCFOP_EXAMPLE(k, n): U, W of size n, Z_1..Z_k of size n; uwz (z in Z_i) is an
  edge iff uw lies in slice alpha <= i of a seeded k-slicing of K2[U, W].
"""
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np

import constants
from modules.core import BipartiteGraph, ThreeGraph
from modules.helpers import InvalidInputError, PreconditionError, VerificationError, as_fraction, get_logger, rng_for

logger = get_logger(__name__)

_PARAMS = {
    constants.HALF_GRAPH: ('k',),
    constants.POWERSET_GRAPH: ('k',),
    constants.V: ('k',),
    constants.HBAR: ('k',),
    constants.UBAR: ('k',),
    constants.USTAR: ('k',),
    constants.HSTAR: ('k',),
    constants.F: ('ell',),
    constants.HP: ('k',),
    constants.GS: ('p', 'n'),
    constants.W: ('k',),
    constants.W1: ('k',),
    constants.W2: ('k',),
    constants.TENSOR: ('n',),
    constants.VCFOP_EXAMPLE: ('k', 'n'),
}


def _is_prime(p):
    return p >= 2 and all(p % q for q in range(2, int(p ** 0.5) + 1))


@dataclass(frozen=True)
class FamilySpec:
    family: str
    k: int = None
    ell: int = None
    n: int = None
    p: int = None
    graph: BipartiteGraph = field(default=None, compare=False)
    seed: int = 0

    def validate(self):
        if self.family not in _PARAMS:
            raise InvalidInputError(f"unknown family {self.family!r}")
        for name in _PARAMS[self.family]:
            value = getattr(self, name)
            if value is None or value < 1:
                raise InvalidInputError(f"{self.family} needs a positive {name}")
        if self.family == constants.GS and (self.p < 3 or not _is_prime(self.p)):
            raise InvalidInputError(f"GS needs a prime p >= 3, got {self.p}")
        if self.family == constants.TENSOR and self.graph is None:
            raise InvalidInputError("TENSOR needs an attached bipartite graph")
        return self

    @classmethod
    def parse(cls, text, graph=None, seed=0):
        """ 'HP:k=5', 'GS:p=3,n=2', 'F:ell=2' """
        name, _, rest = text.partition(':')
        values = {}
        for item in filter(None, rest.split(',')):
            key, _, value = item.partition('=')
            key = {'l': 'ell'}.get(key.strip(), key.strip())
            if key not in ('k', 'ell', 'n', 'p', 'seed'):
                raise InvalidInputError(f"unknown family parameter {key!r}")
            try:
                values[key] = int(value)
            except ValueError:
                raise InvalidInputError(f"parameter {key} must be an integer, got {value!r}")
        values.setdefault('seed', seed)
        return cls(name.strip().upper(), graph=graph, **values).validate()

    def label(self):
        params = ','.join(f"{n}={getattr(self, n)}" for n in _PARAMS.get(self.family, ()))
        return f"{self.family}:{params}" if params else self.family

    @property
    def is_bipartite(self):
        return self.family in constants.BIPARTITE_FAMILIES


def _partitioned(sizes, edges):
    start, parts = 0, []
    for s in sizes:
        parts.append(range(start, start + s))
        start += s
    return ThreeGraph(start, frozenset(edges), tuple(parts))


def _check_cap(total, family):
    if total > constants.VERTEX_CAP:
        raise InvalidInputError(f"{family} needs {total} vertices, above the vertex cap {constants.VERTEX_CAP}")


def half_graph(k):
    return BipartiteGraph(k, k, frozenset((i, j) for i in range(k) for j in range(i, k)))


def powerset_graph(k):
    _check_cap(k + 2 ** k, constants.POWERSET_GRAPH)
    return BipartiteGraph(k, 2 ** k, frozenset((i, s) for s in range(2 ** k) for i in range(k) if s >> i & 1))


def v_graph(k):
    m = 2 ** (k * k)
    _check_cap(m + 2 * k, constants.V)
    edges = [(s, m + v, m + k + w) for s in range(m) for v in range(k) for w in range(k) if s >> (v * k + w) & 1]
    return _partitioned((m, k, k), edges)


def tensor(n, g):
    a, b = g.left_size, g.right_size
    edges = [(i, n + u, n + a + w) for i in range(n) for u, w in g.edges]
    return _partitioned((n, a, b), edges)


def hbar(k):
    return tensor(k, half_graph(k))


def ubar(k):
    return tensor(k, powerset_graph(k).transpose())


def ustar(k):
    return tensor(1, powerset_graph(k).transpose())


def hstar(k):
    return tensor(1, half_graph(k))


def f_table(index, ell):
    """ Value table of function number `index`, entries in [1, ell], row-major """
    digits = []
    for _ in range(ell * ell):
        index, d = divmod(index, ell)
        digits.append(d + 1)
    return tuple(reversed(digits))


def f_index(table, ell):
    index = 0
    for value in table:
        index = index * ell + (value - 1)
    return index


def f_vertex_b(j, fidx, ell):
    return ell + fidx * ell + j


def f_vertex_c(k, ell):
    return ell + ell * ell ** (ell * ell) + k


def f_graph(ell):
    nf = ell ** (ell * ell)
    _check_cap(2 * ell + ell * nf, constants.F)
    edges = []
    for fidx in range(nf):
        table = f_table(fidx, ell)
        for i in range(ell):
            for j in range(ell):
                for k in range(table[i * ell + j]):
                    edges.append((i, f_vertex_b(j, fidx, ell), f_vertex_c(k, ell)))
    return _partitioned((ell, ell * nf, ell), edges)


def hp_graph(k):
    edges = [(u - 1, k + v - 1, 2 * k + w - 1)
             for u in range(1, k + 1) for v in range(1, k + 1) for w in range(1, k + 1) if u + v + w >= k + 2]
    return _partitioned((k, k, k), edges)


def gs_digits(x, p, n):
    """ coordinates of x, most significant first """
    out = []
    for _ in range(n):
        x, d = divmod(x, p)
        out.append(d)
    return tuple(reversed(out))


def gs_number(digits, p):
    x = 0
    for d in digits:
        x = x * p + d % p
    return x


def gs_in_a(digits):
    """ first nonzero coordinate equals 1 """
    for d in digits:
        if d:
            return d == 1
    return False


def gs_a_set(p, n):
    return [x for x in range(p ** n) if gs_in_a(gs_digits(x, p, n))]


def gs_graph(p, n):
    size = p ** n
    _check_cap(3 * size, constants.GS)
    digits = [gs_digits(x, p, n) for x in range(size)]
    in_a = np.zeros(size, dtype=bool)
    in_a[gs_a_set(p, n)] = True
    edges = []
    for x in range(size):
        for y in range(size):
            partial = [(a + b) % p for a, b in zip(digits[x], digits[y])]
            for z in range(size):
                if in_a[gs_number([(a + b) for a, b in zip(partial, digits[z])], p)]:
                    edges.append((x, size + y, 2 * size + z))
    return _partitioned((size, size, size), edges)


def w_graph(k):
    m = 2 ** k
    _check_cap(2 * k + m, constants.W)
    edges = [(i, k + j, 2 * k + s) for i in range(k) for j in range(k) for s in range(m) if s >> j & 1]
    return _partitioned((k, k, m), edges)


def w1_graph(k):
    m = 2 ** k
    _check_cap(m + 2 * k, constants.W1)
    edges = [(s, m + j, m + k + j) for s in range(m) for j in range(k) if s >> j & 1]
    return _partitioned((m, k, k), edges)


def w2_graph(k):
    edges = [(i, k + j, 2 * k + j) for i in range(k) for j in range(i, k)]
    return _partitioned((k, k, k), edges)


def vcfop_example(k, n, seed=0):
    slices = slice_bipartite(BipartiteGraph(n, n, frozenset((u, w) for u in range(n) for w in range(n))), k, seed,
                             measure=False)
    alpha = {}
    for a, part in enumerate(slices.parts, start=1):
        for pair in part:
            alpha[pair] = a
    edges = []
    for (u, w), a in alpha.items():
        for i in range(a, k + 1):
            z0 = 2 * n + (i - 1) * n
            edges.extend((u, n + w, z) for z in range(z0, z0 + n))
    return _partitioned((n, n, k * n), edges)


def build_canonical(spec):
    spec.validate()
    family = spec.family
    if family == constants.HALF_GRAPH:
        return half_graph(spec.k)
    if family == constants.POWERSET_GRAPH:
        return powerset_graph(spec.k)
    if family == constants.V:
        return v_graph(spec.k)
    if family == constants.HBAR:
        return hbar(spec.k)
    if family == constants.UBAR:
        _check_cap(2 * spec.k + 2 ** spec.k, family)
        return ubar(spec.k)
    if family == constants.USTAR:
        _check_cap(1 + spec.k + 2 ** spec.k, family)
        return ustar(spec.k)
    if family == constants.HSTAR:
        return hstar(spec.k)
    if family == constants.F:
        return f_graph(spec.ell)
    if family == constants.HP:
        return hp_graph(spec.k)
    if family == constants.GS:
        return gs_graph(spec.p, spec.n)
    if family == constants.W:
        return w_graph(spec.k)
    if family == constants.W1:
        return w1_graph(spec.k)
    if family == constants.W2:
        return w2_graph(spec.k)
    if family == constants.TENSOR:
        return tensor(spec.n, spec.graph)
    if family == constants.VCFOP_EXAMPLE:
        _check_cap((spec.k + 2) * spec.n, family)
        return vcfop_example(spec.k, spec.n, spec.seed)
    raise InvalidInputError(f"unknown family {family!r}")


def random_disc2_bipartite(m, n, density, seed):
    """ Each pair kept independently with probability `density` (numpy PCG64 stream 'random_bipartite') """
    density = as_fraction(density)
    if not 0 <= density <= 1:
        raise InvalidInputError(f"density {density} outside [0, 1]")
    rng = rng_for(seed, 'random_bipartite', m, n)
    keep = rng.random((m, n)) < float(density)
    return BipartiteGraph(m, n, frozenset(zip(*map(lambda a: a.tolist(), np.nonzero(keep)))))


@dataclass
class SliceResult:
    left_size: int
    right_size: int
    parts: tuple
    densities: tuple = ()
    deviations: tuple = ()
    exact: tuple = ()
    lineage: tuple = ()
    residue_mass: int = 0

    def graph(self, index):
        return BipartiteGraph(self.left_size, self.right_size, self.parts[index])

    def union(self):
        out = set()
        for part in self.parts:
            out |= part
        return out


def _measured(left, right, parts, lineage=(), residue_mass=0, measure=True):
    total = left * right
    densities = tuple(Fraction(len(p), total) if total else Fraction(0) for p in parts)
    deviations, exact = (), ()
    if measure:
        from modules.quasi import disc2_deviation
        reports = [disc2_deviation(BipartiteGraph(left, right, p), mode='auto') for p in parts]
        deviations = tuple(r.deviation for r in reports)
        exact = tuple(r.exact for r in reports)
    return SliceResult(left, right, tuple(parts), densities, deviations, exact, tuple(lineage), residue_mass)


def slice_bipartite(g, ell, seed, measure=True):
    """ Each edge goes to one of ell parts uniformly at random; E_0 is empty for integral ell """
    if ell < 1:
        raise InvalidInputError(f"slice count must be positive, got {ell}")
    edges = sorted(g.edges)
    rng = rng_for(seed, 'slice', ell, g.left_size, g.right_size)
    labels = rng.integers(0, ell, size=len(edges)) if edges else []
    parts = [set() for _ in range(ell)]
    for e, lab in zip(edges, labels):
        parts[int(lab)].add(e)
    return _measured(g.left_size, g.right_size, [frozenset(p) for p in parts], lineage=range(ell), measure=measure)


def _chunks(items, sizes):
    out, start = [], 0
    for s in sizes:
        out.append(frozenset(items[start:start + s]))
        start += s
    return out, items[start:]


def even_repartition(parts, ell_target, eps=Fraction(1, 10), seed=0, measure=True):
    """ Re-partition into ell_target parts of near-equal density.

    Parts too small to host one piece of size ~mn/ell_target join the residue
    together with the uncovered pairs and every part's leftover. The residue is
    then spread over all pieces, kept as one part, or re-sliced, depending on
    how many pieces were carved.
    """
    left, right = parts.left_size, parts.right_size
    total = left * right
    if ell_target < 1 or ell_target > total:
        raise InvalidInputError(f"cannot form {ell_target} parts from {total} pairs")
    eps = as_fraction(eps)
    rng = rng_for(seed, 'even_repartition', ell_target, left, right)
    q = total // ell_target
    slack = int(eps * q)
    covered = set()
    pieces, lineage, gamma0 = [], [], []
    for index, part in enumerate(parts.parts):
        covered |= part
        u = (len(part) + slack) // q if q else 0
        u = min(u, ell_target - len(pieces))
        if u == 0:
            gamma0.extend(sorted(part))
            continue
        size = min(q, len(part) // u)
        items = sorted(part)
        items = [items[i] for i in rng.permutation(len(items))]
        chunks, rest = _chunks(items, [size] * u)
        pieces.extend(chunks)
        lineage.extend([index] * u)
        gamma0.extend(rest)
    gamma0.extend((i, j) for i in range(left) for j in range(right) if (i, j) not in covered)
    gamma0 = sorted(set(gamma0))
    gamma0 = [gamma0[i] for i in rng.permutation(len(gamma0))]
    k_prime = len(pieces)
    residue_mass = 0
    if k_prime == ell_target:
        spread = [set(p) for p in pieces]
        for i, e in enumerate(gamma0):
            spread[i % ell_target].add(e)
        pieces = [frozenset(p) for p in spread]
    elif k_prime == ell_target - 1:
        pieces.append(frozenset(gamma0))
        lineage.append(None)
        residue_mass = len(gamma0)
    else:
        k = ell_target - k_prime
        sizes = [len(gamma0) // k + (1 if i < len(gamma0) % k else 0) for i in range(k)]
        chunks, _ = _chunks(gamma0, sizes)
        pieces.extend(chunks)
        lineage.extend([None] * k)
        residue_mass = len(gamma0)
    logger.info(f"even_repartition: {len(parts.parts)} parts -> {ell_target}, carved {k_prime}, residue {residue_mass}")
    return _measured(left, right, pieces, lineage, residue_mass, measure=measure)


@dataclass(frozen=True)
class Ball:
    """ Open integer ball {j : |j - center| < radius} """
    center: int
    radius: int

    @property
    def members(self):
        return range(self.center - self.radius + 1, self.center + self.radius)


@dataclass
class IntervalSlicing:
    balls: list
    uncovered: int
    interval: tuple


def slice_interval(radius_big, radius_small, interval, N):
    """ Cover the integer interval [alpha, beta] by disjoint open balls of radius in [r/3, r]

    The interval holds at most S = floor((L + 1) / 2) units of radius when balls sit
    one gap point apart. S is split as evenly as possible over the fewest balls
    that keep every radius at most floor(rN); the larger radii go last, so the final
    ball is the one that takes up the tail. Radii are reported in index units;
    divide by N for the metric value.
    """
    radius_big, radius_small = as_fraction(radius_big), as_fraction(radius_small)
    if not 0 < radius_small <= radius_big:
        raise PreconditionError(f"need 0 < small radius {radius_small} <= big radius {radius_big}")
    alpha, beta = interval
    if beta < alpha:
        raise PreconditionError(f"empty interval [{alpha}, {beta}]")
    length = beta - alpha + 1
    if length - 1 >= 2 * radius_big * N:
        raise PreconditionError(f"interval [{alpha}, {beta}] is not a ball of radius {radius_big}")
    r_max = math.floor(radius_small * N)
    d1 = math.ceil(radius_small * N / 3)
    if d1 > r_max:
        raise PreconditionError(f"no integer radius in [{radius_small}N/3, {radius_small}N] for N = {N}")
    total = (length + 1) // 2
    if total < d1:
        raise PreconditionError(f"interval [{alpha}, {beta}] too small for a ball of radius {radius_small}")
    m = -(-total // r_max)
    q, extra = divmod(total, m)
    radii = [q] * (m - extra) + [q + 1] * extra
    balls, pos = [], alpha
    for radius in radii:
        balls.append(Ball(pos + radius - 1, radius))
        pos += 2 * radius
    covered = set()
    for b in balls:
        if not d1 <= b.radius <= r_max:
            raise VerificationError(f"ball {b} has radius outside [{d1}, {r_max}]")
        members = set(b.members)
        if covered & members:
            raise VerificationError(f"interval slicing produced overlapping balls at {b}")
        if min(members) < alpha or max(members) > beta:
            raise VerificationError(f"ball {b} leaves the interval [{alpha}, {beta}]")
        covered |= members
    if len(balls) > 4 * radius_big / radius_small:
        raise VerificationError(f"{len(balls)} balls exceed 4 * {radius_big} / {radius_small}")
    uncovered = length - len(covered)
    if uncovered > 2 * len(balls):
        raise VerificationError(f"{uncovered} uncovered points exceed 2m = {2 * len(balls)}")
    return IntervalSlicing(balls, uncovered, (alpha, beta))


# -- functional order property witnesses ---------------------------------------------------------

@dataclass(frozen=True)
class FopWitness:
    """ xs[i], ys[(j, fidx)], zs[k] for 0-based i, j, k; the relation is E (polarity True) or its complement """
    ell: int
    xs: tuple
    ys: dict = field(hash=False)
    zs: tuple
    polarity: bool = True


def fop2_relation_holds(h, x, y, z, polarity=True):
    if x == y or y == z or x == z:
        return False
    return h.has_edge(x, y, z) == polarity


def verify_fop2(h, w):
    """ (x_i, y_j^f, z_k) satisfies the relation iff k <= f(i, j), for every i, j, k, f """
    ell = w.ell
    for fidx in range(ell ** (ell * ell)):
        table = f_table(fidx, ell)
        for i, j, k in product(range(ell), repeat=3):
            expected = k + 1 <= table[i * ell + j]
            if fop2_relation_holds(h, w.xs[i], w.ys[(j, fidx)], w.zs[k], w.polarity) != expected:
                return False
    return True


def fop_witness_from_embedding(ell, embedding):
    """ Read an F(ell) embedding (pattern vertex -> host vertex) as a witness """
    nf = ell ** (ell * ell)
    xs = tuple(embedding[i] for i in range(ell))
    ys = {(j, fidx): embedding[f_vertex_b(j, fidx, ell)] for fidx in range(nf) for j in range(ell)}
    zs = tuple(embedding[f_vertex_c(k, ell)] for k in range(ell))
    return FopWitness(ell, xs, ys, zs)


def fop2_negation_transform(h, w):
    """ ell-FOP2 witness of the relation -> (ell-1)-FOP2 witness of its complement.

    u_k = z_{ell-k+1}, v_i = x_i and w_j^f = y_j^{g_f}, where g_f = ell - f on
    [ell-1]^2 and 1 elsewhere (1-based indices).
    """
    if not verify_fop2(h, w):
        raise InvalidInputError(f"input is not a valid {w.ell}-FOP2 witness")
    ell = w.ell
    if ell <= 1:
        return FopWitness(0, (), {}, (), not w.polarity)
    m = ell - 1
    ys = {}
    for fidx in range(m ** (m * m)):
        table = f_table(fidx, m)
        g = [1] * (ell * ell)
        for i in range(m):
            for j in range(m):
                g[i * ell + j] = ell - table[i * m + j]
        gidx = f_index(g, ell)
        for j in range(m):
            ys[(j, fidx)] = w.ys[(j, gidx)]
    out = FopWitness(m, w.xs[:m], ys, tuple(w.zs[ell - 1 - k] for k in range(m)), not w.polarity)
    if not verify_fop2(h, out):
        raise VerificationError(f"transformed {m}-FOP2 witness failed re-verification")
    return out


# -- binary and other-way instances --------------------------------------------------------------

@dataclass
class SplitInstance:
    """ A 3-graph with its vertex classes and, per class pair (i, j), a list of pair sets (u in V_i, v in V_j) """
    h: ThreeGraph
    classes: list
    splits: dict


def _pairs(xs, ys, keep=lambda u, v: True):
    return frozenset((u, v) for u in xs for v in ys if keep(u, v))


def ordered_triples_graph(n):
    """ a_i b_j c_k with i < j < k; 2-binary through the {i<j} / {i>=j} splits """
    a, b, c = list(range(n)), list(range(n, 2 * n)), list(range(2 * n, 3 * n))
    edges = [(i, n + j, 2 * n + k) for i in range(n) for j in range(i + 1, n) for k in range(j + 1, n)]
    h = _partitioned((n, n, n), edges)

    def split(xs, ys, ox, oy):
        return [_pairs(xs, ys, lambda u, v: u - ox < v - oy), _pairs(xs, ys, lambda u, v: u - ox >= v - oy)]

    splits = {(0, 1): split(a, b, 0, n), (0, 2): split(a, c, 0, 2 * n), (1, 2): split(b, c, n, 2 * n)}
    return SplitInstance(h, [a, b, c], splits)


def triangle_hypergraph(tg):
    """ Triangles of a tripartite graph as a 3-graph, with the edge/non-edge split of each pair """
    from modules.core import triangle_triples
    labels = tg.labels
    edges = [(labels[0][a], labels[1][b], labels[2][c]) for a, b, c in triangle_triples(tg)]
    n = sum(len(p) for p in labels)
    h = ThreeGraph(n, frozenset(edges), tuple(labels))
    splits = {}
    for (p, q), rel in (((0, 1), tg.e12), ((0, 2), tg.e13), ((1, 2), tg.e23)):
        inside = frozenset((labels[p][x], labels[q][y]) for x, y in rel)
        splits[(p, q)] = [inside, _pairs(labels[p], labels[q]) - inside]
    return SplitInstance(h, [list(p) for p in labels], splits)


def w_split_instance(k):
    """ Finite member of W with its defining 2-binary splits """
    h = w_graph(k)
    a, b, c = (sorted(p) for p in h.partition)
    member = lambda u, v: (v - 2 * k) >> (u - k) & 1
    splits = {(0, 1): [_pairs(a, b), frozenset()], (0, 2): [_pairs(a, c), frozenset()],
              (1, 2): [_pairs(b, c, member), _pairs(b, c, lambda u, v: not member(u, v))]}
    return SplitInstance(h, [a, b, c], splits)


@dataclass
class OtherwayInstance:
    h: ThreeGraph
    xs: list
    ys: list
    zs: list
    q_xy: list
    m: int
    k: int


def otherway_hypergraph(m, k, seed=0, q_xy=None):
    """ Classes X, Y, Z_1..Z_k of size m; xyz with z in Z_beta and xy in Q^alpha is an edge iff beta <= alpha.

    The slicing Q of K2[X, Y] is seeded unless given (as local pair sets).
    """
    if q_xy is None:
        complete = BipartiteGraph(m, m, frozenset((i, j) for i in range(m) for j in range(m)))
        q_xy = list(slice_bipartite(complete, k, seed, measure=False).parts)
    xs, ys = list(range(m)), list(range(m, 2 * m))
    zs = [list(range((2 + b) * m, (3 + b) * m)) for b in range(k)]
    edges = []
    for alpha, part in enumerate(q_xy, start=1):
        for i, j in part:
            for beta in range(1, alpha + 1):
                edges.extend((xs[i], ys[j], z) for z in zs[beta - 1])
    z_all = [z for block in zs for z in block]
    h = ThreeGraph((2 + k) * m, frozenset(edges), (xs, ys, z_all))
    global_q = [frozenset((xs[i], ys[j]) for i, j in part) for part in q_xy]
    return OtherwayInstance(h, xs, ys, zs, global_q, m, k)
