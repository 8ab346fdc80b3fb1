"""Induced configuration search, dimensions and tree rank.

3-partite patterns are embedded into Trip(host): each pattern part (role)
draws its vertices from the host, injectively within a role only, and a
pattern triple is an edge iff the host triple is. Bipartite patterns are
embedded into a bipartite host, or into Graph(host) for a 3-graph.

The largest pattern part is the bulk role. The remaining (fixed) pattern
vertices are backtracked; the bulk is matched at the end by exact link
signature. Candidates per fixed role are twin-class representatives.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product

import numpy as np
from cachetools import LRUCache

import constants
from modules.construct import FamilySpec, build_canonical
from modules.core import BipartiteGraph, ThreeGraph, graph_of
from modules.helpers import (InvalidInputError, VerificationError, bits, get_logger, mask_of, popcount,
                             rng_for)

logger = get_logger(__name__)


@dataclass
class PatternWitness:
    pattern: str
    status: str
    embedding: dict = field(default_factory=dict)
    nodes_explored: int = 0
    details: dict = field(default_factory=dict)

    @property
    def found(self):
        return self.status == constants.FOUND

    def to_json(self):
        def name(v):
            if isinstance(v, tuple):
                return ''.join(str(x) for x in v)
            return str(v)
        return {
            'pattern': self.pattern,
            'status': self.status,
            'embedding': {name(k): v if not isinstance(v, tuple) else list(v) for k, v in sorted(self.embedding.items(), key=lambda kv: str(kv[0]))},
            'nodes_explored': self.nodes_explored,
            'details': self.details,
        }

    def __repr__(self):
        return f"<PatternWitness: {self.pattern} {self.status}, nodes {self.nodes_explored}>"


@dataclass
class TreeWitness:
    depth: int
    nodes: dict
    leaves: dict

    def verify(self, g):
        for sigma, b in self.nodes.items():
            for eta, a in self.leaves.items():
                if not eta.startswith(sigma):
                    continue
                adjacent = bool(g.left_neighbors[b] >> a & 1)
                if adjacent != (eta[len(sigma)] == '1'):
                    return False
        return len(set(self.leaves.values())) == len(self.leaves)


class _TripleHost:
    roles = 3

    def __init__(self, h, candidates):
        self.h = h
        self.candidates = [sorted(c) for c in candidates]
        h.pair_links, h.vertex_links

    def edge(self, values):
        return self.h.has_edge(*values)

    def key_mask(self, a, b):
        return self.h.link(a, b)

    def twin_classes(self, role):
        others = [set(self.candidates[r]) for r in range(3) if r != role]
        groups = {}
        for x in self.candidates[role]:
            sig = frozenset(p for p in self.h.vertex_links[x]
                            if (p[0] in others[0] and p[1] in others[1]) or (p[0] in others[1] and p[1] in others[0]))
            groups.setdefault(sig, []).append(x)
        return [(members, bool(sig)) for sig, members in sorted(groups.items(), key=lambda kv: kv[1][0])]


class _PairHost:
    roles = 2

    def __init__(self, g, candidates=None):
        self.g = g
        if candidates is None:
            candidates = [range(g.left_size), range(g.right_size)]
        self.candidates = [sorted(c) for c in candidates]
        self.masks = [mask_of(c) for c in self.candidates]

    def edge(self, values):
        return bool(self.g.left_neighbors[values[0]] >> values[1] & 1)

    def key_mask(self, a):
        return self.g.left_neighbors[a]

    def twin_classes(self, role):
        nbrs = self.g.left_neighbors if role == 0 else self.g.right_neighbors
        other = self.masks[1 - role]
        groups = {}
        for x in self.candidates[role]:
            groups.setdefault(nbrs[x] & other, []).append(x)
        return [(members, bool(sig)) for sig, members in sorted(groups.items(), key=lambda kv: kv[1][0])]


class _Embedder:
    """ One pattern against one host. Bipartite searches always use the right side (role 1) as bulk. """

    def __init__(self, host, parts, pattern_edge):
        self.host = host
        self.parts = [list(p) for p in parts]
        self.pattern_edge = pattern_edge
        r = host.roles
        self.bulk = 1 if r == 2 else max(range(3), key=lambda i: (len(self.parts[i]), -i))
        self.fixed_roles = [i for i in range(r) if i != self.bulk]
        self.bulk_pattern = self.parts[self.bulk]
        self.bulk_host_mask = mask_of(host.candidates[self.bulk])
        degree = {}
        for role in range(r):
            for v in self.parts[role]:
                degree[v] = 0
        for t in product(*self.parts):
            if pattern_edge(t):
                for v in t:
                    degree[v] += 1
        self.degree = degree
        self.order = [(role, v) for role in self.fixed_roles
                      for v in sorted(self.parts[role], key=lambda v: (-degree[v], self.parts[role].index(v)))]
        position = {v: i for i, (_, v) in enumerate(self.order)}
        if r == 3:
            r1, r2 = self.fixed_roles
            self.keys = [(x, y) for x in self.parts[r1] for y in self.parts[r2]]
        else:
            self.keys = [(x,) for x in self.parts[self.fixed_roles[0]]]
        self.completes = [[] for _ in self.order]
        for key in self.keys:
            self.completes[max(position[v] for v in key)].append(key)
        self.key_pattern = {key: mask_of(i for i, v in enumerate(self.bulk_pattern) if pattern_edge(self._tuple(key, v)))
                            for key in self.keys}
        self.classes = {role: host.twin_classes(role) for role in self.fixed_roles}

    def _tuple(self, key, bulk_value):
        t = [None] * self.host.roles
        for role, value in zip(self.fixed_roles, key):
            t[role] = value
        t[self.bulk] = bulk_value
        return tuple(t)

    def precheck(self):
        """ Necessary conditions independent of the fixed assignment; a failure certifies absence """
        for role in range(self.host.roles):
            if len(self.host.candidates[role]) < len(self.parts[role]):
                return f"role {role} has {len(self.host.candidates[role])} candidates for {len(self.parts[role])} vertices"
        signatures = {tuple(self.pattern_edge(self._tuple(key, v)) for key in self.keys) for v in self.bulk_pattern}
        bulk_classes = self.host.twin_classes(self.bulk)
        if len(bulk_classes) < len(signatures):
            return f"{len(bulk_classes)} bulk twin classes for {len(signatures)} distinct pattern signatures"
        return None

    def candidates(self, role, v, used):
        out = []
        for members, nonzero in self.classes[role]:
            if self.degree[v] and not nonzero:
                continue
            x = next((m for m in members if m not in used[role]), None)
            if x is not None:
                out.append(x)
        return out

    def _host_mask(self, key, assign):
        values = [assign[v] for v in key]
        if len(values) == 2:
            if values[0] == values[1]:
                return 0
            return self.host.key_mask(values[0], values[1]) & self.bulk_host_mask
        return self.host.key_mask(values[0]) & self.bulk_host_mask

    def _refine(self, classes, t, assign):
        for key in self.completes[t]:
            hmask, pmask = self._host_mask(key, assign), self.key_pattern[key]
            refined = []
            for hm, pm in classes:
                for part_h, part_p in ((hm & hmask, pm & pmask), (hm & ~hmask, pm & ~pmask)):
                    if not part_p:
                        continue
                    if popcount(part_h) < popcount(part_p):
                        return None
                    refined.append((part_h, part_p))
            classes = refined
        return classes

    def _complete(self, assign, classes):
        embedding = dict(assign)
        for hm, pm in classes:
            hosts = bits(hm)
            for k, i in enumerate(bits(pm)):
                embedding[self.bulk_pattern[i]] = hosts[k]
        return embedding

    def verify(self, embedding):
        for role in range(self.host.roles):
            images = [embedding[v] for v in self.parts[role]]
            if len(set(images)) != len(images):
                return False
        for t in product(*self.parts):
            if self.pattern_edge(t) != self.host.edge(tuple(embedding[v] for v in t)):
                return False
        return True

    def search_root(self, root, budget):
        """ (embedding or None, nodes, finished) for the subtree under one root candidate """
        state = {'nodes': 0, 'stopped': False}
        used = {role: set() for role in self.fixed_roles}
        assign = {}
        classes = [(self.bulk_host_mask, (1 << len(self.bulk_pattern)) - 1)] if self.bulk_pattern else []

        def place(t, x, classes):
            if state['nodes'] >= budget:
                state['stopped'] = True
                return None
            state['nodes'] += 1
            role, v = self.order[t]
            assign[v] = x
            used[role].add(x)
            refined = self._refine(classes, t, assign)
            result = None
            if refined is not None:
                result = extend(t + 1, refined)
            if result is None:
                used[role].discard(x)
                del assign[v]
            return result

        def extend(t, classes):
            if t == len(self.order):
                return self._complete(assign, classes)
            role, v = self.order[t]
            for x in self.candidates(role, v, used):
                found = place(t, x, classes)
                if found is not None:
                    return found
                if state['stopped']:
                    return None
            return None

        found = place(0, root, classes)
        return found, state['nodes'], found is not None or not state['stopped']

    def run(self, budget, threads, label):
        if budget <= 0:
            return PatternWitness(label, constants.INCONCLUSIVE, details={'reason': 'zero budget'})
        reason = self.precheck()
        if reason:
            return PatternWitness(label, constants.ABSENT_CERTIFIED, details={'reason': reason})
        if not self.order:
            return PatternWitness(label, constants.ABSENT_CERTIFIED, details={'reason': 'no fixed vertices'})
        role, v = self.order[0]
        roots = self.candidates(role, v, {r: set() for r in self.fixed_roles})
        spent = 0
        threads = max(1, threads or constants.THREADS)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for start in range(0, len(roots), threads):
                remaining = budget - spent
                wave = roots[start:start + threads]
                results = list(pool.map(lambda x: self.search_root(x, remaining), wave))
                for found, nodes, finished in results:
                    allowed = budget - spent
                    if nodes > allowed or not finished:
                        logger.warning(f"{label}: search budget {budget} exhausted")
                        return PatternWitness(label, constants.INCONCLUSIVE, nodes_explored=budget)
                    spent += nodes
                    if found is not None:
                        if not self.verify(found):
                            raise VerificationError(f"{label}: embedding failed re-verification")
                        return PatternWitness(label, constants.FOUND, found, spent)
        return PatternWitness(label, constants.ABSENT_CERTIFIED, nodes_explored=spent)


def _bipartite_parts(pattern):
    left = [(0, i) for i in range(pattern.left_size)]
    right = [(1, j) for j in range(pattern.right_size)]
    return left, right, lambda t: (t[0][1], t[1][1]) in pattern.edges


def search_embedding(host, pattern, label, candidates=None, budget=None, threads=None):
    """ Embedding search with optional per-role host candidate sets """
    budget = constants.SEARCH_BUDGET if budget is None else budget
    if isinstance(pattern, BipartiteGraph):
        if isinstance(host, ThreeGraph):
            host = graph_of(host)
        left, right, edge = _bipartite_parts(pattern)
        if len(left) > len(right):
            swapped = search_embedding(host.transpose(), pattern.transpose(), label,
                                       candidates[::-1] if candidates else None, budget, threads)
            swapped.embedding = {(1 - side, i): x for (side, i), x in swapped.embedding.items()}
            return swapped
        embedder = _Embedder(_PairHost(host, candidates), [left, right], edge)
        return embedder.run(budget, threads, label)
    if not isinstance(host, ThreeGraph):
        raise InvalidInputError("a 3-graph pattern needs a 3-graph host")
    if pattern.partition is None:
        raise InvalidInputError("pattern must carry its 3-partition")
    if candidates is None:
        candidates = [range(host.n)] * 3
    embedder = _Embedder(_TripleHost(host, candidates), pattern.parts, lambda t: pattern.has_edge(*t))
    return embedder.run(budget, threads, label)


def find_pattern(host, pattern, budget=None, threads=None):
    """ Search for an induced copy of a named family member (FamilySpec or 'F:ell=2') """
    if isinstance(pattern, str):
        pattern = FamilySpec.parse(pattern)
    graph = build_canonical(pattern)
    label = pattern.label()
    witness = search_embedding(host, graph, label, budget=budget, threads=threads)
    logger.info(f"find_pattern {label}: {witness.status} after {witness.nodes_explored} nodes")
    return witness


@dataclass
class VcResult:
    value: int
    capped: bool
    witness: tuple


def vc_dimension(ground, family, cap=None):
    """ Largest shattered subset of ground (up to cap) for a family of subsets """
    ground = list(ground)
    index = {x: i for i, x in enumerate(ground)}
    fam = sorted({mask_of(index[x] for x in s if x in index) for s in family})
    if not fam:
        return VcResult(0, False, ())
    full = (1 << len(fam)) - 1
    columns = {}
    for e in range(len(ground)):
        col = 0
        for k, f in enumerate(fam):
            if f >> e & 1:
                col |= 1 << k
        if col not in (0, full) and col not in columns:
            columns[col] = e
    reps = sorted(columns.values())
    best = [()]
    capped = [False]

    def dfs(chosen, mask, start):
        if len(chosen) > len(best[0]):
            best[0] = tuple(chosen)
        if cap is not None and len(chosen) >= cap:
            capped[0] = True
            return
        need = 1 << (len(chosen) + 1)
        if need > len(fam):
            return
        for i in range(start, len(reps)):
            e = reps[i]
            m = mask | (1 << e)
            if len({f & m for f in fam}) == need:
                dfs(chosen + [e], m, i + 1)

    dfs([], 0, 0)
    return VcResult(len(best[0]), capped[0], tuple(ground[e] for e in best[0]))


def vc_graph(g, cap=None):
    """ VC dimension of a bipartite graph in both trace directions """
    forward = vc_dimension(range(g.right_size), [bits(m) for m in g.left_neighbors], cap)
    backward = vc_dimension(range(g.left_size), [bits(m) for m in g.right_neighbors], cap)
    return forward, backward


def wvc_dimension(h, cap=None):
    best = VcResult(0, False, ())
    seen = set()
    for a in range(h.n):
        link = frozenset(h.vertex_links[a])
        if link in seen:
            continue
        seen.add(link)
        nbrs = [[] for _ in range(h.n)]
        for b, c in link:
            nbrs[b].append(c)
            nbrs[c].append(b)
        result = vc_dimension(range(h.n), nbrs, cap)
        if result.value > best.value or result.capped and not best.capped:
            best = result
    return best


def tree_rank(g, leaves=None, depth_cap=8):
    """ Rank of a leaf set (right side) with nodes from the left side, capped, with a tree witness """
    leaves = range(g.right_size) if leaves is None else leaves
    target = mask_of(leaves)
    memo = LRUCache(maxsize=constants.TREE_RANK_MEMO_SIZE)
    nbrs = g.left_neighbors

    def splits(s):
        seen = set()
        for b, nb in enumerate(nbrs):
            inside, outside = s & nb, s & ~nb
            if not inside or not outside or inside in seen:
                continue
            seen.add(inside)
            yield b, inside, outside

    def rank(s, cap):
        cap = min(cap, popcount(s).bit_length() - 1)
        if cap <= 0:
            return 0
        key = (s, cap)
        if key in memo:
            return memo[key]
        best = 0
        for _, inside, outside in splits(s):
            r = 1 + min(rank(inside, cap - 1), rank(outside, cap - 1))
            if r > best:
                best = r
                if best >= cap:
                    break
        memo[key] = best
        return best

    value = rank(target, depth_cap) if target else 0
    nodes, leaf_map = {}, {}

    def build(s, d, prefix):
        if d == 0:
            leaf_map[prefix] = min(bits(s))
            return
        for b, inside, outside in splits(s):
            if rank(inside, d - 1) >= d - 1 and rank(outside, d - 1) >= d - 1:
                nodes[prefix] = b
                build(inside, d - 1, prefix + '1')
                build(outside, d - 1, prefix + '0')
                return
        raise VerificationError(f"no split realises depth {d}")

    if target:
        build(target, value, '')
    witness = TreeWitness(value, nodes, leaf_map)
    if target and not witness.verify(g):
        raise VerificationError("tree witness failed re-verification")
    return value, witness


@dataclass
class DTreeCount:
    count: object
    exact: bool
    stderr: float = 0.0


def count_d_trees(g, node_side=None, leaf_side=None, d=1, mode='auto', samples=2000, seed=0):
    """ (A, B, d)-trees: nodes from A (left), leaves from B (right), leaf tuples ordered.

    count(0, S) = |S| and count(d, S) = sum over b of count(d-1, S & N(b)) count(d-1, S - N(b)).
    """
    if d < 1:
        raise InvalidInputError("tree depth must be at least 1")
    nodes = list(range(g.left_size) if node_side is None else node_side)
    leaf_mask = mask_of(range(g.right_size) if leaf_side is None else leaf_side)
    nbrs = [g.left_neighbors[b] for b in nodes]
    exact = mode == 'exact' or (mode == 'auto' and (d <= 2 or popcount(leaf_mask) <= constants.EXACT_DTREE_MAX_LEAVES))
    if exact:
        memo = {}

        def count(depth, s):
            if depth == 0:
                return popcount(s)
            if not s:
                return 0
            key = (depth, s)
            if key not in memo:
                memo[key] = sum(count(depth - 1, s & nb) * count(depth - 1, s & ~nb) for nb in nbrs)
            return memo[key]

        return DTreeCount(count(d, leaf_mask), True)
    if not nodes:
        return DTreeCount(0, True)
    rng = rng_for(seed, 'count_d_trees', d, g.left_size, g.right_size)

    def estimate(depth, s):
        if depth == 0:
            return popcount(s)
        if not s:
            return 0
        nb = nbrs[int(rng.integers(0, len(nbrs)))]
        return len(nbrs) * estimate(depth - 1, s & nb) * estimate(depth - 1, s & ~nb)

    draws = np.array([float(estimate(d, leaf_mask)) for _ in range(samples)])
    stderr = float(draws.std(ddof=1) / np.sqrt(samples)) if samples > 1 else 0.0
    return DTreeCount(float(draws.mean()), False, stderr)


@dataclass
class DimensionCaps:
    vc: int = 4
    vc2: int = 2
    order: int = 6
    weak: int = 4
    fop: int = 2
    hop: int = 4
    budget: int = None
    threads: int = None


def _ladder(h, family, key, top, caps):
    """ Largest k <= top with the k-th member found; certainty from the first failing search """
    value, status = 0, constants.ABSENT_CERTIFIED
    for k in range(1, top + 1):
        spec = FamilySpec(family, **{key: k})
        try:
            witness = find_pattern(h, spec, caps.budget, caps.threads)
        except InvalidInputError as e:
            logger.warning(f"{spec.label()} not instantiable: {e}")
            return {'value': value, 'status': constants.INCONCLUSIVE}
        if not witness.found:
            return {'value': value, 'status': witness.status}
        value = k
    return {'value': value, 'status': constants.INCONCLUSIVE if value == top else constants.ABSENT_CERTIFIED}


def dimension_report(h, caps=None):
    """ VC, WVC, VC2 lower bound, order property, weak stability, FOP2 and HOP2 lengths.

    Each entry carries ABSENT_CERTIFIED when its value is exact and
    INCONCLUSIVE when it is only a lower bound (search budget or cap).
    """
    caps = caps or DimensionCaps()
    forward, backward = vc_graph(graph_of(h), caps.vc)
    vc_status = constants.INCONCLUSIVE if forward.capped or backward.capped else constants.ABSENT_CERTIFIED
    wvc = wvc_dimension(h, caps.vc)
    report = {
        'vc': {'value': max(forward.value, backward.value), 'status': vc_status},
        'wvc': {'value': wvc.value, 'status': constants.INCONCLUSIVE if wvc.capped else constants.ABSENT_CERTIFIED},
        'vc2_lower_bound': _ladder(h, constants.V, 'k', caps.vc2, caps),
        'order_property': _ladder(h, constants.HALF_GRAPH, 'k', caps.order, caps),
        'weak_stability': _ladder(h, constants.HSTAR, 'k', caps.weak, caps),
        'fop2': _ladder(h, constants.F, 'ell', caps.fop, caps),
        'hop2': _ladder(h, constants.HP, 'k', caps.hop, caps),
    }
    logger.info(f"dimension report for {h!r}: { {k: v['value'] for k, v in report.items()} }")
    return report
