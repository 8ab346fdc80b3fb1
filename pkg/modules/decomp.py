"""(t, l)-decompositions: building, triad classification, error shapes, encodings and refinement.

A decomposition holds classes V_1..V_t (an equipartition) and, for each class
pair i < j, exactly l disjoint edge parts covering K2[V_i, V_j]. Pairs are
stored as host vertex pairs (u, v) with u in V_i and v in V_j. Parts and
classes are 0-based in code and in the JSON form.
"""
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import combinations, permutations

import numpy as np

import constants
from modules.construct import FamilySpec, build_canonical, fop_witness_from_embedding, slice_bipartite, verify_fop2
from modules.core import BipartiteGraph, ThreeGraph, TripartiteGraph
from modules.detect import PatternWitness, search_embedding
from modules.helpers import (InvalidInputError, PreconditionError, VerificationError, as_fraction, fraction_json,
                             get_logger, rng_for)
from modules.quasi import dev23_sum, disc23_witness_search, disc2_deviation

logger = get_logger(__name__)


@dataclass(frozen=True)
class Decomposition:
    classes: tuple
    ell: int
    edge_parts: dict = field(hash=False)
    eps1: Fraction = None
    eps2: Fraction = None

    def __post_init__(self):
        classes = tuple(tuple(sorted(int(v) for v in c)) for c in self.classes)
        object.__setattr__(self, 'classes', classes)
        parts = {}
        for key, plist in self.edge_parts.items():
            i, j = key
            parts[(int(i), int(j))] = tuple(frozenset((int(u), int(v)) for u, v in p) for p in plist)
        object.__setattr__(self, 'edge_parts', parts)
        for name in ('eps1', 'eps2'):
            if getattr(self, name) is not None:
                object.__setattr__(self, name, as_fraction(getattr(self, name)))
        self.validate()

    def validate(self):
        if self.ell < 1:
            raise InvalidInputError(f"need at least one edge part per pair, got l={self.ell}")
        sizes = [len(c) for c in self.classes]
        if sizes and max(sizes) - min(sizes) > 1:
            raise InvalidInputError(f"classes are not an equipartition: sizes {sizes}")
        flat = [v for c in self.classes for v in c]
        if len(set(flat)) != len(flat):
            raise InvalidInputError("vertex classes overlap")
        for i, j in combinations(range(self.t), 2):
            plist = self.edge_parts.get((i, j))
            if plist is None or len(plist) != self.ell:
                raise InvalidInputError(f"pair ({i}, {j}) needs exactly {self.ell} edge parts")
            seen = set()
            for part in plist:
                if seen & part:
                    raise InvalidInputError(f"edge parts of pair ({i}, {j}) overlap")
                seen |= part
            full = {(u, v) for u in self.classes[i] for v in self.classes[j]}
            if seen != full:
                raise InvalidInputError(f"edge parts of pair ({i}, {j}) do not cover K2[V_{i}, V_{j}]")
        extra = set(self.edge_parts) - set(combinations(range(self.t), 2))
        if extra:
            raise InvalidInputError(f"edge parts given for unknown class pairs {sorted(extra)}")

    @property
    def t(self):
        return len(self.classes)

    @property
    def n(self):
        return sum(len(c) for c in self.classes)

    @cached_property
    def class_of(self):
        return {v: i for i, c in enumerate(self.classes) for v in c}

    @cached_property
    def local(self):
        return [{v: k for k, v in enumerate(c)} for c in self.classes]

    @cached_property
    def part_index(self):
        """ host pair (u, v), u in the lower class -> part index """
        index = {}
        for plist in self.edge_parts.values():
            for alpha, part in enumerate(plist):
                for pair in part:
                    index[pair] = alpha
        return index

    def part_of(self, u, v):
        """ (i, j, alpha) for the part holding {u, v}, or None inside a class """
        ci, cj = self.class_of[u], self.class_of[v]
        if ci == cj:
            return None
        if ci > cj:
            u, v, ci, cj = v, u, cj, ci
        return ci, cj, self.part_index[(u, v)]

    def part_graph(self, i, j, alpha):
        li, lj = self.local[i], self.local[j]
        edges = frozenset((li[u], lj[v]) for u, v in self.edge_parts[(i, j)][alpha])
        return BipartiteGraph(len(self.classes[i]), len(self.classes[j]), edges)

    def part_matrix(self, i, j, alpha):
        m = np.zeros((len(self.classes[i]), len(self.classes[j])), dtype=np.int64)
        li, lj = self.local[i], self.local[j]
        for u, v in self.edge_parts[(i, j)][alpha]:
            m[li[u], lj[v]] = 1
        return m

    def triad_graph(self, i, j, k, alpha, beta, gamma):
        """ G_ijk with P_ij^alpha, P_ik^beta, P_jk^gamma, in local indices """
        return TripartiteGraph(
            (self.classes[i], self.classes[j], self.classes[k]),
            self.part_graph(i, j, alpha).edges, self.part_graph(i, k, beta).edges, self.part_graph(j, k, gamma).edges)

    def to_json(self):
        out = {
            't': self.t,
            'l': self.ell,
            'classes': [list(c) for c in self.classes],
            'edge_parts': {f"{i},{j}": [sorted([u, v] for u, v in part) for part in plist]
                           for (i, j), plist in sorted(self.edge_parts.items())},
        }
        if self.eps1 is not None:
            out['eps1'] = f"{self.eps1.numerator}/{self.eps1.denominator}"
        if self.eps2 is not None:
            out['eps2'] = f"{self.eps2.numerator}/{self.eps2.denominator}"
        return out

    @classmethod
    def from_json(cls, data):
        try:
            parts = {tuple(int(x) for x in key.split(',')): value for key, value in data['edge_parts'].items()}
            d = cls(data['classes'], int(data['l']), parts, data.get('eps1'), data.get('eps2'))
        except (KeyError, ValueError, TypeError) as e:
            raise InvalidInputError(f"bad decomposition JSON: {e}")
        if d.t != int(data['t']):
            raise InvalidInputError(f"decomposition declares t={data['t']} but has {d.t} classes")
        return d

    def dumps(self):
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def load(cls, path):
        try:
            with open(path, encoding='utf-8') as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise InvalidInputError(f"cannot read decomposition {path}: {e}")
        return cls.from_json(data)

    def save(self, path):
        with open(path, 'w', encoding='utf-8', newline='\n') as fh:
            fh.write(self.dumps())

    def __repr__(self):
        return f"<Decomposition: t {self.t}, l {self.ell}, n {self.n}>"


def _pair_seed(seed, name, i, j):
    return int(rng_for(seed, name, i, j).integers(0, 2 ** 31))


def random_edge_parts(classes, ell, seed, skip=()):
    """ Uniform random l-slicing of every class pair not in skip """
    parts = {}
    for i, j in combinations(range(len(classes)), 2):
        if (i, j) in skip:
            continue
        ci, cj = classes[i], classes[j]
        complete = BipartiteGraph(len(ci), len(cj), frozenset((a, b) for a in range(len(ci)) for b in range(len(cj))))
        sliced = slice_bipartite(complete, ell, _pair_seed(seed, 'decomp_pair', i, j), measure=False)
        parts[(i, j)] = [frozenset((ci[a], cj[b]) for a, b in p) for p in sliced.parts]
    return parts


def _split_evenly(vertices, count):
    size, extra = divmod(len(vertices), count)
    out, start = [], 0
    for c in range(count):
        stop = start + size + (1 if c < extra else 0)
        out.append(vertices[start:stop])
        start = stop
    return out


def build_decomposition(h, t, ell, strategy='random', seed=0, path=None, eps1=None, eps2=None):
    """ random: shuffled equipartition and random slicing; natural: refine the 3-partition; given: load path """
    if strategy == 'given':
        if path is None:
            raise InvalidInputError("strategy 'given' needs a decomposition file")
        d = Decomposition.load(path)
        if d.n != h.n or set(d.class_of) != set(range(h.n)):
            raise InvalidInputError(f"decomposition covers {d.n} vertices, 3-graph has {h.n}")
        return d
    if not 1 <= t <= h.n:
        raise InvalidInputError(f"cannot split {h.n} vertices into t={t} classes")
    if ell < 1:
        raise InvalidInputError(f"l must be positive, got {ell}")
    if strategy == 'random':
        perm = [int(v) for v in rng_for(seed, 'decomp_vertices', h.n, t).permutation(h.n)]
        classes = [sorted(perm[c::t]) for c in range(t)]
    elif strategy == 'natural':
        if h.partition is None:
            raise InvalidInputError("strategy 'natural' needs a 3-partitioned input")
        if t < 3:
            raise InvalidInputError(f"natural strategy needs t >= 3, got {t}")
        counts = [t // 3 + (1 if p < t % 3 else 0) for p in range(3)]
        classes = []
        for part, count in zip(h.parts, counts):
            if len(part) < count:
                raise InvalidInputError(f"part of size {len(part)} cannot hold {count} classes")
            classes.extend(_split_evenly(list(part), count))
        if sum(len(c) for c in classes) != h.n:
            raise InvalidInputError("the 3-partition does not cover every vertex")
    else:
        raise InvalidInputError(f"unknown strategy {strategy!r}")
    d = Decomposition(classes, ell, random_edge_parts(classes, ell, seed), eps1, eps2)
    logger.info(f"built {d!r} with strategy {strategy}, seed {seed}")
    return d


# -- triads ---------------------------------------------------------------------------------------

def _class_triples(h, d):
    """ (i, j, k) ascending -> 0/1 tensor over V_i x V_j x V_k and the sub-3-graph of those edges """
    buckets = {}
    for e in h.edges:
        if any(v not in d.class_of for v in e):
            raise InvalidInputError(f"edge {e} has a vertex outside the decomposition")
        placed = sorted((d.class_of[v], v) for v in e)
        key = tuple(c for c, _ in placed)
        if len(set(key)) == 3:
            buckets.setdefault(key, []).append(tuple(v for _, v in placed))
    out = {}
    for key in combinations(range(d.t), 3):
        edges = buckets.get(key, [])
        tensor = np.zeros(tuple(len(d.classes[c]) for c in key), dtype=np.int64)
        for triple in edges:
            tensor[tuple(d.local[c][v] for c, v in zip(key, triple))] = 1
        out[key] = (tensor, ThreeGraph(h.n, frozenset(edges)))
    return out


def _triad_counts(tensor, mij, mik, mjk):
    tri = int(np.einsum('ab,ac,bc->', mij, mik, mjk))
    hit = int(np.einsum('abc,ab,ac,bc->', tensor, mij, mik, mjk)) if tri else 0
    return tri, hit


@dataclass
class TriadReport:
    triple: tuple
    labels: tuple
    deviations: tuple
    triangles: int
    d3: Fraction
    dev23: Fraction
    disc23: Fraction
    disc23_exact: bool
    classification: str
    homogeneous: bool = None

    def to_json(self):
        return {
            'triple': list(self.triple),
            'labels': list(self.labels),
            'deviations': [fraction_json(x) for x in self.deviations],
            'triangles': self.triangles,
            'd3': fraction_json(self.d3),
            'dev23': fraction_json(self.dev23),
            'disc23': fraction_json(self.disc23),
            'disc23_exact': self.disc23_exact,
            'classification': self.classification,
            'homogeneous': self.homogeneous,
        }


def part_deviations(d, seed=0):
    """ (i, j, alpha) -> disc2 deviation of the part at density 1/l """
    target = Fraction(1, d.ell)
    out = {}
    for (i, j), plist in sorted(d.edge_parts.items()):
        for alpha in range(len(plist)):
            out[(i, j, alpha)] = disc2_deviation(d.part_graph(i, j, alpha), target, mode='auto', seed=seed).deviation
    return out


def classify_triads(h, d, eps1, eps2, search_budget=2000, mu=None, seed=0, threads=None):
    """ Measure every triad and classify it DISC2_IRREGULAR, DISC3_IRREGULAR or REGULAR """
    eps1, eps2 = as_fraction(eps1), as_fraction(eps2)
    deviations = part_deviations(d, seed)
    triples = _class_triples(h, d)
    ell = d.ell

    def classify(key):
        i, j, k = key
        tensor, sub = triples[key]
        reports = []
        for a in range(ell):
            mij = d.part_matrix(i, j, a)
            for b in range(ell):
                mik = d.part_matrix(i, k, b)
                for c in range(ell):
                    mjk = d.part_matrix(j, k, c)
                    tri, hit = _triad_counts(tensor, mij, mik, mjk)
                    d3 = Fraction(hit, tri) if tri else Fraction(0)
                    devs = (deviations[(i, j, a)], deviations[(i, k, b)], deviations[(j, k, c)])
                    regular2 = all(x <= eps2 for x in devs)
                    dev23, disc23, exact = Fraction(0), Fraction(0), True
                    if tri:
                        g = d.triad_graph(i, j, k, a, b, c)
                        dev23 = dev23_sum(sub, g, d3, require_underlying=False)
                        if regular2 and search_budget > 0 and 0 < hit < tri:
                            report = disc23_witness_search(sub, g, d3, budget=search_budget,
                                                           seed=_pair_seed(seed, f"triad {i},{j},{k}", a, b * ell + c),
                                                           require_underlying=False)
                            disc23, exact = report.deviation, report.exact
                    if not regular2:
                        label = constants.DISC2_IRREGULAR
                    elif disc23 > eps1:
                        label = constants.DISC3_IRREGULAR
                    else:
                        label = constants.REGULAR
                    homogeneous = None if mu is None else (d3 < mu or d3 > 1 - mu)
                    reports.append(TriadReport(key, (a, b, c), devs, tri, d3, dev23, disc23, exact, label, homogeneous))
        return reports

    # warm the cached lookups before the pool shares them
    d.class_of, d.local, d.part_index
    with ThreadPoolExecutor(max_workers=threads or constants.THREADS) as pool:
        results = list(pool.map(classify, sorted(triples)))
    reports = [r for block in results for r in block]
    counts = {label: sum(r.classification == label for r in reports)
              for label in (constants.REGULAR, constants.DISC2_IRREGULAR, constants.DISC3_IRREGULAR)}
    logger.info(f"classified {len(reports)} triads of {d!r}: {counts}")
    return reports


@dataclass
class HomogeneityReport:
    fraction: Fraction
    homogeneous_triples: int
    covered_triples: int


def homogeneity_report(h, d, mu):
    """ Share of all vertex triples lying in a triad whose density is in [0, mu) or (1 - mu, 1] """
    mu = as_fraction(mu)
    triples = _class_triples(h, d)
    good = covered = 0
    for (i, j, k), (tensor, _) in triples.items():
        for a in range(d.ell):
            mij = d.part_matrix(i, j, a)
            for b in range(d.ell):
                mik = d.part_matrix(i, k, b)
                for c in range(d.ell):
                    tri, hit = _triad_counts(tensor, mij, mik, d.part_matrix(j, k, c))
                    if not tri:
                        continue
                    covered += tri
                    density = Fraction(hit, tri)
                    if density < mu or density > 1 - mu:
                        good += tri
    total = d.n * (d.n - 1) * (d.n - 2) // 6
    return HomogeneityReport(Fraction(good, total) if total else Fraction(0), good, covered)


# -- error shapes ---------------------------------------------------------------------------------

@dataclass
class ErrorShape:
    kind: str
    cover: tuple
    budget: int
    binary_cover: tuple = ()
    binary_exact: bool = True
    linear_cover: tuple = ()

    def to_json(self):
        return {
            'kind': self.kind,
            'cover': [list(c) for c in self.cover],
            'cover_size': len(self.cover),
            'budget': self.budget,
            'binary_cover': [list(c) for c in self.binary_cover],
            'binary_exact': self.binary_exact,
            'linear_cover': [list(c) for c in self.linear_cover],
        }


def _min_pair_cover(triples, limit):
    """ Smallest set of pairs meeting every triple, by branching on an uncovered triple; None past limit """
    best = [None]

    def branch(chosen, remaining):
        if best[0] is not None and len(chosen) >= len(best[0]):
            return
        if not remaining:
            best[0] = tuple(sorted(chosen))
            return
        if len(chosen) >= limit:
            return
        i, j, k = remaining[0]
        for pair in ((i, j), (i, k), (j, k)):
            rest = [tr for tr in remaining if not set(pair) <= set(tr)]
            branch(chosen | {pair}, rest)

    branch(frozenset(), sorted(triples))
    return best[0]


def _greedy_pair_cover(triples):
    remaining, chosen = set(triples), []
    while remaining:
        counts = {}
        for i, j, k in sorted(remaining):
            for pair in ((i, j), (i, k), (j, k)):
                counts[pair] = counts.get(pair, 0) + 1
        pair = max(sorted(counts), key=lambda p: counts[p])
        chosen.append(pair)
        remaining = {tr for tr in remaining if not set(pair) <= set(tr)}
    return tuple(sorted(chosen))


def linear_from_binary(gamma, t):
    """ Every triple of [t] containing a pair of gamma """
    gamma = {tuple(sorted(p)) for p in gamma}
    return tuple(tr for tr in combinations(range(t), 3)
                 if any(p in gamma for p in ((tr[0], tr[1]), (tr[0], tr[2]), (tr[1], tr[2]))))


def error_shape(reports, t, budgets=None, eps1=None):
    """ ZERO, BINARY (pair cover within budget), LINEAR (triple cover within budget) or NONE_OF_THESE.

    budgets is (pairs, triples); by default floor(eps1 t^2) and floor(eps1 t^3).
    """
    if budgets is None:
        if eps1 is None:
            raise InvalidInputError("error_shape needs budgets or eps1")
        eps1 = as_fraction(eps1)
        budgets = (int(eps1 * t * t), int(eps1 * t ** 3))
    pair_budget, triple_budget = budgets
    irregular = sorted({r.triple for r in reports if r.classification != constants.REGULAR})
    linear = tuple(irregular)
    if not irregular:
        return ErrorShape(constants.ZERO, (), 0, (), True, ())
    exact = t <= constants.EXACT_COVER_MAX_T
    if exact:
        gamma = _min_pair_cover(irregular, len(irregular))
    else:
        gamma = _greedy_pair_cover(irregular)
    for tr in irregular:
        if not any(set(p) <= set(tr) for p in gamma):
            raise VerificationError(f"pair cover misses irregular triple {tr}")
    if len(gamma) <= pair_budget:
        return ErrorShape(constants.BINARY, gamma, pair_budget, gamma, exact, linear)
    if len(linear) <= triple_budget:
        return ErrorShape(constants.LINEAR, linear, triple_budget, gamma, exact, linear)
    return ErrorShape(constants.NONE_OF_THESE, (), triple_budget, gamma, exact, linear)


def binary_disc3_construction(h, d, cover, seed=0):
    """ Re-slice every pair of the cover into parts living on one half of the lower class.

    Each new part misses half of V_i, so it fails disc2 at density 1/l and
    every triad through a cover pair becomes disc2-irregular. Other pairs keep
    their parts.
    """
    if d.ell < 2:
        raise PreconditionError(f"the half-class slicing needs l >= 2, got {d.ell}")
    ell1, ell2 = d.ell // 2, d.ell - d.ell // 2
    parts = {key: list(plist) for key, plist in d.edge_parts.items()}
    for i, j in sorted({tuple(sorted(p)) for p in cover}):
        vi, vj = d.classes[i], d.classes[j]
        half = len(vi) // 2 or 1
        new = []
        for rows, count, tag in ((vi[:half], ell1, 0), (vi[half:], ell2, 1)):
            if not rows:
                new.extend([frozenset()] * count)
                continue
            complete = BipartiteGraph(len(rows), len(vj), frozenset((a, b) for a in range(len(rows)) for b in range(len(vj))))
            sliced = slice_bipartite(complete, count, _pair_seed(seed, 'disc3_split', i * d.t + j, tag), measure=False)
            new.extend(frozenset((rows[a], vj[b]) for a, b in p) for p in sliced.parts)
        parts[(i, j)] = new
    out = Decomposition(d.classes, d.ell, parts, d.eps1, d.eps2)
    logger.info(f"split {len(cover)} cover pairs into half-class parts")
    return out


# -- disc2 repair ---------------------------------------------------------------------------------

@dataclass
class FixReport:
    failing_before: int
    failing_after: int
    kept: int
    resliced_pairs: tuple
    residual: tuple


def fix_disc2_irregular(h, d, target, seed=0):
    """ Keep parts within target at density 1/l; split the union of the failing parts of a pair afresh.

    With s passing parts, the leftover E_0 is cut into u = 2l(l - s) random
    pieces which are grouped evenly into l - s new parts. A pair with no
    passing part is re-sliced whole.
    """
    target = as_fraction(target)
    before = part_deviations(d, seed)
    ell = d.ell
    parts, resliced = {}, []
    kept = 0
    for (i, j), plist in sorted(d.edge_parts.items()):
        passing = [p for a, p in enumerate(plist) if before[(i, j, a)] <= target]
        kept += len(passing)
        if len(passing) == ell:
            parts[(i, j)] = list(plist)
            continue
        resliced.append((i, j))
        leftover = sorted(set().union(*[p for a, p in enumerate(plist) if before[(i, j, a)] > target]))
        missing = ell - len(passing)
        u = 2 * ell * missing
        li, lj = d.local[i], d.local[j]
        graph = BipartiteGraph(len(d.classes[i]), len(d.classes[j]), frozenset((li[a], lj[b]) for a, b in leftover))
        pieces = slice_bipartite(graph, u, _pair_seed(seed, 'fix_disc2', i, j), measure=False).parts
        groups = [frozenset().union(*pieces[g::missing]) for g in range(missing)]
        ci, cj = d.classes[i], d.classes[j]
        parts[(i, j)] = passing + [frozenset((ci[a], cj[b]) for a, b in grp) for grp in groups]
    out = Decomposition(d.classes, ell, parts, d.eps1, d.eps2)
    after = part_deviations(out, seed)
    residual = tuple(sorted(key for key, value in after.items() if value > target))
    report = FixReport(sum(v > target for v in before.values()), len(residual), kept, tuple(resliced), residual)
    logger.info(f"fix_disc2_irregular: failing parts {report.failing_before} -> {report.failing_after}")
    return out, report


# -- refinement -----------------------------------------------------------------------------------

@dataclass
class RefinementCheck:
    passed: bool
    class_defects: list
    part_defects: list
    sigma: tuple
    eps1: Fraction
    eps2: Fraction

    def to_json(self):
        return {
            'passed': self.passed,
            'class_defects': self.class_defects,
            'part_defects': self.part_defects,
            'sigma': [list(p) for p in self.sigma],
            'eps1': fraction_json(self.eps1),
            'eps2': fraction_json(self.eps2),
        }


def _refinement_defects(r, q, seed=0):
    """ Per class: (class, best q class, |V_i - W_j|). Per part: (i, j, alpha, |P - Q|, disc2 of P - Q) """
    if set(r.class_of) != set(q.class_of):
        raise InvalidInputError("decompositions are over different vertex sets")
    classes = []
    for i, c in enumerate(r.classes):
        counts = {}
        for v in c:
            counts[q.class_of[v]] = counts.get(q.class_of[v], 0) + 1
        best = max(sorted(counts), key=lambda w: counts[w]) if counts else 0
        classes.append((i, best, len(c) - counts.get(best, 0)))
    parts = []
    for (i, j), plist in sorted(r.edge_parts.items()):
        for alpha, part in enumerate(plist):
            labels = {}
            for u, v in part:
                labels.setdefault(q.part_of(u, v), []).append((u, v))
            inside = labels.pop(None, [])
            if labels:
                best = max(sorted(labels), key=lambda key: len(labels[key]))
                contained = len(labels[best]) + len(inside)
            else:
                contained = len(inside)
                best = None
            outside = sorted(pair for key, pairs in labels.items() if key != best for pair in pairs)
            li, lj = r.local[i], r.local[j]
            diff = BipartiteGraph(len(r.classes[i]), len(r.classes[j]), frozenset((li[u], lj[v]) for u, v in outside))
            deviation = disc2_deviation(diff, mode='auto', seed=seed).deviation if outside else Fraction(0)
            parts.append((i, j, alpha, len(part) - contained, len(part), deviation))
    return classes, parts


def verify_approx_refinement(r, q, eps1, eps2, seed=0):
    """ Conditions of an approximate refinement of q by r, with the exceptional pair set.

    Pairs of r inside a single class of q are unconstrained by q's edge parts.
    """
    eps1, eps2 = as_fraction(eps1), as_fraction(eps2)
    classes, parts = _refinement_defects(r, q, seed)
    class_defects = [{'class': i, 'best': w, 'outside': x} for i, w, x in classes
                     if not x < eps1 * len(r.classes[i])]
    part_defects, sigma = [], set()
    for i, j, alpha, outside, size, deviation in parts:
        if outside > eps1 * size or deviation > eps2:
            part_defects.append({'pair': [i, j], 'part': alpha, 'outside': outside, 'size': size,
                                 'deviation': fraction_json(deviation)})
            sigma.add((i, j))
    sigma = tuple(sorted(sigma))
    pair_count = r.t * (r.t - 1) // 2
    passed = not class_defects and len(sigma) <= eps1 * pair_count
    return RefinementCheck(passed, class_defects, part_defects, sigma, eps1, eps2)


def _achieved(r, q, seed):
    """ Smallest (eps1, eps2) at which r passes as an approximate refinement of q with empty sigma """
    classes, parts = _refinement_defects(r, q, seed)
    eps1 = max([Fraction(x + 1, len(r.classes[i])) for i, _, x in classes if r.classes[i]] or [Fraction(0)])
    eps1 = max([eps1] + [Fraction(outside, size) for _, _, _, outside, size, _ in parts if size])
    eps2 = max([deviation for *_, deviation in parts] or [Fraction(0)])
    return eps1, eps2


def common_refinement(p, q, targets=None, seed=0):
    """ Intersect vertex classes, rebalance to an equipartition, and slice pairs by (p part, q part) labels.

    Returns the refinement and, per input, the achieved (eps1, eps2) with the check at those values.
    """
    if set(p.class_of) != set(q.class_of):
        raise InvalidInputError("decompositions are over different vertex sets")
    cells = []
    for a in p.classes:
        for b in q.classes:
            cell = sorted(set(a) & set(b))
            if cell:
                cells.append(cell)
    n, t = p.n, len(cells)
    order = sorted(range(t), key=lambda c: -len(cells[c]))
    targets_size = [0] * t
    for rank, c in enumerate(order):
        targets_size[c] = n // t + (1 if rank < n % t else 0)
    pool = []
    moved = 0
    for c in range(t):
        surplus = len(cells[c]) - targets_size[c]
        if surplus > 0:
            pool.extend(cells[c][:surplus])
            moved += surplus
            cells[c] = cells[c][surplus:]
    for c in range(t):
        while len(cells[c]) < targets_size[c]:
            cells[c].append(pool.pop(0))
    classes = [sorted(c) for c in cells]
    ell = p.ell * q.ell
    rng = rng_for(seed, 'refinement_labels', n, ell)
    parts = {}
    for i, j in combinations(range(t), 2):
        groups = [set() for _ in range(ell)]
        for u in classes[i]:
            for v in classes[j]:
                lp, lq = p.part_of(u, v), q.part_of(u, v)
                ap = lp[2] if lp else int(rng.integers(0, p.ell))
                aq = lq[2] if lq else int(rng.integers(0, q.ell))
                groups[ap * q.ell + aq].add((u, v))
        parts[(i, j)] = [frozenset(g) for g in groups]
    r = Decomposition(classes, ell, parts)
    reports = {}
    for name, other in (('p', p), ('q', q)):
        eps1, eps2 = _achieved(r, other, seed)
        reports[name] = verify_approx_refinement(r, other, eps1, eps2, seed)
    logger.info(f"common refinement {r!r}, moved {moved} vertices while rebalancing")
    return r, reports


# -- reduced encodings ----------------------------------------------------------------------------

@dataclass
class ReducedEncoding:
    """ Corners are (apex u, i, j, beta, gamma): P_ui^beta with P_uj^gamma over the pair i < j.

    Edge parts are (i, j, alpha). relation maps (edge, corner) to 1 (E1) or 0 (E0).
    """
    eps: Fraction
    ell: int
    corners: tuple
    relation: dict
    undecided: tuple
    densities: dict

    @property
    def e1(self):
        return {key for key, value in self.relation.items() if value == 1}

    @property
    def e0(self):
        return {key for key, value in self.relation.items() if value == 0}

    def to_json(self):
        return {
            'eps': fraction_json(self.eps),
            'l': self.ell,
            'corners': [list(c) for c in self.corners],
            'e1': sorted([list(e), list(c)] for e, c in self.e1),
            'e0': sorted([list(e), list(c)] for e, c in self.e0),
            'undecided': len(self.undecided),
        }


def _pair_key(a, b):
    return (a, b) if a < b else (b, a)


def reduced_encoding(h, d, eps, eps2=None, seed=0):
    """ Corners of disc2-regular parts, and E1 / E0 by triad density >= 1 - eps / <= eps """
    eps = as_fraction(eps)
    if not 0 < eps < Fraction(1, 2):
        raise InvalidInputError(f"encoding threshold must lie in (0, 1/2), got {eps}")
    eps2 = d.eps2 if eps2 is None else as_fraction(eps2)
    deviations = part_deviations(d, seed) if eps2 is not None else None
    triples = _class_triples(h, d)

    def regular(a, b, alpha):
        if deviations is None:
            return True
        i, j = _pair_key(a, b)
        return deviations[(i, j, alpha)] <= eps2

    corners, relation, undecided, densities = [], {}, [], {}
    for i, j in combinations(range(d.t), 2):
        for u in range(d.t):
            if u in (i, j):
                continue
            key = tuple(sorted((u, i, j)))
            tensor, _ = triples[key]
            # tensor axes follow the sorted class order; move them to (u, i, j)
            axes = [key.index(u), key.index(i), key.index(j)]
            tensor = np.transpose(tensor, axes)
            for beta in range(d.ell):
                mui = d.part_matrix(*_pair_key(u, i), beta)
                if u > i:
                    mui = mui.T
                if not regular(u, i, beta):
                    continue
                for gamma in range(d.ell):
                    if not regular(u, j, gamma):
                        continue
                    muj = d.part_matrix(*_pair_key(u, j), gamma)
                    if u > j:
                        muj = muj.T
                    corner = (u, i, j, beta, gamma)
                    corners.append(corner)
                    for alpha in range(d.ell):
                        tri, hit = _triad_counts(tensor, mui, muj, d.part_matrix(i, j, alpha))
                        edge = (i, j, alpha)
                        if not tri:
                            undecided.append((edge, corner))
                            continue
                        density = Fraction(hit, tri)
                        densities[(edge, corner)] = density
                        if density >= 1 - eps:
                            relation[(edge, corner)] = 1
                        elif density <= eps:
                            relation[(edge, corner)] = 0
                        else:
                            undecided.append((edge, corner))
    enc = ReducedEncoding(eps, d.ell, tuple(corners), relation, tuple(undecided), densities)
    logger.info(f"reduced encoding: {len(corners)} corners, E1 {len(enc.e1)}, E0 {len(enc.e0)}, undecided {len(undecided)}")
    return enc


def find_encoding(enc, pattern, budget=None):
    """ Maps f: right side -> edge parts of one pair and g: left side -> corners over it, realising pattern """
    if isinstance(pattern, str):
        pattern = FamilySpec.parse(pattern)
    if pattern.family not in constants.BIPARTITE_FAMILIES:
        raise InvalidInputError(f"encodings take H(k) or U(k), got {pattern.family}")
    graph = build_canonical(pattern)
    label = pattern.label()
    budget = constants.SEARCH_BUDGET if budget is None else budget
    if budget <= 0:
        return PatternWitness(label, constants.INCONCLUSIVE, details={'reason': 'zero budget'})
    left, right = range(graph.left_size), range(graph.right_size)
    adjacent = {(a, b) for a, b in graph.edges}
    by_pair = {}
    for corner in enc.corners:
        by_pair.setdefault((corner[1], corner[2]), []).append(corner)
    nodes = 0
    for pair in sorted(by_pair):
        corners = by_pair[pair]
        assignment = {}

        def feasible(a, candidates, b, alpha):
            want = 1 if (a, b) in adjacent else 0
            edge = (pair[0], pair[1], alpha)
            return [c for c in candidates if enc.relation.get((edge, c)) == want]

        def extend(b, options):
            nonlocal nodes
            if b == len(right):
                return options
            for alpha in range(enc.ell):
                if nodes >= budget:
                    return 'stop'
                nodes += 1
                narrowed = {a: feasible(a, options[a], b, alpha) for a in left}
                if all(narrowed.values()):
                    assignment[b] = alpha
                    found = extend(b + 1, narrowed)
                    if found is not None:
                        return found
                    del assignment[b]
            return None

        found = extend(0, {a: list(corners) for a in left})
        if found == 'stop':
            logger.warning(f"find_encoding {label}: budget {budget} exhausted")
            return PatternWitness(label, constants.INCONCLUSIVE, nodes_explored=budget)
        if found is not None:
            embedding = {f"a{a}": found[a][0] for a in left}
            embedding.update({f"b{b}": (pair[0], pair[1], assignment[b]) for b in right})
            witness = PatternWitness(label, constants.FOUND, embedding, nodes, {'pair': list(pair)})
            if not verify_encoding(enc, graph, witness):
                raise VerificationError(f"{label} encoding failed re-verification")
            return witness
    return PatternWitness(label, constants.ABSENT_CERTIFIED, nodes_explored=nodes)


def verify_encoding(enc, graph, witness):
    for a in range(graph.left_size):
        for b in range(graph.right_size):
            want = 1 if (a, b) in graph.edges else 0
            if enc.relation.get((tuple(witness.embedding[f"b{b}"]), tuple(witness.embedding[f"a{a}"]))) != want:
                return False
    return True


def extract_fop2_witness(h, d, encoding_witness, k, budget=None, threads=None):
    """ Vertex-level realisation inside the encoded blocks: F(k) for H(k) encodings, V(k) for U(k).

    Role candidates are the apex classes, V_i and V_j of the encoded pair i < j.
    Every assignment of the three blocks to the pattern roles is tried.
    """
    if not isinstance(encoding_witness, PatternWitness) or not encoding_witness.found:
        raise InvalidInputError("extraction needs a FOUND encoding witness")
    budget = constants.SEARCH_BUDGET if budget is None else budget
    family = constants.V if encoding_witness.pattern.startswith(constants.POWERSET_GRAPH) else constants.F
    spec = FamilySpec(family, k=k) if family == constants.V else FamilySpec(family, ell=k)
    label = spec.label()
    if budget <= 0:
        return PatternWitness(label, constants.INCONCLUSIVE, details={'reason': 'zero budget'})
    i, j = encoding_witness.details['pair']
    apexes = sorted({int(c[0]) for key, c in encoding_witness.embedding.items() if key.startswith('a')})
    blocks = {'apex': [v for u in apexes for v in d.classes[u]], 'i': list(d.classes[i]), 'j': list(d.classes[j])}
    pattern = build_canonical(spec)
    if family == constants.F:
        preferred = lambda roles: roles[2] != 'apex'
    else:
        preferred = lambda roles: roles[0] != 'apex'
    orders = sorted(permutations(('i', 'j', 'apex')), key=lambda roles: (not preferred(roles), roles))
    spent, certain = 0, True
    for roles in orders:
        remaining = budget - spent
        if remaining <= 0:
            certain = False
            break
        witness = search_embedding(h, pattern, label, [blocks[r] for r in roles], remaining, threads)
        spent += witness.nodes_explored
        if witness.found:
            witness.nodes_explored = spent
            witness.details['roles'] = list(roles)
            if family == constants.F:
                fop = fop_witness_from_embedding(k, witness.embedding)
                if not verify_fop2(h, fop):
                    raise VerificationError(f"{label} tuple is not a {k}-FOP2 witness")
                witness.details['fop2_verified'] = True
            logger.info(f"extracted {label} with roles {roles} after {spent} nodes")
            return witness
        if witness.status == constants.INCONCLUSIVE:
            certain = False
    status = constants.ABSENT_CERTIFIED if certain else constants.INCONCLUSIVE
    return PatternWitness(label, status, nodes_explored=min(spent, budget))


# -- instances with known decompositions ----------------------------------------------------------

def fop_equivalence_decomposition(inst, seed=0):
    """ Classes X, Y, Z_1..Z_k; the X-Y parts are the defining slices, all other pairs are sliced at random """
    classes = [inst.xs, inst.ys] + [list(z) for z in inst.zs]
    parts = random_edge_parts(classes, inst.k, seed, skip={(0, 1)})
    parts[(0, 1)] = list(inst.q_xy)
    return Decomposition(classes, inst.k, parts)


def ip2_encoding_instance(k, m, seed=0):
    """ Classes A_1..A_k, B, C of size m with l = 2^k; a b c (a in A_u) is an edge iff bc lies in P_BC^S with u in S """
    ell = 2 ** k
    classes = [list(range(u * m, (u + 1) * m)) for u in range(k + 2)]
    parts = random_edge_parts(classes, ell, seed)
    b_index, c_index = k, k + 1
    edges = []
    for s, part in enumerate(parts[(b_index, c_index)]):
        for u in range(k):
            if s >> u & 1:
                edges.extend((a, b, c) for b, c in part for a in classes[u])
    h = ThreeGraph((k + 2) * m, frozenset(edges))
    return h, Decomposition(classes, ell, parts)
