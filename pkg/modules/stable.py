"""Stable-graph partitioning.

Bipartite conventions follow detect.tree_rank: leaf sets live on the right
side of a BipartiteGraph and goodness is measured against left vertices.

The recursive partitioners work on fibered sets, a dict key -> right-side
bitmask with one bipartite graph per key. The plain bipartite case is the
single fiber None; the 3-graph case keys fibers by the vertex a whose link
graph H_a carries the fiber alpha(a).
"""
import math
from dataclasses import dataclass, field
from fractions import Fraction

import constants
from modules.core import BipartiteGraph
from modules.detect import count_d_trees, tree_rank
from modules.helpers import (CapExceededError, InvalidInputError, PreconditionError, VerificationError, as_fraction,
                             bits, fraction_json, get_logger, mask_of, pmap, popcount)

logger = get_logger(__name__)

SCHEDULE_KINDS = ('geometric', 'harmonic', 'constant')
RANK_PROBE_CAP = 6


@dataclass(frozen=True)
class Schedule:
    """ A non-increasing f: N -> (0, 1], handed to the partitioners in place of worst-case parameter sequences """
    kind: str = 'geometric'
    value: Fraction = Fraction(1, 2)

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise InvalidInputError(f"unknown schedule kind {self.kind!r}, expected one of {', '.join(SCHEDULE_KINDS)}")
        value = as_fraction(self.value)
        if not 0 < value <= 1:
            raise InvalidInputError(f"schedule value {value} outside (0, 1]")
        object.__setattr__(self, 'value', value)

    def __call__(self, i):
        i = max(int(i), 1)
        if self.kind == 'geometric':
            return self.value ** i
        if self.kind == 'harmonic':
            return self.value / i
        return self.value

    @classmethod
    def parse(cls, text):
        """ 'geometric:0.5', 'harmonic:1', 'constant:1/10', optionally written as 'f=geometric:0.5' """
        body = text.split('=', 1)[1] if text.startswith('f=') else text
        kind, _, value = body.partition(':')
        if not value:
            raise InvalidInputError(f"schedule {text!r} needs the form kind:value")
        try:
            value = as_fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise InvalidInputError(f"bad schedule value in {text!r}")
        return cls(kind.strip(), value)

    def label(self):
        return f"{self.kind}:{self.value}"


def _as_schedule(f):
    if f is None:
        return Schedule()
    if isinstance(f, str):
        return Schedule.parse(f)
    return f


def _label(f):
    return f.label() if isinstance(f, Schedule) else getattr(f, '__name__', 'custom')


def _mask_level(nbrs, s):
    """ (max over (v, N(v)) of min(|N(v) & s|, |s - N(v)|) / |s|, first v attaining it) """
    size = popcount(s)
    best, worst = 0, None
    for v, nb in nbrs:
        inside = popcount(s & nb)
        m = min(inside, size - inside)
        if worst is None or m > best:
            best, worst = m, v
    return Fraction(best, size), worst


def epsilon_good_level(g, subset, side='right', against=None):
    """ Least eps for which subset is eps-good, with the opposite vertex attaining it.

    side names where subset lives; against restricts the opposite vertices
    (default: the whole opposite side).
    """
    if side not in ('left', 'right'):
        raise InvalidInputError(f"side must be 'left' or 'right', got {side!r}")
    members = sorted(set(int(v) for v in subset))
    if not members:
        raise InvalidInputError("goodness of an empty set is undefined")
    nbrs, size = (g.left_neighbors, g.right_size) if side == 'right' else (g.right_neighbors, g.left_size)
    if members[0] < 0 or members[-1] >= size:
        raise InvalidInputError(f"set vertex out of range for the {side} side")
    opposite = range(len(nbrs)) if against is None else sorted(set(against))
    return _mask_level([(v, nbrs[v]) for v in opposite], mask_of(members))


def cross_density(g, left, right):
    left, right = sorted(set(left)), sorted(set(right))
    if not left or not right:
        return Fraction(0)
    target = mask_of(right)
    hits = sum(popcount(g.left_neighbors[u] & target) for u in left)
    return Fraction(hits, len(left) * len(right))


@dataclass
class SymmetryReport:
    outcome: str
    density: Fraction
    failing_left: tuple = ()
    failing_right: tuple = ()

    def to_json(self):
        return {
            'outcome': self.outcome,
            'density': fraction_json(self.density),
            'failing_left': list(self.failing_left),
            'failing_right': list(self.failing_right),
        }


def symmetry_classify(g, eps, u_prime=None, w_prime=None):
    """ Two-sided homogeneity forces density near 0 or 1.

    U is the left side, W the right side; u_prime and w_prime default to the
    whole sides. Hypotheses are checked exactly; when they hold the exact
    density must fall in [0, 2 sqrt(eps)) or (1 - 2 sqrt(eps), 1].
    """
    eps = as_fraction(eps)
    if not 0 < eps < Fraction(1, 4):
        raise InvalidInputError(f"eps must lie in (0, 1/4), got {eps}")
    u_prime = range(g.left_size) if u_prime is None else sorted(set(u_prime))
    w_prime = range(g.right_size) if w_prime is None else sorted(set(w_prime))
    density = g.density()
    bad_u = tuple(u for u in u_prime
                  if max(popcount(g.left_neighbors[u]), g.right_size - popcount(g.left_neighbors[u]))
                  < (1 - eps) * g.right_size)
    bad_w = tuple(w for w in w_prime
                  if max(popcount(g.right_neighbors[w]), g.left_size - popcount(g.right_neighbors[w]))
                  < (1 - eps) * g.left_size)
    if (len(u_prime) < (1 - eps) * g.left_size or len(w_prime) < (1 - eps) * g.right_size
            or bad_u or bad_w):
        return SymmetryReport(constants.HYPOTHESES_FAIL, density, bad_u, bad_w)
    # d < 2 sqrt(eps) iff d^2 < 4 eps, for d >= 0
    if density * density < 4 * eps:
        return SymmetryReport(constants.DENSITY_LOW, density)
    if (1 - density) ** 2 < 4 * eps:
        return SymmetryReport(constants.DENSITY_HIGH, density)
    raise VerificationError(f"hypotheses hold but density {density} is in neither interval at eps {eps}")


def good_pair_report(g, sets, eps):
    """ Cross densities between every two sets certified eps-good from both sides of a symmetric g """
    eps = as_fraction(eps)
    certified = []
    for index, members in enumerate(sets):
        if not members:
            continue
        if (epsilon_good_level(g, members)[0] <= eps
                and epsilon_good_level(g, members, side='left')[0] <= eps):
            certified.append((index, tuple(members)))
    rows = []
    for a, (i, x) in enumerate(certified):
        for j, y in certified[a:]:
            report = symmetry_classify(g.restrict(y, x), eps)
            rows.append({'pair': (i, j), 'density': report.density, 'outcome': report.outcome})
    return rows


class _ZeroCarve(Exception):
    def __init__(self, stage):
        super().__init__(f"stage {stage}")
        self.stage = stage


class _Carver:
    """ Staged greedy carving of one leaf set against the left side of g """

    def __init__(self, g, leaves, d_cap):
        self.g = g
        self.nbrs = g.left_neighbors
        self.z = leaves
        self.d_cap = d_cap

    def rank(self, s):
        return tree_rank(self.g, bits(s), depth_cap=self.d_cap)[0] if s else 0

    def settled(self):
        z = self.z
        return not any(z & nb and z & ~nb for nb in self.nbrs)

    def stage(self, level, index):
        """ (carved masks, |Z| before each carve, remaining Z) for one stage; self.z is left untouched """
        z = self.z
        carved, sizes = [], []
        while z:
            size = popcount(z)
            threshold = level * size
            for nb in self.nbrs:
                inside, outside = z & nb, z & ~nb
                if min(popcount(inside), popcount(outside)) >= threshold:
                    break
            else:
                break
            count = math.floor(threshold)
            if count == 0:
                raise _ZeroCarve(index)
            side = inside if self.rank(inside) <= self.rank(outside) else outside
            piece = mask_of(bits(side)[:count])
            carved.append(piece)
            sizes.append(size)
            z &= ~piece
        return carved, sizes, z


@dataclass
class CarveStage:
    index: int
    level: Fraction
    carved: list
    z_sizes: list
    remainder: tuple


@dataclass
class GoodPartition:
    d_cap: int
    schedule: str
    leaves: tuple
    stages: list
    residue: tuple
    levels: dict = field(default_factory=dict)
    ranks: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)

    @property
    def t(self):
        return len(self.stages)

    def sets(self):
        """ (label, members) for every carved set, then the residue when nonempty """
        out = [(f"W{s.index},{j}", members) for s in self.stages for j, members in enumerate(s.carved, start=1)]
        if self.residue:
            out.append(('Z', self.residue))
        return out

    def to_json(self):
        return {
            'd_cap': self.d_cap,
            'schedule': self.schedule,
            't': self.t,
            'stages': [{'index': s.index, 'level': fraction_json(s.level), 'carved': [list(c) for c in s.carved],
                        'z_sizes': s.z_sizes} for s in self.stages],
            'residue': list(self.residue),
            'sets': [{'label': label, 'members': list(members), 'level': fraction_json(self.levels[label]),
                      'rank': self.ranks[label]} for label, members in self.sets()],
            'checks': self.checks,
        }

    def __repr__(self):
        return f"<GoodPartition: {len(self.leaves)} leaves, {self.t} stages, residue {len(self.residue)}>"


def goodsets1_partition(g, leaves=None, d_cap=2, f=None, check_rank=True):
    """ Staged greedy partition of a leaf set into rank-reduced carves and a good residue.

    At stage i, while some left vertex u sees between f(i)|Z| and (1 - f(i))|Z|
    of the current set Z, floor(f(i)|Z|) lowest-index elements are carved from
    the side of u's split with the smaller capped tree rank (ties: the
    neighbour side). Runs until Z is empty or 0-good.
    """
    f = _as_schedule(f)
    leaves = tuple(sorted(set(range(g.right_size) if leaves is None else leaves)))
    if check_rank and leaves:
        rank = tree_rank(g, leaves, depth_cap=d_cap + 1)[0]
        if rank > d_cap:
            raise PreconditionError(f"leaf set has tree rank above {d_cap}")
    carver = _Carver(g, mask_of(leaves), d_cap)
    stages = []
    index = 1
    while not carver.settled():
        level = f(index)
        try:
            carved, sizes, rest = carver.stage(level, index)
        except _ZeroCarve:
            raise PreconditionError(f"stage {index}: carve size floor({level} * |Z|) is 0 with |Z| = "
                                    f"{popcount(carver.z)}; the schedule decays too fast for this set")
        carver.z = rest
        stages.append(CarveStage(index, level, [tuple(bits(c)) for c in carved], sizes, tuple(bits(rest))))
        if not carved and f(index + 1) >= level:
            # a non-decreasing step can never carve again
            break
        index += 1
    result = GoodPartition(d_cap, _label(f), leaves, stages, tuple(bits(carver.z)))
    for label, members in result.sets():
        result.levels[label] = epsilon_good_level(g, members)[0]
        result.ranks[label] = tree_rank(g, members, depth_cap=d_cap)[0]
    result.checks = _check_good_partition(g, result)
    if not all(result.checks.values()):
        logger.error(f"goodsets1 re-verification failed: {result.checks}")
    logger.info(f"goodsets1: {len(leaves)} leaves, {result.t} stages, residue {len(result.residue)}")
    return result


def _check_good_partition(g, part):
    seen = []
    for _, members in part.sets():
        seen.extend(members)
    covers = len(seen) == len(set(seen)) and set(seen) == set(part.leaves)
    sizes = all(len(c) == math.floor(s.level * z) for s in part.stages for c, z in zip(s.carved, s.z_sizes))
    goodness = all(not s.remainder or epsilon_good_level(g, s.remainder)[0] <= s.level for s in part.stages)
    carved = [label for label, _ in part.sets() if label != 'Z']
    ranks = all(part.ranks[label] < part.d_cap for label in carved)
    return {'covers': covers, 'carve_sizes': sizes, 'stage_goodness': goodness, 'ranks_below_cap': ranks}


def _fs_size(fs):
    return sum(popcount(m) for m in fs.values())


def _fs_union(*sets):
    out = {}
    for fs in sets:
        for k, m in fs.items():
            out[k] = out.get(k, 0) | m
    return {k: m for k, m in out.items() if m}


def _fs_rank(graphs, fs, cap):
    return max((tree_rank(graphs[k], bits(m), depth_cap=cap)[0] for k, m in fs.items() if m), default=0)


def _fs_level(graphs, fs):
    level = Fraction(0)
    for k, m in fs.items():
        if m:
            nbrs = graphs[k].left_neighbors
            level = max(level, _mask_level(enumerate(nbrs), m)[0])
    return level


class _PartCarver:
    """ One input part, a _Carver per fiber, staged in lockstep """

    def __init__(self, graphs, fs, d):
        self.fibers = {k: _Carver(graphs[k], m, d) for k, m in fs.items() if m}
        self.stages = []

    def stage(self, level, index):
        return {k: c.stage(level, index) for k, c in self.fibers.items() if c.z and not c.settled()}

    def commit(self, results):
        carves = []
        for k, (carved, _, rest) in results.items():
            self.fibers[k].z = rest
            for j, piece in enumerate(carved):
                if len(carves) <= j:
                    carves.append({})
                carves[j][k] = piece
        self.stages.append(carves)
        return carves

    @property
    def remainder(self):
        return {k: c.z for k, c in self.fibers.items() if c.z}


def _strong(graphs, sets, d, eps, f, threads):
    """ Recursive good-set refinement of rank-bounded fibered sets.

    Returns (omega, splits): omega holds indices of parts set aside whole,
    splits maps every other index to (residue, good sets).
    """
    if not sets:
        return set(), {}
    ranks = pmap(lambda fs: _fs_rank(graphs, fs, d + 1), sets, threads)
    over = [i for i, r in enumerate(ranks) if r > d]
    if over:
        raise PreconditionError(f"parts {over} have tree rank above {d}")
    if d == 0:
        return set(), {i: ({}, [fs] if fs else []) for i, fs in enumerate(sets)}
    top = [i for i, r in enumerate(ranks) if r == d]
    if not top:
        return _strong(graphs, sets, d - 1, eps, f, threads)

    total = sum(_fs_size(fs) for fs in sets)
    carvers = {u: _PartCarver(graphs, sets[u], d) for u in top}
    i1 = 0
    while True:
        i1 += 1
        level = f(i1)
        try:
            results = pmap(lambda u: carvers[u].stage(level, i1), top, threads)
        except _ZeroCarve as e:
            logger.warning(f"rank {d}: stage {e.stage} carve rounds to 0, stopping the stages there")
            for u in top:
                carvers[u].stages.append([])
            break
        carved = sum(_fs_size(c) for u, res in zip(top, results) for c in carvers[u].commit(res))
        if carved <= eps * eps * total:
            break

    omega0, plan = set(), {}
    for u in top:
        c = carvers[u]
        size_u = _fs_size(sets[u])
        last = _fs_union(*c.stages[i1 - 1])
        if _fs_size(last) > eps * size_u:
            omega0.add(u)
            continue
        residue, kept = last, []
        cutoff = f(i1 - 1) if i1 > 1 else Fraction(1)
        for i, carves in enumerate(c.stages[:i1 - 1], start=1):
            whole = _fs_union(*carves)
            v_i = _fs_size(whole)
            if v_i <= eps * cutoff * size_u:
                residue = _fs_union(residue, whole)
                continue
            for piece in carves:
                if _fs_size(piece) >= eps * f(i) * v_i:
                    kept.append(piece)
                else:
                    residue = _fs_union(residue, piece)
        tail = c.remainder
        goods = []
        if tail and _fs_size(tail) >= eps * size_u:
            goods.append(tail)
        else:
            residue = _fs_union(residue, tail)
        plan[u] = (residue, goods, kept)

    pieces, owners = [], []
    for u, (_, _, kept) in plan.items():
        pieces.extend(kept)
        owners.extend([('top', u)] * len(kept))
    for i in range(len(sets)):
        if i not in carvers:
            pieces.append(sets[i])
            owners.append(('rest', i))
    omega1, inner = _strong(graphs, pieces, d - 1, eps, f, threads)

    omega2 = set()
    for u in plan:
        lost = sum(_fs_size(pieces[k]) for k in omega1 if owners[k] == ('top', u))
        if lost and lost >= eps * _fs_size(sets[u]):
            omega2.add(u)
    omega = omega0 | omega2 | {owners[k][1] for k in omega1 if owners[k][0] == 'rest'}
    splits = {}
    for u, (residue, goods, _) in plan.items():
        if u in omega:
            continue
        goods = list(goods)
        for k, owner in enumerate(owners):
            if owner != ('top', u):
                continue
            if k in omega1:
                residue = _fs_union(residue, pieces[k])
            else:
                r, g = inner[k]
                residue = _fs_union(residue, r)
                goods.extend(g)
        splits[u] = (residue, goods)
    for k, (kind, i) in enumerate(owners):
        if kind == 'rest' and k not in omega1:
            splits[i] = inner[k]
    logger.debug(f"rank {d}: {len(sets)} parts, stages {i1}, omega {sorted(omega)}")
    return omega, splits


@dataclass
class PartSplit:
    residue: tuple
    good_sets: list
    levels: list

    def to_json(self):
        return {
            'residue': [list(x) if isinstance(x, tuple) else x for x in self.residue],
            'good_sets': [[list(x) if isinstance(x, tuple) else x for x in s] for s in self.good_sets],
            'levels': [fraction_json(v) for v in self.levels],
        }


@dataclass
class StrongPartition:
    mode: str
    d: int
    eps: Fraction
    schedule: str
    parts: list
    omega: list
    splits: dict
    n_prime: int = None
    checks: dict = field(default_factory=dict)

    @property
    def total(self):
        return sum(len(p) for p in self.parts)

    @property
    def omega_mass(self):
        if not self.total:
            return Fraction(0)
        return Fraction(sum(len(self.parts[u]) for u in self.omega), self.total)

    @property
    def max_residue(self):
        return max((Fraction(len(s.residue), len(self.parts[u])) for u, s in self.splits.items() if self.parts[u]),
                   default=Fraction(0))

    @property
    def max_level(self):
        return max((v for s in self.splits.values() for v in s.levels), default=Fraction(0))

    @property
    def m_prime(self):
        return max((len(s.good_sets) for s in self.splits.values()), default=0)

    def to_json(self):
        return {
            'mode': self.mode,
            'd': self.d,
            'eps': fraction_json(self.eps),
            'schedule': self.schedule,
            'omega': list(self.omega),
            'omega_mass': fraction_json(self.omega_mass),
            'max_residue': fraction_json(self.max_residue),
            'max_level': fraction_json(self.max_level),
            'm_prime': self.m_prime,
            'n_prime': self.n_prime,
            'splits': {str(u): s.to_json() for u, s in sorted(self.splits.items())},
            'checks': self.checks,
        }

    def __repr__(self):
        return f"<StrongPartition: {self.mode}, {len(self.parts)} parts, omega {len(self.omega)}, m' {self.m_prime}>"


def _check_strong(result, f):
    covers = True
    for u, split in result.splits.items():
        members = list(split.residue) + [x for s in split.good_sets for x in s]
        if len(members) != len(set(members)) or set(members) != set(result.parts[u]):
            covers = False
    covered = set(result.splits) | set(result.omega)
    covers = covers and covered == set(range(len(result.parts))) and not set(result.splits) & set(result.omega)
    checks = {
        'partition': covers,
        'omega_mass': result.omega_mass <= result.eps,
        'residue': result.max_residue <= result.eps,
        'goodness': result.m_prime == 0 or result.max_level <= f(result.m_prime),
    }
    if result.n_prime is not None:
        checks['equal_sizes'] = all(len(s) == result.n_prime for split in result.splits.values()
                                    for s in split.good_sets)
    return checks


def _check_eps(eps):
    eps = as_fraction(eps)
    if not 0 < eps < 1:
        raise InvalidInputError(f"eps must lie in (0, 1), got {eps}")
    return eps


def goodstrong_partition(g, parts, eps, f=None, d=None, schedule_override=None, equitable=False, threads=None):
    """ Split rank-bounded leaf sets into good sets plus small residues, setting aside an exceptional family.

    f is the goodness schedule the output is certified against;
    schedule_override drives the carving stages (defaults to f). Every
    guarantee is recomputed on the output and reported in checks.
    """
    f = _as_schedule(f)
    inner = _as_schedule(schedule_override) if schedule_override is not None else f
    eps = _check_eps(eps)
    parts = [tuple(sorted(set(int(v) for v in p))) for p in parts]
    flat = [v for p in parts for v in p]
    if len(flat) != len(set(flat)):
        raise InvalidInputError("parts overlap")
    if flat and (min(flat) < 0 or max(flat) >= g.right_size):
        raise InvalidInputError("part vertex out of range for the right side")
    if equitable and len({len(p) for p in parts}) > 1:
        raise PreconditionError("equitable mode needs parts of equal size")
    graphs = {None: g}
    sets = [{None: mask_of(p)} if p else {} for p in parts]
    if d is None:
        d = max(pmap(lambda fs: _fs_rank(graphs, fs, RANK_PROBE_CAP), sets, threads), default=0)
    omega, splits = _strong(graphs, sets, d, eps, inner, threads)

    def members(fs):
        return tuple(bits(fs.get(None, 0)))

    out = {u: (members(r), [members(s) for s in goods]) for u, (r, goods) in splits.items()}
    omega = set(omega)
    n_prime = None
    if equitable:
        omega, out, n_prime = _equalize(parts, omega, out, eps)
    result = StrongPartition('equitable' if equitable else 'goodstrong', d, eps, _label(f), parts, sorted(omega), {})
    result.n_prime = n_prime
    for u, (residue, goods) in sorted(out.items()):
        levels = [epsilon_good_level(g, s)[0] for s in goods]
        result.splits[u] = PartSplit(residue, goods, levels)
    result.checks = _check_strong(result, f)
    logger.info(f"{result.mode}: {len(parts)} parts, d {d}, omega {result.omega}, m' {result.m_prime}, "
                f"checks {result.checks}")
    return result


def _equalize(parts, omega, out, eps):
    """ Chop every good set into blocks of one common size n' and keep the same count per part """
    size = len(parts[0]) if parts else 0
    m1 = max((len(goods) for _, goods in out.values()), default=0) or 1
    block = max(1, math.ceil(eps * size / m1))
    omega = set(omega) | {u for u, (_, goods) in out.items() if max(map(len, goods), default=0) < block}
    chopped = {}
    for u, (residue, goods) in out.items():
        if u in omega:
            continue
        pieces, rest = [], list(residue)
        for s in sorted(goods, key=len, reverse=True):
            whole = len(s) // block
            pieces.extend(s[k * block:(k + 1) * block] for k in range(whole))
            rest.extend(s[whole * block:])
        chopped[u] = (pieces, rest)
    q = min((len(pieces) for pieces, _ in chopped.values()), default=0)
    result = {}
    for u, (pieces, rest) in chopped.items():
        rest = rest + [v for p in pieces[q:] for v in p]
        result[u] = (tuple(sorted(rest)), pieces[:q])
    return omega, result, block


def link_bipartite(h, a):
    """ H_a as a bipartite graph: left and right both V, c ~ b iff abc is an edge """
    edges = set()
    for b, c in h.vertex_links[a]:
        edges.add((b, c))
        edges.add((c, b))
    return BipartiteGraph(h.n, h.n, frozenset(edges))


def _relation_parts(h, alpha):
    if alpha is None:
        return [{(a, b) for a in range(h.n) for b in range(h.n)}]
    alpha = list(alpha)
    if alpha and len(alpha[0]) == 2 and all(isinstance(x, int) for x in alpha[0]):
        alpha = [alpha]
    parts = []
    for rel in alpha:
        rel = {(int(a), int(b)) for a, b in rel}
        if any(not (0 <= a < h.n and 0 <= b < h.n) for a, b in rel):
            raise InvalidInputError("relation pair out of range")
        parts.append(rel)
    return parts


def fiberwise_good_partition(h, alpha=None, eps=Fraction(1, 4), f=None, d=None, threads=None, max_vertices=64):
    """ Partition a relation alpha on V x V so that every fiber of every piece is good in its link graph.

    alpha is a list of disjoint relations (a single relation is accepted too);
    None means V x V as one part. Goodness is re-checked exactly for every
    vertex a whose fiber is nonempty.
    """
    f = _as_schedule(f)
    eps = _check_eps(eps)
    if h.n > max_vertices:
        raise CapExceededError(f"fiberwise partition is capped at {max_vertices} vertices, got {h.n}")
    relations = [rel for rel in _relation_parts(h, alpha) if rel]
    flat = [p for rel in relations for p in rel]
    if len(flat) != len(set(flat)):
        raise InvalidInputError("relation parts overlap")
    graphs = {a: link_bipartite(h, a) for a in range(h.n)}
    sets = []
    for rel in relations:
        fs = {}
        for a, b in rel:
            fs[a] = fs.get(a, 0) | (1 << b)
        sets.append(fs)
    if d is None:
        d = max(pmap(lambda fs: _fs_rank(graphs, fs, RANK_PROBE_CAP), sets, threads), default=0)
    omega, splits = _strong(graphs, sets, d, eps, f, threads)

    def members(fs):
        return tuple(sorted((a, b) for a, m in fs.items() for b in bits(m)))

    parts = [tuple(sorted(rel)) for rel in relations]
    result = StrongPartition('fiberwise', d, eps, _label(f), parts, sorted(omega), {})
    for u, (residue, goods) in sorted(splits.items()):
        result.splits[u] = PartSplit(members(residue), [members(s) for s in goods],
                                     [_fs_level(graphs, s) for s in goods])
    result.checks = _check_strong(result, f)
    logger.info(f"fiberwise: n {h.n}, {len(parts)} parts, d {d}, omega {result.omega}, checks {result.checks}")
    return result


@dataclass
class RemovalPartition:
    d: int
    mu: Fraction
    eps: Fraction
    nodes: tuple
    leaves: tuple
    u_prime: tuple
    w_zero: tuple
    parts: list
    levels: list
    checks: dict = field(default_factory=dict)

    @property
    def achieved_mu(self):
        return max(self.levels, default=Fraction(0))

    def to_json(self):
        return {
            'd': self.d,
            'mu': fraction_json(self.mu),
            'eps': fraction_json(self.eps),
            'u_prime': list(self.u_prime),
            'w_zero': list(self.w_zero),
            'parts': [list(p) for p in self.parts],
            'levels': [fraction_json(v) for v in self.levels],
            'achieved_mu': fraction_json(self.achieved_mu),
            'checks': self.checks,
        }

    def __repr__(self):
        return f"<RemovalPartition: d {self.d}, {len(self.parts)} parts, |U'| {len(self.u_prime)}, |W0| {len(self.w_zero)}>"


class _Steps:
    def __init__(self, limit):
        self.limit = limit
        self.used = 0

    def tick(self):
        self.used += 1
        if self.used > self.limit:
            raise CapExceededError(f"removal partition exceeded {self.limit} steps")


def _tree_density(g, nodes, side, depth):
    count = as_fraction(count_d_trees(g, nodes, bits(side), depth).count)
    return count / (len(nodes) ** (2 ** depth - 1) * popcount(side) ** (2 ** depth))


def _removal(g, nodes, leaves, d, mu, eps, candidates, steps):
    nbrs = g.left_neighbors
    size_w = popcount(leaves)
    if not leaves:
        return set(), 0, []
    if d == 1:
        bad = {u for u in nodes if min(popcount(leaves & nbrs[u]), popcount(leaves & ~nbrs[u])) > mu * size_w}
        return bad, 0, [leaves]
    z, chosen, tail, u_extra = leaves, [], [], set()
    while z:
        steps.tick()
        size_z = popcount(z)
        splitting = [u for u in nodes if min(popcount(z & nbrs[u]), popcount(z & ~nbrs[u])) >= mu * size_z]
        if len(splitting) <= mu * len(nodes):
            # the rest is mu-good against everything outside the few splitters
            u_extra = set(splitting)
            tail.append(z)
            z = 0
            break
        if size_z <= eps * size_w / 2:
            break
        best = None
        for u in splitting[:candidates]:
            for flag, side in ((0, z & nbrs[u]), (1, z & ~nbrs[u])):
                key = (_tree_density(g, nodes, side, d - 1), -popcount(side), u, flag)
                if best is None or key < best[0]:
                    best = (key, side)
        chosen.append(best[1])
        z &= ~best[1]
    u_prime, w_zero, parts = set(u_extra), z, list(tail)
    for piece in chosen:
        u_i, w_i, parts_i = _removal(g, nodes, piece, d - 1, mu, eps, candidates, steps)
        u_prime |= u_i
        w_zero |= w_i
        parts.extend(parts_i)
    return u_prime, w_zero, parts


def tree_removal_partition(g, nodes=None, leaves=None, d=2, mu=Fraction(1, 8), eps=Fraction(1, 4), candidates=16,
                           max_steps=10000):
    """ Almost-partition the leaves into sets mu-good against all nodes outside a small exceptional set U'.

    Each step picks a node splitting the remainder in mu-proportion and
    carves the side with the lower density of (d-1)-trees, then recurses on
    the carves with d-1. Targets |U'| <= mu|U| and |W0| <= eps|W| are
    reported, not enforced.
    """
    if d < 1:
        raise InvalidInputError("tree depth must be at least 1")
    mu, eps = as_fraction(mu), _check_eps(eps)
    if not 0 < mu < 1:
        raise InvalidInputError(f"mu must lie in (0, 1), got {mu}")
    nodes = tuple(sorted(set(range(g.left_size) if nodes is None else nodes)))
    leaves = tuple(sorted(set(range(g.right_size) if leaves is None else leaves)))
    if len(nodes) + len(leaves) > constants.VERTEX_CAP:
        raise CapExceededError(f"{len(nodes) + len(leaves)} vertices above the vertex cap {constants.VERTEX_CAP}")
    u_prime, w_zero, parts = _removal(g, nodes, mask_of(leaves), d, mu, eps, candidates, _Steps(max_steps))
    kept = [(u, g.left_neighbors[u]) for u in nodes if u not in u_prime]
    levels = [_mask_level(kept, p)[0] for p in parts]
    result = RemovalPartition(d, mu, eps, nodes, leaves, tuple(sorted(u_prime)), tuple(bits(w_zero)),
                              [tuple(bits(p)) for p in parts], levels)
    result.checks = {
        'u_prime': len(result.u_prime) <= mu * len(nodes),
        'w_zero': len(result.w_zero) <= eps * len(leaves),
        'goodness': all(v <= mu for v in levels),
    }
    if not all(result.checks.values()):
        logger.warning(f"removal partition missed targets: {result.checks}, achieved mu {result.achieved_mu}")
    logger.info(f"removal partition: d {d}, {len(parts)} parts, |U'| {len(u_prime)}, |W0| {popcount(w_zero)}")
    return result


@dataclass
class SignatureCleanup:
    delta: Fraction
    u_zero: tuple
    w_zero: tuple
    classes: dict
    graph: BipartiteGraph
    defects: dict
    residual: object

    @property
    def max_defect(self):
        return max(self.defects.values(), default=Fraction(0))

    @property
    def passed(self):
        return self.max_defect <= self.delta

    def to_json(self):
        return {
            'delta': fraction_json(self.delta),
            'u_zero': list(self.u_zero),
            'w_zero': list(self.w_zero),
            'classes': {sig: list(us) for sig, us in sorted(self.classes.items())},
            'edges': sorted([list(e) for e in self.graph.edges]),
            'max_defect': fraction_json(self.max_defect),
            'residual_trees': {'count': self.residual.count, 'exact': self.residual.exact,
                               'stderr': self.residual.stderr},
            'passed': self.passed,
        }


def stable_removal_cleanup(g, removal, delta, min_class=None):
    """ Rebuild g as complete/empty blocks between signature classes of kept nodes and the removal parts.

    Classes smaller than min_class (default delta|U| / 2^t for t classes)
    join U0. The per-vertex symmetric difference against g on W* (the union
    of the parts) is measured exactly, as is the residual d-tree count.
    """
    delta = as_fraction(delta)
    if not 0 < delta < 1:
        raise InvalidInputError(f"delta must lie in (0, 1), got {delta}")
    nbrs = g.left_neighbors
    masks = [mask_of(p) for p in removal.parts]
    kept = [u for u in removal.nodes if u not in set(removal.u_prime)]
    failures, signature = {}, {}
    for u in kept:
        sig = []
        for j, (part, mask) in enumerate(zip(removal.parts, masks)):
            inside = popcount(nbrs[u] & mask)
            if inside >= (1 - delta) * len(part):
                sig.append('1')
            elif len(part) - inside >= (1 - delta) * len(part):
                sig.append('0')
            else:
                failures.setdefault(j, []).append(u)
        signature[u] = ''.join(sig)
    if failures:
        detail = '; '.join(f"part {j}: {len(us)} vertices" for j, us in sorted(failures.items()))
        raise PreconditionError(f"parts not {delta}-good against the kept nodes: {detail}")
    classes = {}
    for u in kept:
        classes.setdefault(signature[u], []).append(u)
    if min_class is None:
        min_class = delta * len(removal.nodes) / 2 ** len(classes)
    dropped = {sig for sig, us in classes.items() if len(us) < min_class}
    u_zero = set(removal.u_prime) | {u for sig in dropped for u in classes[sig]}
    classes = {sig: tuple(us) for sig, us in classes.items() if sig not in dropped}
    w_star = 0
    for mask in masks:
        w_star |= mask
    edges, defects = set(), {}
    for sig, us in classes.items():
        block = 0
        for bit, mask in zip(sig, masks):
            if bit == '1':
                block |= mask
        for u in us:
            edges.update((u, w) for w in bits(block))
            defects[u] = Fraction(popcount((nbrs[u] ^ block) & w_star), popcount(w_star)) if w_star else Fraction(0)
    rebuilt = BipartiteGraph(g.left_size, g.right_size, frozenset(edges))
    kept_nodes = sorted(u for us in classes.values() for u in us)
    residual = count_d_trees(rebuilt, kept_nodes, bits(w_star), removal.d)
    result = SignatureCleanup(delta, tuple(sorted(u_zero)), removal.w_zero, classes, rebuilt, defects, residual)
    logger.info(f"signature cleanup: {len(classes)} classes, |U0| {len(u_zero)}, max defect {result.max_defect}, "
                f"residual {removal.d}-trees {residual.count}")
    return result
