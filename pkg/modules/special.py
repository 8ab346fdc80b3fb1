"""Special 3-graphs: part metrics, the nine axioms, GS/HP splitting witnesses and irregularity finders.

A SpecialInstance is a 3-partite 3-graph stored as a boolean tensor over
part-local indices, with one MetricPart per part. Metric tables hold
distances times a common integer scale, so every distance and radius
comparison below is exact.

Radii. A ball B_r(x) = {y : d(x, y) < r} sees r only through the distances
the metric realises. Quantified radii are drawn from {rho 2^i} together with
the realised distances, and bounds that scale with r are evaluated at the
effective radius: the least realised distance >= r, which induces the same
balls.

Axioms 5-8 are existence statements; they are checked by running the
constructive witness for each quantified tuple and re-verifying its output.
Inside an axiom check, a literal GS/HP formula whose certificate fails is
replaced by an exhaustive search over the third part, and the witness
records where it came from.
"""
import math
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from fractions import Fraction
from itertools import combinations, permutations, product
from threading import Lock

import numpy as np
from cachetools import LRUCache, cached

import constants
from modules.construct import FamilySpec, gs_a_set, gs_digits, gs_number, hbar
from modules.core import ThreeGraph, VertexPartition
from modules.helpers import (CapExceededError, InvalidInputError, PreconditionError, VerificationError, as_fraction,
                             fraction_json, get_logger, mask_of, pmap, rng_for, warn_once)

logger = get_logger(__name__)

AXIOMS = tuple(range(1, 10))
# c in d(f0, f1) <= c r
SPLIT_DISTANCE_FACTOR = {constants.GS: 3, constants.HP: 7}
HBAR_SCAN_MAX_N = 30
MAX_REPORTED_FAILURES = 5
EDGE_SIDE_X = 'x'
EDGE_SIDE_X_PRIME = 'x_prime'
_SKIP = object()


def _jsonable(value):
    if isinstance(value, Fraction):
        return fraction_json(value)
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (set, frozenset)):
        return [_jsonable(v) for v in sorted(value)]
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


# -- metrics --------------------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MetricPart:
    """ One part of a special instance: an exact distance table plus the distinguished balls.

    vertices[k] is the host vertex of local index k; dist holds distances
    times scale. X_sm = B_{r_sm}(x_sm) and X_lg = B_{r_lg}(x_lg); the plus
    sets widen both radii by mu^2. line marks a metric realised on the unit
    line at k / scale, ultra an ultrametric.
    """
    part: int
    vertices: tuple
    dist: np.ndarray
    scale: int
    x_sm: int
    r_sm: Fraction
    x_lg: int
    r_lg: Fraction
    mu: Fraction
    line: bool = False
    ultra: bool = False

    def __post_init__(self):
        dist = np.asarray(self.dist, dtype=np.int64)
        object.__setattr__(self, 'dist', dist)
        object.__setattr__(self, 'vertices', tuple(int(v) for v in self.vertices))
        for name in ('r_sm', 'r_lg', 'mu'):
            object.__setattr__(self, name, as_fraction(getattr(self, name)))
        n = len(self.vertices)
        if n == 0:
            raise InvalidInputError(f"part {self.part}: empty metric")
        if dist.shape != (n, n):
            raise InvalidInputError(f"part {self.part}: distance table is {dist.shape}, expected {(n, n)}")
        if self.scale < 1:
            raise InvalidInputError(f"part {self.part}: scale must be positive")
        bad = np.argwhere((dist < 0) | (dist > self.scale))
        if len(bad):
            u, v = bad[0]
            raise InvalidInputError(f"part {self.part}: d({u}, {v}) outside [0, 1]")
        bad = np.argwhere(dist != dist.T)
        if len(bad):
            u, v = bad[0]
            raise InvalidInputError(f"part {self.part}: d({u}, {v}) = {self.distance(u, v)} "
                                    f"but d({v}, {u}) = {self.distance(v, u)}")
        bad = np.argwhere((dist == 0) != np.eye(n, dtype=bool))
        if len(bad):
            u, v = bad[0]
            raise InvalidInputError(f"part {self.part}: d({u}, {v}) = {self.distance(u, v)} breaks identity")
        for z in range(n):
            bad = np.argwhere(dist > dist[:, [z]] + dist[[z], :])
            if len(bad):
                u, v = bad[0]
                raise InvalidInputError(f"part {self.part}: triangle inequality fails for ({u}, {v}) through {z}")
            if self.ultra:
                bad = np.argwhere(dist > np.maximum(dist[:, [z]], dist[[z], :]))
                if len(bad):
                    u, v = bad[0]
                    raise InvalidInputError(f"part {self.part}: ultrametric inequality fails for ({u}, {v}) "
                                            f"through {z}")
        for name, x, r in (('x_sm', self.x_sm, self.r_sm), ('x_lg', self.x_lg, self.r_lg)):
            if not 0 <= x < n:
                raise InvalidInputError(f"part {self.part}: {name} = {x} out of range")
            if r <= 0:
                raise InvalidInputError(f"part {self.part}: radius at {name} must be positive")

    @property
    def size(self):
        return len(self.vertices)

    @cached_property
    def index(self):
        return {v: k for k, v in enumerate(self.vertices)}

    def distance(self, u, v):
        return Fraction(int(self.dist[u, v]), self.scale)

    def ball(self, center, r):
        """ Local indices of the open ball B_r(center), ascending """
        r = as_fraction(r)
        inside = self.dist[center] * r.denominator < r.numerator * self.scale
        return tuple(int(k) for k in np.flatnonzero(inside))

    def closed_ball(self, center, r):
        r = as_fraction(r)
        inside = self.dist[center] * r.denominator <= r.numerator * self.scale
        return tuple(int(k) for k in np.flatnonzero(inside))

    @cached_property
    def sm(self):
        return frozenset(self.ball(self.x_sm, self.r_sm))

    @cached_property
    def sm_plus(self):
        return frozenset(self.ball(self.x_sm, self.r_sm + self.mu ** 2))

    @cached_property
    def lg(self):
        return frozenset(self.ball(self.x_lg, self.r_lg))

    @cached_property
    def lg_plus(self):
        return frozenset(self.ball(self.x_lg, self.r_lg + self.mu ** 2))

    @cached_property
    def realized(self):
        """ Distinct positive distances, ascending """
        return tuple(Fraction(int(v), self.scale) for v in np.unique(self.dist[self.dist > 0]))

    def effective_radius(self, r):
        r = as_fraction(r)
        for d in self.realized:
            if d >= r:
                return d
        return r

    def enclosing_ball(self, members):
        """ (centre, radius) of a least closed ball containing members.

        On a line metric the centre is a local position, possibly a half
        index; otherwise it is the best local vertex. The empty set gets
        radius 0 at 0.
        """
        members = sorted(members)
        if not members:
            return Fraction(0), Fraction(0)
        if self.line:
            lo, hi = members[0], members[-1]
            return Fraction(lo + hi, 2), Fraction(int(self.dist[lo, hi]), 2 * self.scale)
        far = self.dist[:, members].max(axis=1)
        c = int(np.argmin(far))
        return Fraction(c), Fraction(int(far[c]), self.scale)

    def to_json(self):
        return {
            'part': self.part,
            'size': self.size,
            'x_sm': self.x_sm,
            'r_sm': fraction_json(self.r_sm),
            'x_lg': self.x_lg,
            'r_lg': fraction_json(self.r_lg),
            'mu': fraction_json(self.mu),
            'sizes': {'sm': len(self.sm), 'sm_plus': len(self.sm_plus), 'lg': len(self.lg),
                      'lg_plus': len(self.lg_plus)},
        }

    def __repr__(self):
        return f"<MetricPart: part {self.part}, size {self.size}, line {self.line}, ultra {self.ultra}>"


def _common_prefix(x, y):
    lam = 0
    while lam < len(x) and x[lam] == y[lam]:
        lam += 1
    return lam


def gs_distance(x, y, p):
    """ p^-lambda for digit tuples, lambda the length of the common prefix; 0 when x == y """
    if tuple(x) == tuple(y):
        return Fraction(0)
    return Fraction(1, p ** _common_prefix(x, y))


def _gs_digit_table(p, n):
    return np.array([gs_digits(x, p, n) for x in range(p ** n)], dtype=np.int64).reshape(p ** n, n)


def gs_metric(p, n):
    FamilySpec(constants.GS, p=p, n=n).validate()
    size = p ** n
    if 3 * size > constants.VERTEX_CAP:
        raise CapExceededError(f"GS({p}, {n}) metric needs {3 * size} vertices, above the cap {constants.VERTEX_CAP}")
    digits = _gs_digit_table(p, n)
    same = digits[:, None, :] == digits[None, :, :]
    lam = np.cumprod(same, axis=2).sum(axis=2)
    dist = np.where(lam == n, 0, np.power(p, n - lam))
    mu = Fraction(1, p * p)
    # B_{1 - mu^2} and its mu^2 widening are both the first-coordinate coset
    radius = 1 - mu ** 2
    x_lg = p ** (n - 1)
    x_sm = p ** (n - 2) if n >= 2 else 0
    return tuple(MetricPart(part, range(part * size, (part + 1) * size), dist, size, x_sm, radius, x_lg, radius, mu,
                            ultra=True)
                 for part in range(3))


def hp_metric(N, tau, mu):
    tau, mu = as_fraction(tau), as_fraction(mu)
    if not 0 < tau < Fraction(1, 4):
        raise PreconditionError(f"need 0 < tau < 1/4, got tau {tau}")
    if not 0 < mu < tau / 3:
        raise PreconditionError(f"need 0 < mu < tau/3, got mu {mu} with tau {tau}")
    if N < 2:
        raise InvalidInputError(f"HP metric needs N >= 2, got {N}")
    if 3 * N > constants.VERTEX_CAP:
        raise CapExceededError(f"HP({N}) metric needs {3 * N} vertices, above the cap {constants.VERTEX_CAP}")
    x_lg = N // 2
    x_sm = math.floor(3 * mu * N / 2)
    if x_sm < 1:
        raise PreconditionError(f"N = {N} too small for mu = {mu}: floor(3 mu N / 2) is 0")
    idx = np.arange(N)
    dist = np.abs(idx[:, None] - idx[None, :])
    return tuple(MetricPart(part, range(part * N, (part + 1) * N), dist, N, x_sm - 1, mu / 2, x_lg - 1,
                            (1 - tau) / 2, mu, line=True)
                 for part in range(3))


# -- instances ------------------------------------------------------------------------------------

@dataclass(frozen=True)
class SpecialParams:
    p: int
    mu: Fraction
    tau: Fraction
    alpha: Fraction
    rho: Fraction

    def __post_init__(self):
        for name in ('mu', 'tau', 'alpha', 'rho'):
            object.__setattr__(self, name, as_fraction(getattr(self, name)))
        if self.p < 2:
            raise InvalidInputError(f"p must be at least 2, got {self.p}")
        if self.rho <= 0:
            raise InvalidInputError(f"rho must be positive, got {self.rho}")

    def to_json(self):
        return {'p': self.p, 'mu': fraction_json(self.mu), 'tau': fraction_json(self.tau),
                'alpha': fraction_json(self.alpha), 'rho': fraction_json(self.rho)}


def _check_tensor_cap(sizes, family):
    cells = math.prod(sizes)
    if cells > constants.SPECIAL_TENSOR_CAP:
        raise CapExceededError(f"{family} instance needs {cells} adjacency cells, "
                               f"above the cap {constants.SPECIAL_TENSOR_CAP}")


@dataclass(frozen=True, eq=False)
class SpecialInstance:
    """ tensor[a, b, c] is True iff the vertices with local indices a, b, c of parts 0, 1, 2 form an edge """
    family: str
    metrics: tuple
    params: SpecialParams
    tensor: np.ndarray
    shape: dict = field(default_factory=dict)

    def __post_init__(self):
        metrics = tuple(self.metrics)
        if len(metrics) != 3:
            raise InvalidInputError("a special instance needs one metric per part")
        if [m.part for m in metrics] != [0, 1, 2]:
            raise InvalidInputError("metrics must be given for parts 0, 1, 2 in order")
        object.__setattr__(self, 'metrics', metrics)
        tensor = np.asarray(self.tensor, dtype=bool)
        sizes = tuple(m.size for m in metrics)
        if tensor.shape != sizes:
            raise InvalidInputError(f"adjacency tensor is {tensor.shape}, metrics give {sizes}")
        object.__setattr__(self, 'tensor', tensor)
        seen = set()
        for m in metrics:
            if seen & set(m.vertices):
                raise InvalidInputError(f"part {m.part} shares vertices with an earlier part")
            seen |= set(m.vertices)
        if seen != set(range(len(seen))):
            raise InvalidInputError("instance vertices must be 0..n-1")

    @classmethod
    def from_graph(cls, family, g, metrics, params, shape=None):
        if g.partition is None:
            raise InvalidInputError("a special instance needs a 3-partitioned 3-graph")
        metrics = tuple(metrics)
        if len(metrics) != 3:
            raise InvalidInputError("a special instance needs one metric per part")
        for i, (m, part) in enumerate(zip(metrics, g.partition)):
            if set(m.vertices) != set(part):
                raise InvalidInputError(f"metric {i} does not cover part {i} of the 3-graph")
        sizes = tuple(m.size for m in metrics)
        _check_tensor_cap(sizes, family)
        where = {v: (i, k) for i, m in enumerate(metrics) for k, v in enumerate(m.vertices)}
        tensor = np.zeros(sizes, dtype=bool)
        for e in g.edges:
            spot = [0, 0, 0]
            for v in e:
                part, k = where[v]
                spot[part] = k
            tensor[tuple(spot)] = True
        return cls(family, metrics, params, tensor, dict(shape or {}))

    @cached_property
    def graph(self):
        vertices = [m.vertices for m in self.metrics]
        edges = frozenset((vertices[0][a], vertices[1][b], vertices[2][c]) for a, b, c in np.argwhere(self.tensor))
        return ThreeGraph(sum(m.size for m in self.metrics), edges, tuple(vertices))

    @cached_property
    def _where(self):
        return {v: (i, k) for i, m in enumerate(self.metrics) for k, v in enumerate(m.vertices)}

    def local(self, v):
        """ (part, local index) of host vertex v """
        if v not in self._where:
            raise InvalidInputError(f"vertex {v} is not in the instance")
        return self._where[v]

    def part_of(self, v):
        return self.local(v)[0]

    def oriented(self, px, py, pz):
        """ Tensor view with axes in the order (px, py, pz) """
        return np.transpose(self.tensor, (px, py, pz))

    @cached_property
    def degrees(self):
        t = self.tensor
        return t.sum(axis=(1, 2)), t.sum(axis=(0, 2)), t.sum(axis=(0, 1))

    @cached_property
    def realized(self):
        return tuple(sorted(set().union(*(m.realized for m in self.metrics))))

    def effective_radius(self, r):
        r = as_fraction(r)
        for d in self.realized:
            if d >= r:
                return d
        return r

    def to_json(self):
        return {'family': self.family, 'shape': _jsonable(self.shape), 'params': self.params.to_json(),
                'metrics': [m.to_json() for m in self.metrics], 'edges': int(self.tensor.sum())}

    def __repr__(self):
        return f"<SpecialInstance: {self.family} {self.shape}, edges {int(self.tensor.sum())}>"


def gs_tensor(p, n):
    """ x + y + z in A(p, n), over local indices """
    size = p ** n
    _check_tensor_cap((size, size, size), constants.GS)
    digits = _gs_digit_table(p, n)
    weights = p ** np.arange(n - 1, -1, -1, dtype=np.int64)
    add = ((digits[:, None, :] + digits[None, :, :]) % p) @ weights
    in_a = np.zeros(size, dtype=bool)
    in_a[gs_a_set(p, n)] = True
    return in_a[add[add[:, :, None], np.arange(size)[None, None, :]]]


def hp_tensor(N):
    """ i + j + k >= N + 2 over 1-based indices """
    _check_tensor_cap((N, N, N), constants.HP)
    s = np.arange(1, N + 1)
    return s[:, None, None] + s[None, :, None] + s[None, None, :] >= N + 2


def gs_instance(p, n, rho=None):
    """ GS_p(n) with its prefix metric, parameters (p, 1/p^2, 1/p^2, 1/(2(p-1)), rho) """
    metrics = gs_metric(p, n)
    rho = Fraction(1, p ** (n + 1)) if rho is None else as_fraction(rho)
    params = SpecialParams(p, Fraction(1, p * p), Fraction(1, p * p), Fraction(1, 2 * (p - 1)), rho)
    return SpecialInstance(constants.GS, metrics, params, gs_tensor(p, n), {'p': p, 'n': n})


def hp_instance(N, tau, mu, rho=None, p=3):
    """ HP(N) with the linear metric, parameters (p, mu, 1 - tau, mu^2, rho) """
    tau, mu = as_fraction(tau), as_fraction(mu)
    metrics = hp_metric(N, tau, mu)
    rho = mu ** 3 / 2 if rho is None else as_fraction(rho)
    warn_once('hp-alpha', "HP alpha is taken as mu^2 from the special-instance statement; "
                          "the degree count gives mu tau N^2 / 4 instead")
    params = SpecialParams(p, mu, 1 - tau, mu ** 2, rho)
    return SpecialInstance(constants.HP, metrics, params, hp_tensor(N), {'N': N, 'tau': tau, 'mu': mu})


def build_instance(family, values):
    """ family 'gs' or 'hp'; values a dict parsed from --params """
    family = family.upper()
    try:
        if family == constants.GS:
            return gs_instance(int(values['p']), int(values['n']), values.get('rho'))
        if family == constants.HP:
            return hp_instance(int(values['N']), values['tau'], values['mu'], values.get('rho'),
                               int(values.get('p', 3)))
    except KeyError as e:
        raise InvalidInputError(f"{family} needs parameter {e.args[0]}")
    except (ValueError, ZeroDivisionError) as e:
        raise InvalidInputError(f"bad {family} parameter: {e}")
    raise InvalidInputError(f"special instances exist for GS and HP, not {family!r}")


# -- ball partitions and covers -------------------------------------------------------------------

@dataclass(eq=False)
class BallFamily:
    """ Disjoint open balls (centre, radius) inside region, centres as local indices """
    metric: MetricPart
    region: frozenset
    balls: list

    @property
    def m(self):
        return len(self.balls)

    @cached_property
    def members(self):
        return [frozenset(self.metric.ball(c, r)) for c, r in self.balls]

    def defect(self, low, high):
        """ First violated condition: radii in [low, high], disjoint, inside region, <= 2m uncovered """
        seen = set()
        for (c, r), members in zip(self.balls, self.members):
            if not low <= r <= high:
                return {'ball': (c, r), 'failed': 'radius outside [r/3, r]'}
            if seen & members:
                return {'ball': (c, r), 'failed': 'balls overlap'}
            if not members <= self.region:
                return {'ball': (c, r), 'failed': 'ball leaves the region'}
            seen |= members
        uncovered = len(self.region - seen)
        if uncovered > 2 * self.m:
            return {'uncovered': uncovered, 'm': self.m, 'failed': 'more than 2m points uncovered'}
        return None

    def uncovered_in(self, target, centres):
        """ Points of target missed by the balls whose centres lie in centres """
        covered = set()
        for (c, _), members in zip(self.balls, self.members):
            if c in centres:
                covered |= members
        return len(set(target) - covered)

    def to_json(self):
        return {'part': self.metric.part, 'region': len(self.region), 'm': self.m,
                'balls': [[c, fraction_json(r)] for c, r in self.balls]}


def _ultra_classes(metric, region, r, first=None):
    """ Classes of d < r inside region, each as the ball around its lowest member (first goes first) """
    order = ([first] if first is not None else []) + sorted(region)
    balls, taken = [], set()
    for c in order:
        if c in taken:
            continue
        balls.append((c, r))
        taken |= set(metric.ball(c, r))
    return balls


def _tile(metric, start, end, r):
    """ Contiguous odd-width balls over [start, end]; fewer than 2m points left over at the end """
    length = end - start + 1
    if length <= 0:
        return []
    k_max = max(1, math.ceil(r * metric.scale))
    m = -(-length // (2 * k_max - 1))
    width = length // m
    if width % 2 == 0:
        width -= 1
    k = (width + 1) // 2
    radius = min(r, Fraction(k, metric.scale))
    return [(start + i * width + k - 1, radius) for i in range(m)]


def gs_ball_partition(metric, x, r):
    everything = frozenset(range(metric.size))
    return BallFamily(metric, everything, _ultra_classes(metric, everything, as_fraction(r), first=x))


def gs_ball_cover(metric, center, r2, r1):
    region = frozenset(metric.ball(center, r2))
    return BallFamily(metric, region, _ultra_classes(metric, region, as_fraction(r1)))


def hp_ball_partition(metric, x, r):
    r = as_fraction(r)
    own = metric.ball(x, r)
    balls = [(x, r)] + _tile(metric, 0, own[0] - 1, r) + _tile(metric, own[-1] + 1, metric.size - 1, r)
    return BallFamily(metric, frozenset(range(metric.size)), balls)


def hp_ball_cover(metric, center, r2, r1):
    region = metric.ball(center, r2)
    return BallFamily(metric, frozenset(region), _tile(metric, region[0], region[-1], as_fraction(r1)))


def ball_partition(metric, x, r):
    if metric.ultra:
        return gs_ball_partition(metric, x, r)
    if metric.line:
        return hp_ball_partition(metric, x, r)
    raise PreconditionError(f"no ball partition construction for part {metric.part}: neither line nor ultrametric")


def ball_cover(metric, center, r2, r1):
    if metric.ultra:
        return gs_ball_cover(metric, center, r2, r1)
    if metric.line:
        return hp_ball_cover(metric, center, r2, r1)
    raise PreconditionError(f"no ball cover construction for part {metric.part}: neither line nor ultrametric")


# -- neighbourhood intersections ------------------------------------------------------------------

@dataclass
class IntersectionBall:
    """ members are host vertices; center is a local position in the part """
    part: int
    members: tuple
    center: Fraction
    radius: Fraction
    bound: Fraction

    @property
    def holds(self):
        return self.radius <= self.bound

    def to_json(self):
        return {'part': self.part, 'members': list(self.members), 'center': fraction_json(self.center),
                'radius': fraction_json(self.radius), 'bound': fraction_json(self.bound), 'holds': self.holds}


def _third(pa, pb):
    return 3 - pa - pb


def _intersection(instance, px, py, pz, y, z, z_prime):
    t = instance.oriented(px, py, pz)
    members = np.flatnonzero(t[:, y, z] & ~t[:, y, z_prime])
    center, radius = instance.metrics[px].enclosing_ball(members.tolist())
    return members, center, radius


def neighborhood_intersection_ball(instance, y, z, z_prime):
    """ Least closed ball around N(y, z) minus N(y, z'), compared with d(z, z') """
    py, ly = instance.local(y)
    pz, lz = instance.local(z)
    pz2, lz2 = instance.local(z_prime)
    if py == pz or pz2 != pz:
        raise InvalidInputError("y must lie in one part and z, z' together in another")
    px = _third(py, pz)
    members, center, radius = _intersection(instance, px, py, pz, ly, lz, lz2)
    mx = instance.metrics[px]
    return IntersectionBall(px, tuple(mx.vertices[k] for k in members), center, radius,
                            instance.metrics[pz].distance(lz, lz2))


# -- splitting witnesses --------------------------------------------------------------------------

def _block_defect(g, xs, ys, zs, edge):
    """ First (x, y) whose link breaks an all-edge (edge=True) or edge-free block over zs, on a ThreeGraph """
    zmask = mask_of(zs)
    for a in xs:
        for b in ys:
            link = g.link(a, b) & zmask
            if (link != zmask) if edge else link:
                return a, b
    return None


def _block_holds(t, xs, ys, zs, edge):
    """ K3[xs, ys, zs] all edges (edge=True) or edge-free, on an oriented tensor """
    sub = t[np.ix_(list(xs), list(ys), list(zs))]
    return bool(sub.all()) if edge else not sub.any()


def _search_third(mz, full, empty, rz):
    """ Local centres f whose ball B_rz(f) sits inside the all-edge (full) / edge-free (empty) columns """
    ones, zeros = [], []
    for f in range(mz.size):
        ball = list(mz.ball(f, rz))
        if full[ball].all():
            ones.append(f)
        if empty[ball].all():
            zeros.append(f)
    return ones, zeros


@dataclass
class SplitWitness:
    x: int
    y: int
    r: Fraction
    f0: int
    f1: int
    certified: bool
    distance: Fraction
    bound: Fraction
    source: str = constants.FROM_FORMULA

    @property
    def within_bound(self):
        return self.distance <= self.bound

    def to_json(self):
        return {'x': self.x, 'y': self.y, 'r': fraction_json(self.r), 'f0': self.f0, 'f1': self.f1,
                'certified': self.certified, 'distance': fraction_json(self.distance),
                'bound': fraction_json(self.bound), 'within_bound': self.within_bound, 'source': self.source}


def _gs_level(r_hat, p, n):
    """ m with p^-m the effective radius, capped at n - 1 """
    m = 0
    while m < n - 1 and Fraction(1, p ** (m + 1)) >= r_hat:
        m += 1
    return m


def _gs_split_formula(instance, x, y, r_hat):
    p, n = instance.shape['p'], instance.shape['n']
    gx, gy = gs_digits(x, p, n), gs_digits(y, p, n)
    s = min(_gs_level(r_hat, p, n), _common_prefix(gx, gy), n - 1)
    base = [(-(a + b)) % p for a, b in zip(gx[:s + 1], gy[:s + 1])] + [0] * (n - s - 1)
    f1, f0 = list(base), list(base)
    f1[s] = (f1[s] + 1) % p
    f0[s] = (f0[s] + 2) % p
    return gs_number(f0, p), gs_number(f1, p)


def _hp_split_formula(instance, x, y, r):
    N = instance.shape['N']
    i, j = x + 1, y + 1
    d1 = math.ceil(r * N)
    return N + 2 - i - j - 3 * d1 - 1, N + 2 - i - j + 3 * d1 - 1


def _split_local(instance, px, py, x, y, r, fallback):
    """ (f0, f1, certified, source) over local indices of the third part, or None when nothing splits """
    pz = _third(px, py)
    mx, my, mz = (instance.metrics[p] for p in (px, py, pz))
    t = instance.oriented(px, py, pz)
    bx, by = mx.ball(x, r), my.ball(y, r)
    rz = r if instance.family == constants.GS else r / 2
    if instance.family == constants.GS:
        f0, f1 = _gs_split_formula(instance, x, y, instance.effective_radius(r))
    else:
        f0, f1 = _hp_split_formula(instance, x, y, r)
    in_range = 0 <= f0 < mz.size and 0 <= f1 < mz.size
    if in_range and _block_holds(t, bx, by, mz.ball(f1, rz), True) and \
            _block_holds(t, bx, by, mz.ball(f0, rz), False):
        return f0, f1, True, constants.FROM_FORMULA
    if not fallback:
        if not in_range:
            raise VerificationError(f"{instance.family} split formula leaves the part: f0 = {f0 + 1}, f1 = {f1 + 1}")
        return f0, f1, False, constants.FROM_FORMULA
    sub = t[np.ix_(list(bx), list(by))]
    ones, zeros = _search_third(mz, sub.all(axis=(0, 1)), ~sub.any(axis=(0, 1)), rz)
    if not ones or not zeros:
        return None
    d = mz.dist[np.ix_(zeros, ones)]
    a, b = np.unravel_index(int(np.argmin(d)), d.shape)
    return zeros[a], ones[b], True, constants.FROM_SEARCH


def _check_split_pre(instance, px, py, x, y, r):
    if instance.family == constants.HP:
        if x not in instance.metrics[px].lg_plus:
            raise PreconditionError(f"x (local {x}) is not in X_lg+")
        if y not in instance.metrics[py].sm_plus:
            raise PreconditionError(f"y (local {y}) is not in Y_sm+")
        if not r < instance.params.mu ** 2:
            warn_once('hp-split-radius', "HP split witness requested with r >= mu^2; the formula is certified "
                                         "block by block instead")
    if not 0 < r <= 1:
        raise PreconditionError(f"need 0 < r <= 1, got {r}")


def split_witness(instance, x, y, r, fallback=False):
    """ f0, f1 in the third part with K3[B(f1), B_r(x), B_r(y)] all edges and K3[B(f0), ...] edge-free.

    The f-balls have radius r for GS and r/2 for HP. distance is d(f0, f1),
    bound the family constant times the effective radius.
    """
    r = as_fraction(r)
    px, lx = instance.local(x)
    py, ly = instance.local(y)
    if px == py:
        raise InvalidInputError("x and y must lie in different parts")
    _check_split_pre(instance, px, py, lx, ly, r)
    found = _split_local(instance, px, py, lx, ly, r, fallback)
    if found is None:
        raise VerificationError(f"no splitting pair exists for x={x}, y={y}, r={r}")
    f0, f1, certified, source = found
    mz = instance.metrics[_third(px, py)]
    bound = SPLIT_DISTANCE_FACTOR.get(instance.family, 3) * instance.effective_radius(r)
    witness = SplitWitness(x, y, r, mz.vertices[f0], mz.vertices[f1], certified, mz.distance(f0, f1), bound, source)
    logger.info(f"split witness x={x} y={y} r={r}: f0={witness.f0} f1={witness.f1} certified {certified} "
                f"source {source}")
    return witness


@dataclass
class PairSplitWitness:
    x: int
    x_prime: int
    y: int
    z: int
    edge_side: str
    radii: tuple
    certified: bool
    source: str = constants.FROM_FORMULA

    def to_json(self):
        return {'x': self.x, 'x_prime': self.x_prime, 'y': self.y, 'z': self.z, 'edge_side': self.edge_side,
                'radii': None if self.radii is None else [fraction_json(r) for r in self.radii],
                'certified': self.certified, 'source': self.source}


def _gs_pair_formula(instance, x, x2, y):
    p, n = instance.shape['p'], instance.shape['n']
    gx, gx2, gy = gs_digits(x, p, n), gs_digits(x2, p, n), gs_digits(y, p, n)
    m = _common_prefix(gx, gx2)
    a, b = (gx[m] + gy[m]) % p, (gx2[m] + gy[m]) % p
    lo, hi = sorted((a, b))
    if lo == 0 and hi == p - 1:
        shift = 2
    elif lo == 0:
        shift = 1
    else:
        shift = (1 - lo) % p
    h = [(-(u + v)) % p for u, v in zip(gx[:m], gy[:m])] + [shift] + [0] * (n - m - 1)
    side = EDGE_SIDE_X if (a + shift) % p == 1 else EDGE_SIDE_X_PRIME
    return gs_number(h, p), side


def _hp_pair_formula(instance, x, x2, y, radii):
    N, tau, mu = instance.shape['N'], instance.shape['tau'], instance.shape['mu']
    i, i2, j = x + 1, x2 + 1, y + 1
    r, r2, _ = radii
    r0 = min(radii) / 3
    lower, upper = (tau - mu ** 2) * N, (1 - tau + mu ** 2) * N
    if lower < i2 < upper and i <= i2:
        return N + 2 - i2 - j + math.ceil(r2 * N) + math.ceil(r0 * N) - 1, EDGE_SIDE_X_PRIME
    if i2 < upper:
        return N + 2 - i - j + math.ceil(r * N) + math.ceil(r0 * N) - 1, EDGE_SIDE_X
    return N + 2 - i - j - math.ceil(r * N) - math.ceil(r0 * N) - 1, EDGE_SIDE_X_PRIME


def _pair_radii(instance, px, x, x2, radii):
    """ (rx, rx', ry, rz): ball radii at x, x', y and z """
    if radii is None:
        d = instance.metrics[px].distance(x, x2)
        return d, d, d, d
    r, r2, _ = radii
    r0 = min(radii) / 3
    return r, r2, r0 / 2, r0 / 2


def _pair_local(instance, px, py, x, x2, y, radii, fallback):
    """ (z, edge side, certified, source) over local indices, or None when no z splits the pair """
    pz = _third(px, py)
    mx, my, mz = (instance.metrics[p] for p in (px, py, pz))
    t = instance.oriented(px, py, pz)
    rx, rx2, ry, rz = _pair_radii(instance, px, x, x2, radii)
    bx, bx2, by = mx.ball(x, rx), mx.ball(x2, rx2), my.ball(y, ry)
    if instance.family == constants.GS:
        z, side = _gs_pair_formula(instance, x, x2, y)
    else:
        z, side = _hp_pair_formula(instance, x, x2, y, radii)

    def holds(z, side):
        bz = mz.ball(z, rz)
        edge_block, empty_block = (bx, bx2) if side == EDGE_SIDE_X else (bx2, bx)
        return _block_holds(t, edge_block, by, bz, True) and _block_holds(t, empty_block, by, bz, False)

    in_range = 0 <= z < mz.size
    if in_range and holds(z, side):
        return z, side, True, constants.FROM_FORMULA
    if not fallback:
        if not in_range:
            raise VerificationError(f"{instance.family} pair-split formula leaves the part: z = {z + 1}")
        return z, side, False, constants.FROM_FORMULA
    sub_x, sub_x2 = t[np.ix_(list(bx), list(by))], t[np.ix_(list(bx2), list(by))]
    full_x, empty_x = sub_x.all(axis=(0, 1)), ~sub_x.any(axis=(0, 1))
    full_x2, empty_x2 = sub_x2.all(axis=(0, 1)), ~sub_x2.any(axis=(0, 1))
    for z in range(mz.size):
        ball = list(mz.ball(z, rz))
        if full_x[ball].all() and empty_x2[ball].all():
            return z, EDGE_SIDE_X, True, constants.FROM_SEARCH
        if full_x2[ball].all() and empty_x[ball].all():
            return z, EDGE_SIDE_X_PRIME, True, constants.FROM_SEARCH
    return None


def _check_pair_pre(instance, px, x, x2, radii):
    mx = instance.metrics[px]
    d = mx.distance(x, x2)
    if d <= 0:
        raise PreconditionError("need d(x, x') > 0")
    if radii is None:
        if instance.family == constants.HP:
            raise PreconditionError("HP pair splitting needs radii (r, r', r'')")
        return None
    radii = tuple(as_fraction(r) for r in radii)
    if len(radii) != 3 or min(radii) <= 0:
        raise PreconditionError("radii must be three positive numbers (r, r', r'')")
    r, r2, r3 = radii
    if d != r + r2 + r3:
        raise PreconditionError(f"d(x, x') = r + r' + r'' fails: {d} != {r + r2 + r3}")
    if not r3 > 2 * max(r, r2):
        raise PreconditionError(f"r'' > 2 max(r, r') fails: r'' = {r3}, r = {r}, r' = {r2}")
    if instance.family == constants.HP:
        if x not in mx.lg_plus:
            raise PreconditionError(f"x (local {x}) is not in X_lg+")
        if not max(r, r2) < instance.params.mu ** 2:
            raise PreconditionError(f"r, r' < mu^2 fails: r = {r}, r' = {r2}, mu^2 = {instance.params.mu ** 2}")
    return radii


def pair_split_witness(instance, x, x_prime, y, radii=None, fallback=False):
    """ z splitting B(x) from B(x') against B(y): one block all edges, the other edge-free.

    Without radii (GS only) every ball has radius d(x, x'); with radii
    (r, r', r'') the balls are B_r(x), B_r'(x') and B_{r0/2}(y), B_{r0/2}(z)
    with r0 = min(r, r', r'') / 3.
    """
    px, lx = instance.local(x)
    px2, lx2 = instance.local(x_prime)
    py, ly = instance.local(y)
    if px != px2 or px == py:
        raise InvalidInputError("x and x' must share a part and y must lie in another")
    radii = _check_pair_pre(instance, px, lx, lx2, radii)
    if instance.family == constants.HP and ly not in instance.metrics[py].sm:
        raise PreconditionError(f"y (local {ly}) is not in Y_sm")
    found = _pair_local(instance, px, py, lx, lx2, ly, radii, fallback)
    if found is None:
        raise VerificationError(f"no z splits x={x}, x'={x_prime} against y={y}")
    z, side, certified, source = found
    mz = instance.metrics[_third(px, py)]
    witness = PairSplitWitness(x, x_prime, y, mz.vertices[z], side, radii, certified, source)
    logger.info(f"pair split x={x} x'={x_prime} y={y}: z={witness.z} edge side {side} certified {certified}")
    return witness


# -- axiom verification ---------------------------------------------------------------------------

@dataclass
class AxiomReport:
    axiom: int
    passed: bool
    mode: str
    checked: int
    domain: int
    failures: list = field(default_factory=list)
    witness: dict = None
    notes: list = field(default_factory=list)

    def to_json(self):
        return {'axiom': self.axiom, 'passed': self.passed, 'mode': self.mode, 'checked': self.checked,
                'domain': self.domain, 'failures': _jsonable(self.failures), 'witness': _jsonable(self.witness),
                'notes': list(self.notes)}


@dataclass
class _Domain:
    """ Quantifier domain as blocks (key, factors); a point is (key, one value per factor) """
    blocks: list

    @property
    def size(self):
        return sum(math.prod(len(f) for f in factors) for _, factors in self.blocks)

    def points(self, budget, rng):
        """ Every point when the domain fits the budget, else an even sample per (block, first value) """
        if self.size <= budget:
            return [(key, combo) for key, factors in self.blocks for combo in product(*factors)], \
                constants.EXHAUSTIVE
        strata = [(key, factors, head) for key, factors in self.blocks if all(factors) for head in factors[0]]
        per = max(1, budget // max(1, len(strata)))
        out = []
        for key, factors, head in strata:
            rest = factors[1:]
            lens = [len(f) for f in rest]
            total = math.prod(lens)
            take = min(per, total)
            picks = range(total) if take == total else sorted(int(v) for v in rng.choice(total, take, replace=False))
            for flat in picks:
                combo = []
                for values, length in zip(reversed(rest), reversed(lens)):
                    flat, i = divmod(flat, length)
                    combo.append(values[i])
                out.append((key, (head, *reversed(combo))))
        return out, constants.SAMPLED


def _radius_grid(instance, low, high, include_low=False):
    """ {rho 2^i} together with realised distances, inside (low, high) or [low, high) """
    def inside(r):
        return (low <= r if include_low else low < r) and r < high

    radii = set()
    r = low
    while r < high:
        if inside(r):
            radii.add(r)
        r *= 2
    radii.update(d for d in instance.realized if inside(d))
    return sorted(radii)


def _axiom1(instance):
    params = instance.params

    def check(part, _):
        m = instance.metrics[part]
        if m.r_sm < params.mu / 2:
            return {'part': part, 'failed': 'r_sm < mu/2', 'r_sm': m.r_sm}
        if m.r_lg < params.tau / 2:
            return {'part': part, 'failed': 'r_lg < tau/2', 'r_lg': m.r_lg}
        if m.mu != params.mu:
            return {'part': part, 'failed': 'plus sets widen by a different mu', 'mu': m.mu}
        return None

    return _Domain([(part, ((None,),)) for part in range(3)]), check, []


def _axiom2(instance):
    p = instance.params.p

    def check(part, combo):
        x, (d, closed) = combo
        m = instance.metrics[part]
        if closed:
            size = len(m.closed_ball(x, d))
            if size > p * d * m.size:
                return {'part': part, 'x': x, 'r': d, 'size': size, 'failed': '|B_r(x)| <= p r |X| just above r'}
        else:
            size = len(m.ball(x, d))
            if size * 2 * p < d * m.size:
                return {'part': part, 'x': x, 'r': d, 'size': size, 'failed': 'r |X| / 2p <= |B_r(x)|'}
        return None

    blocks = []
    for m in instance.metrics:
        probes = [(d, False) for d in m.realized] + [(d, True) for d in m.realized if d < 1]
        blocks.append((m.part, (range(m.size), probes)))
    return _Domain(blocks), check, ['radii below the least distance give singleton balls and are not probed']


def _axiom3(instance):
    alpha = instance.params.alpha

    def check(part, combo):
        x, = combo
        total = math.prod(m.size for m in instance.metrics) // instance.metrics[part].size
        degree = int(instance.degrees[part][x])
        if min(degree, total - degree) < alpha * total:
            return {'part': part, 'x': x, 'degree': degree, 'pairs': total, 'failed': 'min(deg, non-deg) >= alpha'}
        return None

    blocks = [(m.part, (sorted(m.lg_plus | m.sm_plus),)) for m in instance.metrics]
    return _Domain(blocks), check, []


def _axiom4(instance):
    def check(key, combo):
        px, py, pz = key
        y, z, z2 = combo
        members, center, radius = _intersection(instance, px, py, pz, y, z, z2)
        bound = instance.metrics[pz].distance(z, z2)
        if radius > bound:
            return {'parts': key, 'y': y, 'z': z, 'z_prime': z2, 'radius': radius, 'bound': bound,
                    'failed': "enclosing ball wider than d(z, z')"}
        return None

    blocks = []
    for px, py, pz in permutations(range(3)):
        my, mz = instance.metrics[py], instance.metrics[pz]
        blocks.append(((px, py, pz), (range(my.size), range(mz.size), range(mz.size))))
    return _Domain(blocks), check, []


def _axiom5(instance):
    params = instance.params

    def check(part, combo):
        x, r = combo
        m = instance.metrics[part]
        family = ball_partition(m, x, r)
        if family.balls[0] != (x, r):
            return {'part': part, 'x': x, 'r': r, 'failed': 'B_r(x) is not one of the balls'}
        defect = family.defect(r / 3, r)
        if defect:
            return {'part': part, 'x': x, 'r': r, **defect}
        if family.m > 4 * params.p / m.effective_radius(r):
            return {'part': part, 'x': x, 'r': r, 'm': family.m, 'failed': 'm <= 4p/r'}
        return None

    radii = _radius_grid(instance, params.rho, params.mu ** 2)
    blocks = [(m.part, (sorted(m.lg_plus | m.sm_plus), radii)) for m in instance.metrics]
    return _Domain(blocks), check, []


def _axiom6(instance):
    params = instance.params
    warn_once('axiom6-ratio', "covering axiom bound read as m <= 2p r2/r1; the stated 2p r1/r2 is below 1")

    def check(part, combo):
        c, r2, r1 = combo
        if r2 <= r1:
            return _SKIP
        m = instance.metrics[part]
        family = ball_cover(m, c, r2, r1)
        where = {'part': part, 'center': c, 'r2': r2, 'r1': r1}
        defect = family.defect(r1 / 3, r1)
        if defect:
            return {**where, **defect}
        if family.m > 2 * params.p * m.effective_radius(r2) / m.effective_radius(r1):
            return {**where, 'm': family.m, 'failed': 'm <= 2p r2/r1'}
        for label, target, centres in (('a', m.lg, m.lg_plus), ('b', m.sm, m.sm_plus)):
            missed = family.uncovered_in(family.region & target, centres)
            if missed > 2 * family.m:
                return {**where, 'm': family.m, 'missed': missed, 'failed': f'({label}) more than 2m points missed'}
        return None

    r1s = _radius_grid(instance, params.rho, params.mu ** 2)
    r2s = sorted(set(_radius_grid(instance, params.rho, Fraction(1))) | {Fraction(1)})
    blocks = [(m.part, (range(m.size), r2s, r1s)) for m in instance.metrics]
    return _Domain(blocks), check, ['pairs with r2 <= r1 are not applicable']


def _axiom7(instance):
    params = instance.params
    factor = SPLIT_DISTANCE_FACTOR.get(instance.family, 3)
    if factor != 3:
        warn_once(f'axiom7-{instance.family}', f"splitting bound checked as d(f0, f1) <= {factor}r for "
                                               f"{instance.family}; the axiom states 3r")

    @cached(cache=LRUCache(maxsize=1 << 14), lock=Lock())
    def witness(px, py, x, y, r):
        return _split_local(instance, px, py, x, y, r, True)

    def distance(pz, a, b):
        return instance.metrics[pz].distance(a, b)

    def check(key, combo):
        (px, py, pz), kind = key
        if kind == 'base':
            x, y, r = combo
            found = witness(px, py, x, y, r)
            where = {'parts': (px, py, pz), 'x': x, 'y': y, 'r': r}
            if found is None:
                return {**where, 'failed': 'no splitting pair'}
            f0, f1, _, source = found
            bound = factor * instance.effective_radius(r)
            if distance(pz, f0, f1) > bound:
                return {**where, 'f0': f0, 'f1': f1, 'source': source, 'distance': distance(pz, f0, f1),
                        'bound': bound, 'failed': f'd(f0, f1) <= {factor}r'}
            return None
        if kind == 'a':
            x, y, y2, r = combo
            if y == y2:
                return _SKIP
            first, second = witness(px, py, x, y, r), witness(px, py, x, y2, r)
            if first is None or second is None:
                return _SKIP
            dyy = instance.metrics[py].distance(y, y2)
            for u in (0, 1):
                if distance(pz, first[u], second[u]) < dyy:
                    return {'parts': (px, py, pz), 'x': x, 'y': y, 'y_prime': y2, 'r': r, 'u': u,
                            'failed': "(a) d(f_u(x, y), f_u(x, y')) >= d(y, y')"}
            return None
        x, y, r, x2, y2, r2 = combo
        if r > r2:
            x, y, r, x2, y2, r2 = x2, y2, r2, x, y, r
        first, second = witness(px, py, x, y, r), witness(px, py, x2, y2, r2)
        if first is None or second is None:
            return _SKIP
        r_hat = instance.effective_radius(r2)
        dxx, dyy = instance.metrics[px].distance(x, x2), instance.metrics[py].distance(y, y2)
        if dyy >= dxx + 6 * r_hat:
            need, label = dyy - dxx - 7 * r_hat, '(b)'
        elif dxx >= dyy + 6 * r_hat:
            need, label = dxx - dyy - 7 * r_hat, '(c)'
        else:
            return _SKIP
        closest = min(distance(pz, first[u], second[v]) for u in (0, 1) for v in (0, 1))
        if closest < need:
            return {'parts': (px, py, pz), 'x': x, 'y': y, 'r': r, 'x_prime': x2, 'y_prime': y2, 'r_prime': r2,
                    'closest': closest, 'need': need, 'failed': f'{label} witnesses too close'}
        return None

    radii = _radius_grid(instance, params.rho, params.mu ** 2)
    blocks = []
    for px, py, pz in permutations(range(3)):
        xs, ys = sorted(instance.metrics[px].lg_plus), sorted(instance.metrics[py].sm_plus)
        blocks.append((((px, py, pz), 'base'), (xs, ys, radii)))
        blocks.append((((px, py, pz), 'a'), (xs, ys, ys, radii)))
        blocks.append((((px, py, pz), 'bc'), (xs, ys, radii, xs, ys, radii)))
    notes = [f'distance bound {factor}r at the effective radius',
             "move tuples are ordered so that r <= r'; tuples where neither (b) nor (c) applies are skipped"]
    return _Domain(blocks), check, notes


def _axiom8(instance):
    params = instance.params

    def check(key, combo):
        px, py, pz = key
        x, x2, y, r, r2 = combo
        r3 = instance.metrics[px].distance(x, x2) - r - r2
        if x == x2 or r3 <= 2 * max(r, r2):
            return _SKIP
        radii = (r, r2, r3)
        if _pair_local(instance, px, py, x, x2, y, radii, True) is None:
            return {'parts': key, 'x': x, 'x_prime': x2, 'y': y, 'radii': radii, 'failed': 'no splitting z'}
        return None

    radii = _radius_grid(instance, params.rho, params.mu ** 2, include_low=True)
    blocks = []
    for px, py, pz in permutations(range(3)):
        mx, my = instance.metrics[px], instance.metrics[py]
        blocks.append(((px, py, pz), (sorted(mx.lg_plus), range(mx.size), sorted(my.sm), radii, radii)))
    return _Domain(blocks), check, ["tuples with r'' <= 2 max(r, r') are not applicable"]


def _axiom9(instance):
    def check(part, _):
        m = instance.metrics[part]
        common = m.sm_plus & m.lg_plus
        if common:
            return {'part': part, 'shared': sorted(common), 'failed': 'X_sm+ and X_lg+ intersect'}
        return None

    return _Domain([(part, ((None,),)) for part in range(3)]), check, []


_AXIOM_CHECKS = {1: _axiom1, 2: _axiom2, 3: _axiom3, 4: _axiom4, 5: _axiom5, 6: _axiom6, 7: _axiom7, 8: _axiom8,
                 9: _axiom9}


def verify_axiom(instance, axiom_id, sample_budget=None, seed=0, threads=None):
    if axiom_id not in _AXIOM_CHECKS:
        raise InvalidInputError(f"axioms are numbered 1-9, got {axiom_id}")
    budget = constants.AXIOM_BUDGET if sample_budget is None else sample_budget
    domain, check, notes = _AXIOM_CHECKS[axiom_id](instance)
    points, mode = domain.points(budget, rng_for(seed, 'axiom', axiom_id))
    results = pmap(lambda point: check(*point), points, threads)
    failures = [r for r in results if r is not None and r is not _SKIP]
    checked = sum(1 for r in results if r is not _SKIP)
    if checked == 0:
        mode = constants.VACUOUS
    report = AxiomReport(axiom_id, not failures, mode, checked, domain.size, failures[:MAX_REPORTED_FAILURES],
                         failures[0] if failures else None, notes)
    logger.info(f"axiom {axiom_id} on {instance!r}: passed {report.passed}, {mode}, checked {checked} "
                f"of {domain.size}")
    return report


def verify_axioms(instance, axioms=AXIOMS, sample_budget=None, seed=0, threads=None):
    return [verify_axiom(instance, a, sample_budget, seed, threads) for a in axioms]


def parse_axioms(text):
    """ '1-9', '1,3,5-7' -> sorted axiom ids """
    chosen = set()
    for chunk in str(text).split(','):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            if '-' in chunk:
                lo, hi = (int(v) for v in chunk.split('-', 1))
                chosen.update(range(lo, hi + 1))
            else:
                chosen.add(int(chunk))
        except ValueError:
            raise InvalidInputError(f"bad axiom list {text!r}")
    if not chosen or not chosen <= set(AXIOMS):
        raise InvalidInputError(f"axioms are numbered 1-9, got {text!r}")
    return sorted(chosen)


# -- irregularity witnesses -----------------------------------------------------------------------

@dataclass
class IrregularityWitness:
    """ Classes (i, j, k) with K3[A, B1, C1] inside E and K3[A, B0, C0] disjoint from E.

    Sets hold host vertices of H-bar(n); thresholds (w1, w0) are 1-based:
    B1 = b <= w1, C1 = c >= w1, B0 = b > w0, C0 = c < w0.
    """
    classes: tuple
    a_set: tuple
    b1: tuple
    b0: tuple
    c1: tuple
    c0: tuple
    thresholds: tuple
    case: str
    bounds: dict
    certificates: dict

    @property
    def sizes(self):
        return {'A': len(self.a_set), 'B1': len(self.b1), 'B0': len(self.b0), 'C1': len(self.c1),
                'C0': len(self.c0)}

    def to_json(self):
        return {'classes': list(self.classes), 'A': list(self.a_set), 'B1': list(self.b1), 'B0': list(self.b0),
                'C1': list(self.c1), 'C0': list(self.c0), 'thresholds': list(self.thresholds), 'case': self.case,
                'sizes': self.sizes, 'bounds': _jsonable(self.bounds), 'certificates': self.certificates}


def _ninth_root(value):
    """ Exact when value is a ninth power of a rational """
    value = as_fraction(value)
    num, den = round(value.numerator ** (1 / 9)), round(value.denominator ** (1 / 9))
    if num ** 9 == value.numerator and den ** 9 == value.denominator:
        return Fraction(num, den)
    return as_fraction(float(value) ** (1 / 9))


def _meets(counts, mu, total):
    """ counts >= mu * total, elementwise and exact """
    return counts * mu.denominator >= mu.numerator * total


def _split_sets(n, b_idx, c_idx, w1, w0):
    b1 = tuple(n + j - 1 for j in b_idx if j <= w1)
    b0 = tuple(n + j - 1 for j in b_idx if j > w0)
    c1 = tuple(2 * n + k - 1 for k in c_idx if k >= w1)
    c0 = tuple(2 * n + k - 1 for k in c_idx if k < w0)
    return b1, b0, c1, c0


def _best_threshold(b_idx, c_idx, n, upper):
    """ w maximising min(#B <= w, #C >= w) (upper=True) or min(#B > w, #C < w) """
    b, c = np.asarray(b_idx), np.asarray(c_idx)
    ws = np.arange(1, n + 1)
    if upper:
        score = np.minimum(np.searchsorted(b, ws, side='right'), len(c) - np.searchsorted(c, ws, side='left'))
    else:
        score = np.minimum(len(b) - np.searchsorted(b, ws, side='right'), np.searchsorted(c, ws, side='left'))
    return int(ws[int(np.argmax(score))])


def hbark_irregular_witness(n, partition, eps1=Fraction(1, 2 ** 18)):
    """ Irregular class triple for an equipartition of H-bar(n): a_i = i - 1, b_j = n + j - 1, c_k = 2n + k - 1 """
    eps1 = as_fraction(eps1)
    t = partition.t
    if t < 3:
        raise PreconditionError(f"need t >= 3 classes, got {t}")
    if not 0 < eps1 <= Fraction(1, 2 ** 18):
        raise PreconditionError(f"need 0 < eps1 <= 2^-18, got {eps1}")
    if partition.n != 3 * n:
        raise PreconditionError(f"partition covers {partition.n} vertices, H-bar({n}) has {3 * n}")
    if not partition.is_equipartition():
        raise PreconditionError("partition is not an equipartition")
    mu = _ninth_root(eps1)
    if mu * 3 * n / t < 1:
        raise PreconditionError(f"n = {n} too small: eps1^(1/9) 3n/t = {float(mu * 3 * n / t):.3f} < 1")
    warn_once('hbark-size', "irregularity witness sets are verified against eps1^(1/9) n/t (A) and "
                            "eps1^(2/9) n/t (B and C sets); eps1^(1/9) 3n/t cannot hold for two disjoint "
                            "subsets of one class part")
    a_idx, b_idx, c_idx = [], [], []
    for cls in partition.classes:
        a_idx.append([v + 1 for v in cls if v < n])
        b_idx.append([v - n + 1 for v in cls if n <= v < 2 * n])
        c_idx.append([v - 2 * n + 1 for v in cls if v >= 2 * n])
    big = mu * n / t
    bounds = {'A': big, 'sets': mu * big, 'stated': mu * 3 * n / t}
    cal_a = [c for c in range(t) if len(a_idx[c]) >= big]
    cal_b = [c for c in range(t) if len(b_idx[c]) >= big]
    cal_c = [c for c in range(t) if len(c_idx[c]) >= big]
    ws = np.arange(1, n + 1)
    mid_b, mid_c = {}, {}
    for c in cal_b:
        below = np.searchsorted(np.asarray(b_idx[c]), ws, side='right')
        mid_b[c] = _meets(below, mu, len(b_idx[c])) & _meets(len(b_idx[c]) - below, mu, len(b_idx[c]))
    for c in cal_c:
        below = np.searchsorted(np.asarray(c_idx[c]), ws, side='left')
        mid_c[c] = _meets(below, mu, len(c_idx[c])) & _meets(len(c_idx[c]) - below, mu, len(c_idx[c]))

    def a_class(j, k, pool):
        rest = [c for c in pool if c not in (j, k)]
        return max(rest, key=lambda c: (len(a_idx[c]), -c)) if rest else None

    def large_enough(a, sets):
        return len(a) >= bounds['A'] and all(len(s) >= bounds['sets'] for s in sets)

    for j in cal_b:
        for k in cal_c:
            if j == k:
                continue
            common = np.flatnonzero(mid_b[j] & mid_c[k])
            i = a_class(j, k, cal_a)
            if not len(common) or i is None:
                continue
            w = int(common[0]) + 1
            sets = _split_sets(n, b_idx[j], c_idx[k], w, w)
            a = tuple(v - 1 for v in a_idx[i])
            if large_enough(a, sets):
                return _finish_hbark(n, (i, j, k), a, sets, (w, w), 'midpoint', bounds)
    for j in range(t):
        for k in range(t):
            if j == k or not b_idx[j] or not c_idx[k]:
                continue
            i = a_class(j, k, range(t))
            if i is None:
                continue
            w1 = _best_threshold(b_idx[j], c_idx[k], n, True)
            w0 = _best_threshold(b_idx[j], c_idx[k], n, False)
            sets = _split_sets(n, b_idx[j], c_idx[k], w1, w0)
            a = tuple(v - 1 for v in a_idx[i])
            if large_enough(a, sets):
                return _finish_hbark(n, (i, j, k), a, sets, (w1, w0), 'scan', bounds)
    raise VerificationError(f"no irregular class triple found for H-bar({n}) with t = {t}")


def _finish_hbark(n, classes, a, sets, thresholds, case, bounds):
    b1, b0, c1, c0 = sets
    # compare 1-based indices within the parts, not host ids
    order = bool(a and all(sets)) and max(b1) - n <= min(c1) - 2 * n and min(b0) - n > max(c0) - 2 * n
    certificates = {'order': order, 'scan': None}
    if n <= HBAR_SCAN_MAX_N:
        g = hbar(n)
        certificates['scan'] = _block_defect(g, a, b1, c1, True) is None and _block_defect(g, a, b0, c0, False) is None
    if not order or certificates['scan'] is False:
        raise VerificationError(f"irregularity witness for classes {classes} failed its certificates {certificates}")
    witness = IrregularityWitness(classes, a, b1, b0, c1, c0, thresholds, case, bounds, certificates)
    logger.info(f"H-bar({n}) witness: classes {classes}, thresholds {thresholds}, case {case}, sizes {witness.sizes}")
    return witness


def random_equipartition(n, t, seed=0):
    perm = rng_for(seed, 'equipartition', n, t).permutation(n)
    return VertexPartition(tuple(tuple(int(v) for v in perm[c::t]) for c in range(t)), n)


@dataclass
class MixedTriple:
    classes: tuple
    density: Fraction
    edges: int
    triples: int

    def to_json(self):
        return {'classes': list(self.classes), 'density': fraction_json(self.density), 'edges': self.edges,
                'triples': self.triples}


def mixed_density_scan(g, partition, eps):
    """ Class triples i < j < k whose cross density lies strictly inside (eps, 1 - eps).

    For a 3-partitioned g only triples meeting each part once count towards
    the denominator.
    """
    eps = as_fraction(eps)
    if partition.n != g.n:
        raise InvalidInputError(f"partition covers {partition.n} vertices, the 3-graph has {g.n}")
    class_of = partition.class_of
    counts = Counter()
    for e in g.edges:
        key = tuple(sorted(class_of[v] for v in e))
        if key[0] < key[1] < key[2]:
            counts[key] += 1
    if g.partition is not None:
        inter = [[len(set(cls) & part) for part in g.partition] for cls in partition.classes]
    rows = []
    for i, j, k in combinations(range(partition.t), 3):
        if g.partition is None:
            triples = len(partition.classes[i]) * len(partition.classes[j]) * len(partition.classes[k])
        else:
            triples = sum(inter[i][a] * inter[j][b] * inter[k][c] for a, b, c in permutations(range(3)))
        if not triples:
            continue
        density = Fraction(counts[(i, j, k)], triples)
        if eps < density < 1 - eps:
            rows.append(MixedTriple((i, j, k), density, counts[(i, j, k)], triples))
    logger.info(f"mixed density scan: {len(rows)} of {math.comb(partition.t, 3)} class triples inside "
                f"({eps}, {1 - eps})")
    return rows
