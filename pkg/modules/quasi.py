"""Quasirandomness measures.

Every deviation is an exact Fraction normalised by the denominator of its
definition: |U||V| for disc2, the product of the part sizes for vdisc3 and
d2^3 times that product for disc23. Subset enumerations work on integer
marginals scaled by the density's denominator, so no floating point enters
a reported value.

Counting convention for C4 and K222: ordered tuples with repeats allowed,
matching the summation indices of dev2 and dev23.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations

import numpy as np
from scipy.stats import spearmanr

import constants
from modules.core import BipartiteGraph, TripartiteGraph, triangle_triples
from modules.helpers import (CapExceededError, InvalidInputError, PreconditionError, VerificationError,
                             as_fraction, get_logger, rng_for, warn_once)

logger = get_logger(__name__)

CHUNK = 1 << 15


@dataclass
class DeviationReport:
    deviation: Fraction
    density_used: Fraction
    witness: tuple
    exact: bool
    measure: str = 'disc2'
    evaluated: int = 0

    def to_json(self):
        from modules.helpers import fraction_json
        return {
            'measure': self.measure,
            'deviation': fraction_json(self.deviation),
            'density_used': fraction_json(self.density_used),
            'witness': [list(w) for w in self.witness],
            'exact': self.exact,
            'evaluated': self.evaluated,
        }


@dataclass
class TriadMeasure:
    d2: tuple
    d3: Fraction
    triangles: int
    dev23: Fraction
    dev23_normalised: Fraction
    oct23_count: int
    disc23: DeviationReport = field(default=None)


def _mask_matrix(start, stop, width):
    masks = np.arange(start, stop, dtype=np.int64)
    return ((masks[:, None] >> np.arange(width, dtype=np.int64)) & 1).astype(np.int64)


def _scaled(density):
    d = as_fraction(density)
    return d.numerator, d.denominator


def _completion(marg, t_min):
    """ Best one-sided total per row: (positive optimum, negative optimum, both >= 0) """
    if t_min <= 0:
        pos = np.where(marg > 0, marg, 0).sum(axis=1)
        neg = -np.where(marg < 0, marg, 0).sum(axis=1)
        return pos, neg
    desc = -np.sort(-marg, axis=1)
    csum = np.cumsum(desc, axis=1)[:, t_min - 1:]
    pos = csum.max(axis=1)
    asc = np.sort(marg, axis=1)
    nsum = -np.cumsum(asc, axis=1)[:, t_min - 1:]
    neg = nsum.max(axis=1)
    return pos, neg


def _completion_columns(marg_row, sign, t_min):
    """ Columns realising the one-sided optimum for a single row """
    values = marg_row if sign > 0 else -marg_row
    if t_min <= 0:
        return tuple(int(j) for j in np.nonzero(values > 0)[0])
    order = np.argsort(-values, kind='stable')
    csum = np.cumsum(values[order])
    k = t_min + int(np.argmax(csum[t_min - 1:]))
    return tuple(sorted(int(j) for j in order[:k]))


def _rect_deviation(matrix, rows, cols, p, q):
    e = int(matrix[np.ix_(list(rows), list(cols))].sum()) if rows and cols else 0
    return abs(Fraction(e) - Fraction(p, q) * len(rows) * len(cols))


def disc2_deviation(g, d=None, mode='exact', eps=None, cap=None, seed=0, samples=4096, threads=None):
    """ max over U', W' of |e(U', W') - d|U'||W'|| / (|U||W|), with the maximising pair.

    The smaller side is enumerated; for a fixed subset the best subset of the
    other side is the set of columns with positive (or negative) marginal.
    With eps, only |U'| >= eps|U| and |W'| >= eps|W| are admitted.
    mode is 'exact', 'sample' or 'auto' (exact within the cap, sampling above).
    """
    m, n = g.left_size, g.right_size
    if d is None:
        d = g.density()
    d = as_fraction(d)
    cap = constants.CAP_EXACT_DISC2 if cap is None else cap
    if m * n == 0:
        return DeviationReport(Fraction(0), d, ((), ()), True, evaluated=0)
    transposed = m > n
    matrix = g.matrix.T if transposed else g.matrix
    s, cols = matrix.shape
    exact = True
    if s > cap:
        if mode == 'exact':
            raise CapExceededError(f"disc2 exact mode needs min side <= {cap}, got {s}")
        exact = False
    elif mode == 'sample':
        exact = False
    p, q = _scaled(d)
    s_min = int(np.ceil(float(eps) * s - 1e-12)) if eps else 0
    t_min = int(np.ceil(float(eps) * cols - 1e-12)) if eps else 0
    scaled = matrix * q

    def evaluate(rows):
        size = rows.sum(axis=1)
        marg = rows @ scaled - p * size[:, None]
        pos, neg = _completion(marg, t_min)
        best = np.maximum(pos, neg)
        best[size < max(s_min, 0)] = -1
        return best, pos >= neg

    if exact:
        total = 1 << s
        starts = list(range(0, total, CHUNK))
        with ThreadPoolExecutor(max_workers=threads or constants.THREADS) as pool:
            results = list(pool.map(lambda a: evaluate(_mask_matrix(a, min(a + CHUNK, total), s)), starts))
        best_value, best_row, best_sign = -1, None, True
        for start, (values, signs) in zip(starts, results):
            i = int(np.argmax(values))
            if values[i] > best_value:
                best_value, best_row, best_sign = int(values[i]), start + i, bool(signs[i])
        rows = tuple(j for j in range(s) if best_row >> j & 1)
        evaluated = total
    else:
        warn_once(('disc2-sample', s), f"disc2: side of {s} above cap {cap}, sampling {samples} subsets")
        rng = rng_for(seed, 'disc2_sample', m, n)
        draws = (rng.random((samples, s)) < 0.5).astype(np.int64)
        values, signs = evaluate(draws)
        i = int(np.argmax(values))
        best_value, best_sign = int(values[i]), bool(signs[i])
        rows = tuple(int(j) for j in np.nonzero(draws[i])[0])
        evaluated = samples
    if best_value < 0:
        return DeviationReport(Fraction(0), d, ((), ()), exact, evaluated=evaluated)
    row_vec = np.zeros(s, dtype=np.int64)
    row_vec[list(rows)] = 1
    marg = row_vec @ scaled - p * len(rows)
    chosen = _completion_columns(marg, 1 if best_sign else -1, t_min)
    deviation = Fraction(best_value, q * m * n)
    check = _rect_deviation(matrix, rows, chosen, p, q) / (m * n)
    if check != deviation:
        raise VerificationError(f"disc2 witness re-evaluates to {check}, reported {deviation}")
    witness = (chosen, rows) if transposed else (rows, chosen)
    return DeviationReport(deviation, d, witness, exact, evaluated=evaluated)


def cycle2_count(g):
    """ Ordered (u0, u1, v0, v1), repeats allowed, all four pairs edges """
    m = g.matrix.astype(object)
    co = m @ m.T
    return int((co * co).sum())


def dev2_sum(g, d2):
    """ sum over u0,u1,v0,v1 of g(u0,v0)g(u0,v1)g(u1,v0)g(u1,v1) / (|U|^2 |V|^2), g = 1_E - d2 """
    m, n = g.left_size, g.right_size
    if m * n == 0:
        return Fraction(0)
    p, q = _scaled(d2)
    a = (g.matrix * q - p).astype(object)
    k = a.T @ a
    return Fraction(int((k * k).sum()), q ** 4 * m * m * n * n)


def _part_tensor(h, parts):
    """ 0/1 array over the product of the three vertex lists """
    index = [{v: k for k, v in enumerate(part)} for part in parts]
    t = np.zeros(tuple(len(p) for p in parts), dtype=np.int64)
    for e in h.edges:
        for perm in permutations(e):
            if all(v in ix for v, ix in zip(perm, index)):
                t[tuple(ix[v] for v, ix in zip(perm, index))] = 1
                break
    return t


def vdisc3_deviation(h, d=None, mode='exact', cap=None, seed=0, samples=4096):
    """ max over V1', V2', V3' of |e - d|V1'||V2'||V3'|| / (|V1||V2||V3|)

    Two smallest parts enumerated, third completed greedily. The witness is
    reported in the partition's own part order, as host vertex ids.
    """
    if h.partition is None:
        raise PreconditionError("vdisc3 needs a 3-partite 3-graph")
    parts = h.parts
    sizes = [len(p) for p in parts]
    total_cells = sizes[0] * sizes[1] * sizes[2]
    if d is None:
        d = Fraction(len(h.edges), total_cells) if total_cells else Fraction(0)
    d = as_fraction(d)
    if total_cells == 0:
        return DeviationReport(Fraction(0), d, ((), (), ()), True, 'vdisc3')
    cap = constants.CAP_EXACT_VDISC3 if cap is None else cap
    order = sorted(range(3), key=lambda i: sizes[i])
    t = _part_tensor(h, [parts[i] for i in order])
    s1, s2, s3 = t.shape
    p, q = _scaled(d)
    exact = s1 + s2 <= cap and mode != 'sample'
    if s1 + s2 > cap and mode == 'exact':
        raise CapExceededError(f"vdisc3 exact mode needs two smallest parts summing to <= {cap}, got {s1 + s2}")
    scaled = t * q
    best = (-1, None, None, True)
    if exact:
        first_masks = range(1 << s1)
        evaluated = (1 << s1) * (1 << s2)
    else:
        warn_once(('vdisc3-sample', s1, s2), f"vdisc3: parts {s1}+{s2} above cap {cap}, sampling")
        rng = rng_for(seed, 'vdisc3_sample', s1, s2, s3)
        first_masks = [int(sum(1 << j for j in range(s1) if rng.random() < 0.5)) for _ in range(max(1, samples // 64))]
        evaluated = 0
    for mask1 in first_masks:
        rows1 = [j for j in range(s1) if mask1 >> j & 1]
        size1 = len(rows1)
        layer = scaled[rows1].sum(axis=0) if rows1 else np.zeros((s2, s3), dtype=np.int64)
        if exact:
            blocks = (_mask_matrix(a, min(a + CHUNK, 1 << s2), s2) for a in range(0, 1 << s2, CHUNK))
        else:
            rng2 = rng_for(seed, 'vdisc3_sample_inner', mask1)
            blocks = [(rng2.random((64, s2)) < 0.5).astype(np.int64)]
        for block in blocks:
            size2 = block.sum(axis=1)
            marg = block @ layer - p * size1 * size2[:, None]
            pos, neg = _completion(marg, 0)
            values = np.maximum(pos, neg)
            i = int(np.argmax(values))
            if values[i] > best[0]:
                best = (int(values[i]), mask1, tuple(int(j) for j in np.nonzero(block[i])[0]), bool(pos[i] >= neg[i]))
            if not exact:
                evaluated += len(block)
    value, mask1, rows2, sign = best
    rows1 = tuple(j for j in range(s1) if mask1 >> j & 1)
    layer = scaled[list(rows1)].sum(axis=0) if rows1 else np.zeros((s2, s3), dtype=np.int64)
    row_vec = np.zeros(s2, dtype=np.int64)
    row_vec[list(rows2)] = 1
    marg = row_vec @ layer - p * len(rows1) * len(rows2)
    rows3 = _completion_columns(marg, 1 if sign else -1, 0)
    deviation = Fraction(value, q * total_cells)
    e = int(t[np.ix_(list(rows1), list(rows2), list(rows3))].sum()) if rows1 and rows2 and rows3 else 0
    if abs(e - d * len(rows1) * len(rows2) * len(rows3)) / total_cells != deviation:
        raise VerificationError("vdisc3 witness does not re-evaluate to the reported deviation")
    local = {order[0]: rows1, order[1]: rows2, order[2]: rows3}
    witness = tuple(tuple(parts[i][j] for j in local[i]) for i in range(3))
    return DeviationReport(deviation, d, witness, exact, 'vdisc3', evaluated)


def _triad_arrays(h, g):
    """ (K, E) over the local product of g's parts: K marks triangles of g, E marks edges of h among them """
    n1, n2, n3 = g.sizes
    k = np.zeros((n1, n2, n3), dtype=np.int64)
    for a, b, c in triangle_triples(g):
        k[a, b, c] = 1
    e = _part_tensor(h, g.labels) if all(g.sizes) else np.zeros((n1, n2, n3), dtype=np.int64)
    return k, e


def _check_underlying(k, e):
    if (e & (1 - k)).any():
        raise InvalidInputError("3-graph has edges outside the triangles of the underlying graph")


def triad_density(h, g):
    k, e = _triad_arrays(h, g)
    tri = int(k.sum())
    return Fraction(int((e * k).sum()), tri) if tri else Fraction(0), tri


def _min_d2(g):
    ds = g.densities()
    return min(ds), ds


def dev23_sum(h, g, d3=None, require_underlying=True):
    """ Six-index sum of products of f = 1_K3(G) (1_E - d3) over (u0,u1,v0,v1,w0,w1), divided by |V1|^2|V2|^2|V3|^2.

    Computed per (w0, w1) as ||M^T M||_F^2 with M[u, v] = f(u, v, w0) f(u, v, w1).
    Edges of h off the triangles of g are rejected unless require_underlying is False,
    in which case they are ignored.
    """
    k, e = _triad_arrays(h, g)
    if require_underlying:
        _check_underlying(k, e)
    e = e * k
    n1, n2, n3 = k.shape
    if d3 is None:
        tri = int(k.sum())
        d3 = Fraction(int(e.sum()), tri) if tri else Fraction(0)
    p, q = _scaled(d3)
    f = (k * (q * e - p)).astype(object)
    total = 0
    for w0 in range(n3):
        for w1 in range(n3):
            m = f[:, :, w0] * f[:, :, w1]
            mm = m.T @ m
            total += int((mm * mm).sum())
    denom = q ** 8 * (n1 * n2 * n3) ** 2
    return Fraction(total, denom) if denom else Fraction(0)


def oct23_count(h, g, require_underlying=True):
    """ Ordered (u0,u1,v0,v1,w0,w1), repeats allowed, with all eight triples edges of h """
    k, e = _triad_arrays(h, g)
    if require_underlying:
        _check_underlying(k, e)
    e = (e * k).astype(object)
    total = 0
    for w0 in range(k.shape[2]):
        for w1 in range(k.shape[2]):
            m = e[:, :, w0] * e[:, :, w1]
            mm = m.T @ m
            total += int((mm * mm).sum())
    return total


def disc23_witness_search(h, g, d3=None, budget=2000, seed=0, cap=None, require_underlying=True):
    """ Subgraph G' of g maximising ||E cap K3(G')| - d3|K3(G')||, normalised by d2^3 |V1||V2||V3|.

    The two smaller cross edge sets are chosen by enumeration (or local search
    past the cap); the largest is completed greedily, which is exact for fixed
    choices of the other two. d2 is the minimum of the three pair densities.
    """
    k, e = _triad_arrays(h, g)
    if require_underlying:
        _check_underlying(k, e)
    e = e * k
    n1, n2, n3 = k.shape
    tri = int(k.sum())
    if d3 is None:
        d3 = Fraction(int(e.sum()), tri) if tri else Fraction(0)
    d3 = as_fraction(d3)
    p, q = _scaled(d3)
    d2, _ = _min_d2(g)
    cap = constants.CAP_EXACT_DISC23 if cap is None else cap
    # roles: x, y enumerated, z completed; each is one of the three cross edge sets
    sets = {(0, 1): sorted(g.e12), (0, 2): sorted(g.e13), (1, 2): sorted(g.e23)}
    order = sorted(sets, key=lambda key: len(sets[key]))
    kx, ky, kz = order
    ex, ey, ez = sets[kx], sets[ky], sets[kz]
    # per triangle contribution q*E - p, indexed through the three edges it uses
    weight = (q * e - p) * k
    apex_z = [i for i in range(3) if i not in kz][0]
    size_apex = k.shape[apex_z]

    def local(triple, key):
        return tuple(triple[i] for i in key)

    # tensor T[x_edge_index, y_edge_index, z_edge_index] is sparse: store per z edge the (x, y) edge pairs
    ix = {edge: i for i, edge in enumerate(ex)}
    iy = {edge: i for i, edge in enumerate(ey)}
    contrib = [[] for _ in ez]
    for zi, zedge in enumerate(ez):
        for w in range(size_apex):
            triple = [0, 0, 0]
            triple[kz[0]], triple[kz[1]], triple[apex_z] = zedge[0], zedge[1], w
            if not k[tuple(triple)]:
                continue
            xe, ye = local(triple, kx), local(triple, ky)
            contrib[zi].append((ix[xe], iy[ye], int(weight[tuple(triple)])))

    def evaluate(xmask, ymask):
        values = np.zeros(len(ez), dtype=np.int64)
        for zi, items in enumerate(contrib):
            values[zi] = sum(wt for a, b, wt in items if xmask[a] and ymask[b])
        pos, neg = int(values[values > 0].sum()), int(-values[values < 0].sum())
        if pos >= neg:
            return pos, np.nonzero(values > 0)[0]
        return neg, np.nonzero(values < 0)[0]

    sx, sy = len(ex), len(ey)
    exact = sx + sy <= cap
    evaluated = 0
    if exact:
        best = (-1, None, None, None)
        for a in range(1 << sx):
            xmask = [(a >> i) & 1 for i in range(sx)]
            for b in range(1 << sy):
                ymask = [(b >> i) & 1 for i in range(sy)]
                value, zs = evaluate(xmask, ymask)
                evaluated += 1
                if value > best[0]:
                    best = (value, xmask, ymask, zs)
    else:
        rng = rng_for(seed, 'disc23_search', n1, n2, n3)
        xmask, ymask = [1] * sx, [1] * sy
        value, zs = evaluate(xmask, ymask)
        best = (value, list(xmask), list(ymask), zs)
        evaluated = 1
        while evaluated < budget:
            cand_x, cand_y = list(best[1]), list(best[2])
            move = rng.integers(0, 3)
            if move == 0 and sx:
                i = int(rng.integers(0, sx))
                cand_x[i] ^= 1
            elif move == 1 and sy:
                i = int(rng.integers(0, sy))
                cand_y[i] ^= 1
            else:
                part = int(rng.integers(0, 3))
                vertex = int(rng.integers(0, max(1, k.shape[part])))
                for cand, edges, key in ((cand_x, ex, kx), (cand_y, ey, ky)):
                    for i, edge in enumerate(edges):
                        if part in key and edge[key.index(part)] == vertex:
                            cand[i] = 0
            value, zs = evaluate(cand_x, cand_y)
            evaluated += 1
            if value > best[0]:
                best = (value, cand_x, cand_y, zs)
        if budget <= evaluated:
            logger.warning(f"disc23 local search stopped after {evaluated} evaluations")
    value, xmask, ymask, zs = best
    chosen = {kx: tuple(ex[i] for i in range(sx) if xmask[i]),
              ky: tuple(ey[i] for i in range(sy) if ymask[i]),
              kz: tuple(ez[int(i)] for i in zs)}
    witness = (chosen[(0, 1)], chosen[(0, 2)], chosen[(1, 2)])
    sub = TripartiteGraph(g.labels, *witness)
    sub_k, _ = _triad_arrays(h, sub)
    raw = abs(int((e * sub_k).sum()) - d3 * int(sub_k.sum()))
    if raw != Fraction(max(value, 0), q):
        raise VerificationError("disc23 witness does not re-evaluate")
    norm = d2 ** 3 * n1 * n2 * n3
    deviation = raw / norm if norm else Fraction(0)
    return DeviationReport(deviation, d3, witness, exact, 'disc23', evaluated)


def measure_triad(h, g, search_budget=2000, seed=0):
    """ d2, d3, dev23 (raw and d2^12 normalised), oct23 and the disc23 search for one triad """
    d3, tri = triad_density(h, g)
    d2, ds = _min_d2(g)
    dev = dev23_sum(h, g, d3, require_underlying=False)
    dev_norm = dev / d2 ** 12 if d2 else Fraction(0)
    octs = oct23_count(h, g, require_underlying=False)
    disc = disc23_witness_search(h, g, d3, budget=search_budget, seed=seed, require_underlying=False)
    return TriadMeasure(ds, d3, tri, dev, dev_norm, octs, disc)


def induced_pattern_count(h, parts, pattern):
    """ Maps sending pattern part i into parts[i], injective within each part, realising every
    cross-part edge and non-edge of the pattern.
    """
    if pattern.partition is None:
        raise InvalidInputError("pattern must be 3-partite")
    if len(parts) != 3:
        raise InvalidInputError(f"expected 3 host parts for a 3-partite pattern, got {len(parts)}")
    host_parts = [sorted(set(p)) for p in parts]
    if sum(len(p) for p in host_parts) != len(set().union(*map(set, host_parts))):
        raise InvalidInputError("host parts overlap")
    pat_parts = pattern.parts
    order = [(i, v) for i in range(3) for v in pat_parts[i]]
    assigned = {}
    used = [set(), set(), set()]

    def check_triples(v_new):
        # every pattern triple across parts whose vertices are all assigned and includes v_new
        a_list = [u for u in pat_parts[0] if u in assigned]
        b_list = [u for u in pat_parts[1] if u in assigned]
        c_list = [u for u in pat_parts[2] if u in assigned]
        for a in a_list:
            for b in b_list:
                for c in c_list:
                    if v_new not in (a, b, c):
                        continue
                    if pattern.has_edge(a, b, c) != h.has_edge(assigned[a], assigned[b], assigned[c]):
                        return False
        return True

    count = 0

    def extend(pos):
        nonlocal count
        if pos == len(order):
            count += 1
            return
        i, v = order[pos]
        for x in host_parts[i]:
            if x in used[i]:
                continue
            assigned[v] = x
            used[i].add(x)
            if check_triples(v):
                extend(pos + 1)
            used[i].discard(x)
            del assigned[v]

    extend(0)
    return count


def adding_bound_holds(g1, g2):
    """ Exact deviations of two disjoint edge sets add up to a bound on their union's """
    if g1.edges & g2.edges:
        raise InvalidInputError("edge sets are not disjoint")
    r1, r2 = disc2_deviation(g1), disc2_deviation(g2)
    union = BipartiteGraph(g1.left_size, g1.right_size, g1.edges | g2.edges)
    ru = disc2_deviation(union, r1.density_used + r2.density_used)
    return ru.deviation <= r1.deviation + r2.deviation, (r1.deviation, r2.deviation, ru.deviation)


def subpair_bound_holds(g, left, right):
    """ Restriction to sides of fraction >= gamma keeps deviation <= 2 delta / gamma^2 and density within delta / gamma^2 """
    base = disc2_deviation(g)
    sub = g.restrict(left, right)
    gamma = min(Fraction(len(set(left)), g.left_size), Fraction(len(set(right)), g.right_size))
    if gamma == 0:
        raise InvalidInputError("empty restriction")
    restricted = disc2_deviation(sub)
    bound = 2 * base.deviation / gamma ** 2
    density_ok = abs(sub.density() - base.density_used) <= base.deviation / gamma ** 2
    return restricted.deviation <= bound and density_ok, (base.deviation, restricted.deviation, bound)


def rank_agreement(xs, ys):
    """ Spearman rank correlation of two measure series """
    if len(xs) < 2:
        return 1.0
    rho = spearmanr([float(x) for x in xs], [float(y) for y in ys]).correlation
    return 1.0 if np.isnan(rho) else float(rho)
