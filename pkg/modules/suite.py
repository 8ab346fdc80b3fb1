"""Acceptance pipelines run by the `suite` subcommand.

Every check returns (passed, details) with JSON-ready details. The fast tier
runs each pipeline on smaller instances; the full tier uses the stated sizes.
Timings go to the log only, so the printed table is reproducible.
"""
import time
from fractions import Fraction
from itertools import combinations, product

import numpy as np

import constants
from modules.construct import (gs_a_set, half_graph, hp_graph, ordered_triples_graph, otherway_hypergraph,
                               random_disc2_bipartite, triangle_hypergraph, w_split_instance)
from modules.core import ThreeGraph, TripartiteGraph, graph_of, triangle_triples
from modules.decomp import (binary_disc3_construction, build_decomposition, classify_triads, error_shape,
                            extract_fop2_witness, find_encoding, fop_equivalence_decomposition, linear_from_binary,
                            reduced_encoding)
from modules.detect import tree_rank, vc_dimension, vc_graph
from modules.helpers import HypergraphError, InvalidInputError, fraction_json, get_logger, rng_for
from modules.quasi import dev23_sum, disc2_deviation, vdisc3_deviation
from modules.special import (gs_instance, gs_metric, gs_tensor, hbark_irregular_witness, hp_instance,
                             mixed_density_scan, random_equipartition, verify_axioms)
from modules.stable import goodsets1_partition, good_pair_report

logger = get_logger(__name__)

TIERS = ('fast', 'full')


def _pick(tier, fast, full):
    return fast if tier == 'fast' else full


def check_gs_arithmetic(tier, seed, threads):
    sizes = {n: len(gs_a_set(3, n)) for n in (1, 2, 3)}
    passed = all(size == (3 ** n - 1) // 2 for n, size in sizes.items())
    return passed, {'sizes': {str(n): size for n, size in sizes.items()}}


def check_gs_ultrametric(tier, seed, threads):
    dist = gs_metric(3, 2)[0].dist
    # d(x, y) <= max(d(x, z), d(y, z)) for every z at once
    violations = int((dist[:, :, None] > np.maximum(dist[:, None, :], dist[None, :, :])).sum())
    return violations == 0, {'triples': int(dist.shape[0]) ** 3, 'violations': violations}


def check_hp_vc(tier, seed, threads):
    k = _pick(tier, 4, 6)
    forward, backward = vc_graph(graph_of(hp_graph(k)))
    details = {'k': k, 'forward': forward.value, 'backward': backward.value}
    return forward.value == 1 and backward.value == 1, details


def check_gs_vc_lower_bound(tier, seed, threads):
    """ Pairs (b_0, c) of GS_3(3) traced by the a vertices are the translates of A(3, 3) """
    tensor = gs_tensor(3, 3)
    family = [np.flatnonzero(tensor[x, 0]).tolist() for x in range(tensor.shape[0])]
    result = vc_dimension(range(tensor.shape[2]), family, cap=4)
    return result.value >= 3, {'value': result.value, 'capped': result.capped, 'cap': 4,
                               'shattered': list(result.witness)}


def _brute_disc2(g, d):
    m, n = g.left_size, g.right_size
    rows = (np.arange(1 << m)[:, None] >> np.arange(m)[None, :]) & 1
    cols = (np.arange(1 << n)[:, None] >> np.arange(n)[None, :]) & 1
    counts = rows @ g.matrix @ cols.T
    sizes = np.outer(rows.sum(axis=1), cols.sum(axis=1))
    gap = np.abs(counts * d.denominator - d.numerator * sizes).max()
    return Fraction(int(gap), d.denominator * m * n)


def check_disc2_oracle(tier, seed, threads):
    runs, side = _pick(tier, (20, 6), (100, 10))
    mismatches = []
    for run in range(runs):
        rng = rng_for(seed, 'suite_disc2', run)
        m, n = int(rng.integers(1, side + 1)), int(rng.integers(1, side + 1))
        g = random_disc2_bipartite(m, n, Fraction(int(rng.integers(1, 10)), 10), int(rng.integers(0, 2 ** 31)))
        d = g.density()
        fast = disc2_deviation(g, d, mode='exact', threads=1).deviation
        slow = _brute_disc2(g, d)
        if fast != slow:
            mismatches.append({'run': run, 'sizes': [m, n], 'search': fraction_json(fast), 'brute': fraction_json(slow)})
    return not mismatches, {'runs': runs, 'max_side': side, 'mismatches': mismatches}


def _random_triad(seed, run, size=3):
    rng = rng_for(seed, 'suite_dev23', run)
    pairs = lambda: frozenset((a, b) for a in range(size) for b in range(size) if rng.random() < 0.7)
    g = TripartiteGraph.consecutive((size, size, size), pairs(), pairs(), pairs())
    labels = g.labels
    edges = [(labels[0][a], labels[1][b], labels[2][c]) for a, b, c in sorted(triangle_triples(g))
             if rng.random() < 0.5]
    return ThreeGraph(3 * size, frozenset(edges), labels), g


def naive_dev23(h, g):
    """ The six-fold signed sum written out term by term """
    n1, n2, n3 = g.sizes
    tri = triangle_triples(g)
    labels = g.labels
    hits = sum(1 for a, b, c in tri if h.has_edge(labels[0][a], labels[1][b], labels[2][c]))
    d3 = Fraction(hits, len(tri)) if tri else Fraction(0)

    def f(a, b, c):
        if (a, b, c) not in tri:
            return 0
        return (1 if h.has_edge(labels[0][a], labels[1][b], labels[2][c]) else 0) - d3

    total = Fraction(0)
    for u0, u1, v0, v1, w0, w1 in product(range(n1), range(n1), range(n2), range(n2), range(n3), range(n3)):
        term = Fraction(1)
        for a, b, c in product((u0, u1), (v0, v1), (w0, w1)):
            term *= f(a, b, c)
            if not term:
                break
        total += term
    return total / (n1 * n2 * n3) ** 2


def check_dev23_identity(tier, seed, threads):
    runs = _pick(tier, 10, 50)
    mismatches = []
    for run in range(runs):
        h, g = _random_triad(seed, run)
        fast, slow = dev23_sum(h, g), naive_dev23(h, g)
        if fast != slow:
            mismatches.append({'run': run, 'factorised': fraction_json(fast), 'naive': fraction_json(slow)})
    return not mismatches, {'runs': runs, 'mismatches': mismatches}


def check_sparse_vdisc3(tier, seed, threads):
    sizes = _pick(tier, (6,), (6, 10))
    rows = []
    for size, eps in product(sizes, (Fraction(1, 100), Fraction(1, 20), Fraction(1, 10))):
        cells = size ** 3
        count = int(eps * cells)
        rng = rng_for(seed, 'suite_vdisc3', size, eps)
        chosen = rng.choice(cells, count, replace=False) if count else []
        edges = [(int(x) // (size * size), size + int(x) // size % size, 2 * size + int(x) % size) for x in chosen]
        parts = (range(size), range(size, 2 * size), range(2 * size, 3 * size))
        report = vdisc3_deviation(ThreeGraph(3 * size, frozenset(edges), parts))
        rows.append({'size': size, 'eps': fraction_json(eps), 'edges': count,
                     'deviation': fraction_json(report.deviation), 'ok': report.deviation <= eps})
    return all(r['ok'] for r in rows), {'instances': rows}


def check_good_pairs(tier, seed, threads):
    g = half_graph(16)
    partition = goodsets1_partition(g, d_cap=4)
    rows = good_pair_report(g, [members for _, members in partition.sets()], Fraction(1, 100))
    inside = lambda d: d < Fraction(1, 5) or d > Fraction(4, 5)
    passed = bool(rows) and all(inside(r['density']) for r in rows)
    return passed, {'sets': len(partition.sets()), 'certified_pairs': len(rows),
                    'densities': sorted({str(r['density']) for r in rows})}


def check_tree_rank(tier, seed, threads):
    ranks = {d: tree_rank(half_graph(2 ** d))[0] for d in (1, 2, 3)}
    return all(ranks[d] >= d for d in ranks), {'ranks': {str(d): r for d, r in ranks.items()}}


def check_hbar_witness(tier, seed, threads):
    n = _pick(tier, 60, 500)
    runs = []
    for run in range(20):
        t = 3 + run % 8
        try:
            w = hbark_irregular_witness(n, random_equipartition(3 * n, t, seed + run))
            runs.append({'run': run, 't': t, 'classes': list(w.classes), 'case': w.case, 'ok': True})
        except HypergraphError as e:
            runs.append({'run': run, 't': t, 'error': str(e), 'ok': False})
    return all(r['ok'] for r in runs), {'n': n, 'runs': runs}


def check_mixed_density(tier, seed, threads):
    k = _pick(tier, 30, 60)
    g = hp_graph(k)
    counts = [len(mixed_density_scan(g, random_equipartition(3 * k, 6, seed + run), Fraction(1, 20)))
              for run in range(20)]
    return all(counts), {'k': k, 'mixed_triples': counts}


def check_special_axioms(tier, seed, threads):
    if tier == 'fast':
        instance = gs_instance(3, 2)
    else:
        instance = hp_instance(200, Fraction(1, 5), Fraction(1, 20), Fraction(1, 10000))
    reports = verify_axioms(instance, seed=seed, threads=threads)
    rows = [{'axiom': r.axiom, 'passed': r.passed, 'mode': r.mode, 'checked': r.checked} for r in reports]
    return all(r.passed for r in reports), {'instance': instance.to_json()['shape'], 'family': instance.family,
                                            'axioms': rows}


def threshold_slices(m):
    """ Q^1 / Q^2 of K2[X, Y]: row i sees column j in Q^2 iff bit (i mod 2) of (j mod 4) is set """
    q1 = frozenset((i, j) for i in range(m) for j in range(m) if not (j % 4) >> (i % 2) & 1)
    q2 = frozenset((i, j) for i in range(m) for j in range(m)) - q1
    return [q1, q2]


def check_fop2_pipeline(tier, seed, threads):
    m = 32
    inst = otherway_hypergraph(m, 2, seed, threshold_slices(m))
    d = fop_equivalence_decomposition(inst, seed)
    enc = reduced_encoding(inst.h, d, Fraction(1, 10), seed=seed)
    encoding = find_encoding(enc, 'HALF_GRAPH:k=2')
    details = {'m': m, 'corners': len(enc.corners), 'encoding': encoding.status}
    if not encoding.found:
        return False, details
    witness = extract_fop2_witness(inst.h, d, encoding, 2, threads=threads)
    details.update({'extraction': witness.status, 'roles': witness.details.get('roles'),
                    'verified': witness.details.get('fop2_verified', False)})
    return witness.found and details['verified'], details


def _shape_coherent(reports, t, eps1):
    shape = error_shape(reports, t, eps1=eps1)
    ok = True
    if shape.kind == constants.BINARY:
        ok = len(linear_from_binary(shape.binary_cover, t)) <= int(eps1 * t ** 3)
    return shape, ok


def check_error_shapes(tier, seed, threads):
    n, t, ell = 12, 4, 2
    eps1, eps2, budget_eps = Fraction(1, 8), Fraction(1, 8), Fraction(1, 2)
    rng = rng_for(seed, 'suite_error_shape')
    h = ThreeGraph(n, frozenset(e for e in combinations(range(n), 3) if rng.random() < 0.5))
    base = build_decomposition(h, t, ell, 'random', seed)
    seeded = binary_disc3_construction(h, base, [(0, 1)], seed)
    rows, passed = [], True
    for name, d in (('random', base), ('seeded_binary', seeded)):
        reports = classify_triads(h, d, eps1, eps2, seed=seed, threads=threads)
        shape, coherent = _shape_coherent(reports, t, budget_eps)
        row = {'decomposition': name, 'shape': shape.kind, 'coherent': coherent}
        passed &= coherent
        if shape.kind == constants.BINARY:
            rebuilt = binary_disc3_construction(h, d, shape.binary_cover, seed)
            again = classify_triads(h, rebuilt, eps1, eps2, seed=seed, threads=threads)
            leftover = sum(r.classification == constants.DISC3_IRREGULAR for r in again)
            _, coherent_again = _shape_coherent(again, t, budget_eps)
            row.update({'cover': [list(p) for p in shape.binary_cover], 'disc3_after': leftover,
                        'coherent_after': coherent_again})
            passed &= leftover == 0 and coherent_again
        rows.append(row)
    # the seeded decomposition has a disc2-irregular pair, so a BINARY shape must occur
    passed &= any(r['shape'] == constants.BINARY for r in rows)
    return bool(passed), {'n': n, 't': t, 'l': ell, 'rows': rows}


def triad_densities(inst):
    """ Densities of every triangle-supported triad of a split instance """
    (s01, s02, s12) = (inst.splits[(0, 1)], inst.splits[(0, 2)], inst.splits[(1, 2)])
    a, b, c = inst.classes
    out = []
    for p01, p02, p12 in product(s01, s02, s12):
        tri = hits = 0
        for u, v in p01:
            for w in c:
                if (u, w) in p02 and (v, w) in p12:
                    tri += 1
                    hits += inst.h.has_edge(u, v, w)
        if tri:
            out.append(Fraction(hits, tri))
    return out


def check_binary_homogeneity(tier, seed, threads):
    rng = rng_for(seed, 'suite_binary')
    pairs = lambda: frozenset((x, y) for x in range(4) for y in range(4) if rng.random() < 0.5)
    instances = {'W': w_split_instance(_pick(tier, 3, 4)), 'ordered': ordered_triples_graph(_pick(tier, 5, 8)),
                 'triangles': triangle_hypergraph(TripartiteGraph.consecutive((4, 4, 4), pairs(), pairs(), pairs()))}
    rows = {}
    for name, inst in instances.items():
        densities = triad_densities(inst)
        rows[name] = {'triads': len(densities), 'mixed': sum(0 < d < 1 for d in densities)}
    return all(r['mixed'] == 0 for r in rows.values()), rows


CHECKS = (
    (1, 'gs_arithmetic', check_gs_arithmetic),
    (2, 'gs_ultrametric', check_gs_ultrametric),
    (3, 'hp_vc', check_hp_vc),
    (4, 'gs_vc_lower_bound', check_gs_vc_lower_bound),
    (5, 'disc2_oracle', check_disc2_oracle),
    (6, 'dev23_identity', check_dev23_identity),
    (7, 'sparse_vdisc3', check_sparse_vdisc3),
    (8, 'good_pairs', check_good_pairs),
    (9, 'tree_rank', check_tree_rank),
    (10, 'hbar_witness', check_hbar_witness),
    (11, 'mixed_density', check_mixed_density),
    (12, 'special_axioms', check_special_axioms),
    (13, 'fop2_pipeline', check_fop2_pipeline),
    (14, 'error_shapes', check_error_shapes),
    (15, 'binary_homogeneity', check_binary_homogeneity),
)


def parse_only(text):
    """ '1,3,5-7' or check names -> set of check ids; None runs everything """
    if not text:
        return None
    names = {name: cid for cid, name, _ in CHECKS}
    chosen = set()
    for chunk in str(text).split(','):
        chunk = chunk.strip()
        if not chunk:
            continue
        if chunk in names:
            chosen.add(names[chunk])
            continue
        try:
            if '-' in chunk:
                lo, hi = (int(v) for v in chunk.split('-', 1))
                chosen.update(range(lo, hi + 1))
            else:
                chosen.add(int(chunk))
        except ValueError:
            raise InvalidInputError(f"unknown suite check {chunk!r}")
    unknown = chosen - set(names.values())
    if unknown:
        raise InvalidInputError(f"suite checks are numbered 1-{len(CHECKS)}, got {sorted(unknown)}")
    return chosen


def run_suite(tier='fast', only=None, seed=0, threads=None):
    """ Pass/fail table of the selected checks. A check that raises counts as failed with the error recorded """
    if tier not in TIERS:
        raise InvalidInputError(f"tier must be one of {', '.join(TIERS)}, got {tier!r}")
    chosen = parse_only(only) if isinstance(only, str) or only is None else set(only)
    rows = []
    for cid, name, check in CHECKS:
        if chosen is not None and cid not in chosen:
            continue
        started = time.perf_counter()
        try:
            passed, details = check(tier, seed, threads)
        except HypergraphError as e:
            logger.error(f"suite check {cid} {name} raised", exc_info=True)
            passed, details = False, {'error': f"{type(e).__name__}: {e}"}
        logger.info(f"suite check {cid} {name} ({tier}): {'PASS' if passed else 'FAIL'} "
                    f"in {time.perf_counter() - started:.2f}s")
        rows.append({'id': cid, 'name': name, 'passed': bool(passed), 'details': details})
    return {'tier': tier, 'passed': all(r['passed'] for r in rows), 'checks': rows}
