"""Subcommand handlers. Each takes the parsed argparse namespace and returns an Outcome;
main.run wraps the outcome into the JSON report and persists the run.
"""
import argparse
import hashlib
from dataclasses import dataclass, field
from fractions import Fraction

import networkx as nx

import constants
from modules.construct import FamilySpec, build_canonical
from modules.core import BipartiteGraph, ThreeGraph, TripartiteGraph, bip
from modules.decomp import (Decomposition, binary_disc3_construction, build_decomposition, classify_triads,
                            common_refinement, error_shape, extract_fop2_witness, find_encoding, fix_disc2_irregular,
                            homogeneity_report, reduced_encoding, verify_approx_refinement)
from modules.detect import DimensionCaps, count_d_trees, dimension_report, find_pattern, tree_rank, vc_graph
from modules.formats import dumps, read_graph, write_graph
from modules.helpers import InvalidInputError, as_fraction, fraction_json, get_logger
from modules.quasi import (cycle2_count, dev23_sum, dev2_sum, disc23_witness_search, disc2_deviation, measure_triad,
                           oct23_count, vdisc3_deviation)
from modules.special import (build_instance, hbark_irregular_witness, mixed_density_scan,
                             neighborhood_intersection_ball, pair_split_witness, parse_axioms, random_equipartition,
                             split_witness, verify_axioms)
from modules.stable import (Schedule, fiberwise_good_partition, good_pair_report, goodsets1_partition,
                            goodstrong_partition, stable_removal_cleanup, symmetry_classify, tree_removal_partition)
from modules.suite import parse_only, run_suite

logger = get_logger(__name__)

FAMILY_ALIASES = {'H': constants.HALF_GRAPH, 'U': constants.POWERSET_GRAPH, 'VCFOP': constants.VCFOP_EXAMPLE}
BIP_SOURCE = 'BIP'
TRIAD_METRICS = ('dev23', 'oct23', 'disc23', 'triad')
METRICS = ('disc2', 'dev2', 'cycle2', 'vdisc3') + TRIAD_METRICS
DECOMPOSE_ACTIONS = ('build', 'classify', 'error-shape', 'encode', 'refine', 'fix')
STABLE_ALGS = ('goodsets1', 'goodstrong', 'equitable', 'fiberwise', 'removal', 'cleanup', 'symmetry', 'goodpairs')
WITNESS_KINDS = ('split', 'pairsplit', 'intersection', 'hbark', 'mixed')


@dataclass
class Outcome:
    kind: str
    result: dict
    inputs: list = field(default_factory=list)
    ok: bool = True


def fraction_arg(text):
    """ argparse type for exact rationals: '1/20', '0.05', '3' """
    try:
        return as_fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}")


def _load(path, want=None):
    if path is None:
        raise InvalidInputError("this command needs --in")
    graph = read_graph(path)
    if want is BipartiteGraph and not isinstance(graph, BipartiteGraph):
        raise InvalidInputError(f"{path} must be a 'bip' file")
    if want is ThreeGraph and not isinstance(graph, ThreeGraph):
        raise InvalidInputError(f"{path} must be a '3graph' file")
    return graph


def _partitioned(path):
    h = _load(path, ThreeGraph)
    if h.partition is None:
        raise InvalidInputError(f"{path} has no 'part' lines; this measure needs a 3-partite 3-graph")
    return h


def _params(text):
    """ 'p=3,n=2' -> {'p': '3', 'n': '2'}; values stay strings for the builders to parse """
    values = {}
    for item in filter(None, (text or '').split(',')):
        key, sep, value = item.partition('=')
        if not sep or not key.strip():
            raise InvalidInputError(f"bad parameter {item!r}, expected key=value")
        values[key.strip()] = value.strip()
    return values


def _fraction_list(text, count):
    try:
        values = [as_fraction(v.strip()) for v in text.split(',')]
    except (ValueError, ZeroDivisionError):
        raise InvalidInputError(f"bad number list {text!r}")
    if len(values) != count:
        raise InvalidInputError(f"expected {count} values, got {len(values)} in {text!r}")
    return tuple(values)


# -- construct ------------------------------------------------------------------------------------

def construct_command(args):
    family = FAMILY_ALIASES.get(args.family.upper(), args.family.upper())
    inputs = []
    if family == BIP_SOURCE:
        # a simple graph given as a networkx edge list, turned into its bipartite double
        if args.input is None:
            raise InvalidInputError("BIP needs --in with an edge list")
        try:
            simple = nx.read_edgelist(args.input, nodetype=int)
        except (OSError, TypeError, ValueError) as e:
            raise InvalidInputError(f"cannot read edge list {args.input}: {e}")
        graph, label = bip(simple), BIP_SOURCE
        inputs.append(args.input)
    else:
        attached = None
        if family == constants.TENSOR:
            attached = _load(args.input, BipartiteGraph)
            inputs.append(args.input)
        spec = FamilySpec(family, k=args.k, ell=args.ell, n=args.n, p=args.p, graph=attached, seed=args.seed)
        graph, label = build_canonical(spec.validate()), spec.label()
    text = dumps(graph)
    result = {
        'family': label,
        'format': 'bip' if isinstance(graph, BipartiteGraph) else '3graph',
        'edges': len(graph.edges),
        'sha256': hashlib.sha256(text.encode('ascii')).hexdigest(),
    }
    if isinstance(graph, ThreeGraph):
        result['n'] = graph.n
        result['parts'] = [len(p) for p in graph.parts] if graph.partition is not None else None
    else:
        result['sides'] = [graph.left_size, graph.right_size]
    if args.out:
        write_graph(graph, args.out)
        result['out'] = args.out
    else:
        result['graph'] = text
    return Outcome('construct', result, inputs)


# -- measure --------------------------------------------------------------------------------------

def measure_command(args):
    metric = args.metric
    if metric in ('disc2', 'dev2', 'cycle2'):
        g = _load(args.input, BipartiteGraph)
        if metric == 'disc2':
            report = disc2_deviation(g, args.density, mode=args.mode, eps=args.eps, seed=args.seed,
                                     samples=args.samples, threads=args.threads)
            return Outcome('measure', report.to_json(), [args.input])
        if metric == 'dev2':
            d2 = g.density() if args.density is None else args.density
            value = dev2_sum(g, d2)
            return Outcome('measure', {'measure': 'dev2', 'density_used': fraction_json(d2),
                                       'value': fraction_json(value)}, [args.input])
        count = cycle2_count(g)
        total = (g.left_size * g.right_size) ** 2
        return Outcome('measure', {'measure': 'cycle2', 'count': count,
                                   'normalised': fraction_json(Fraction(count, total) if total else 0)},
                       [args.input])
    h = _partitioned(args.input)
    if metric == 'vdisc3':
        report = vdisc3_deviation(h, args.density, mode=args.mode, seed=args.seed, samples=args.samples)
        return Outcome('measure', report.to_json(), [args.input])
    g = TripartiteGraph.complete(h.parts)
    if metric == 'dev23':
        value = dev23_sum(h, g, args.density)
        result = {'measure': 'dev23', 'value': fraction_json(value)}
    elif metric == 'oct23':
        result = {'measure': 'oct23', 'count': oct23_count(h, g)}
    elif metric == 'disc23':
        result = disc23_witness_search(h, g, args.density, budget=args.search_budget, seed=args.seed).to_json()
    else:
        tm = measure_triad(h, g, search_budget=args.search_budget, seed=args.seed)
        result = {
            'measure': 'triad',
            'd2': [fraction_json(x) for x in tm.d2],
            'd3': fraction_json(tm.d3),
            'triangles': tm.triangles,
            'dev23': fraction_json(tm.dev23),
            'dev23_normalised': fraction_json(tm.dev23_normalised),
            'oct23': tm.oct23_count,
            'disc23': tm.disc23.to_json(),
        }
    return Outcome('measure', result, [args.input])


# -- detect ---------------------------------------------------------------------------------------

def _vc_json(result):
    return {'value': result.value, 'capped': result.capped, 'witness': list(result.witness)}


def detect_command(args):
    graph = _load(args.input)
    if args.pattern:
        spec = args.pattern
        name, sep, rest = spec.partition(':')
        spec = FAMILY_ALIASES.get(name.strip().upper(), name.strip()) + sep + rest
        witness = find_pattern(graph, spec, args.budget, args.threads)
        return Outcome('detect', witness.to_json(), [args.input])
    if isinstance(graph, BipartiteGraph):
        forward, backward = vc_graph(graph, args.vc_cap)
        value, witness = tree_rank(graph, depth_cap=args.depth_cap)
        result = {
            'vc': {'forward': _vc_json(forward), 'backward': _vc_json(backward)},
            'tree_rank': {'value': value, 'nodes': dict(sorted(witness.nodes.items())),
                          'leaves': dict(sorted(witness.leaves.items()))},
        }
        if args.trees:
            trees = count_d_trees(graph, d=args.trees, seed=args.seed)
            result['d_trees'] = {'d': args.trees, 'count': trees.count, 'exact': trees.exact,
                                 'stderr': trees.stderr}
        return Outcome('detect', result, [args.input])
    caps = DimensionCaps(vc=args.vc_cap, budget=args.budget, threads=args.threads)
    return Outcome('detect', dimension_report(graph, caps), [args.input])


# -- decompose ------------------------------------------------------------------------------------

def _decomposition(args, h):
    strategy = 'given' if args.decomp else args.strategy
    d = build_decomposition(h, args.t, args.l, strategy, args.seed, args.decomp, args.eps1, args.eps2)
    return d


def _summary(d):
    return {'t': d.t, 'l': d.ell, 'n': d.n, 'sizes': [len(c) for c in d.classes]}


def _counts(reports):
    counts = {constants.REGULAR: 0, constants.DISC2_IRREGULAR: 0, constants.DISC3_IRREGULAR: 0}
    for r in reports:
        counts[r.classification] += 1
    return counts


def decompose_command(args):
    h = _load(args.input, ThreeGraph)
    inputs = [args.input] + ([args.decomp] if args.decomp else [])
    d = _decomposition(args, h)
    result = {'action': args.action, 'decomposition': _summary(d)}
    ok = True
    if args.action == 'fix':
        if args.target is None:
            raise InvalidInputError("decompose fix needs --target")
        d, fix = fix_disc2_irregular(h, d, args.target, args.seed)
        result['fix'] = {'failing_before': fix.failing_before, 'failing_after': fix.failing_after,
                         'kept': fix.kept, 'resliced_pairs': [list(p) for p in fix.resliced_pairs],
                         'residual': [list(p) for p in fix.residual]}
    elif args.action == 'refine':
        if not args.other:
            raise InvalidInputError("decompose refine needs --other with a second decomposition")
        q = Decomposition.load(args.other)
        inputs.append(args.other)
        if args.check:
            check = verify_approx_refinement(d, q, args.eps1, args.eps2, args.seed)
            result['refinement'] = check.to_json()
            ok = check.passed
        else:
            d, checks = common_refinement(d, q, seed=args.seed)
            result['decomposition'] = _summary(d)
            result['refinement'] = {name: c.to_json() for name, c in sorted(checks.items())}
    elif args.action == 'encode':
        enc = reduced_encoding(h, d, args.encode_eps, args.eps2, args.seed)
        witness = find_encoding(enc, args.encode_pattern, args.budget)
        result['encoding'] = enc.to_json()
        result['encoding_witness'] = witness.to_json()
        if args.extract and witness.found:
            result['extraction'] = extract_fop2_witness(h, d, witness, args.extract, args.budget,
                                                        args.threads).to_json()
    elif args.action in ('classify', 'error-shape'):
        if args.eps1 is None or args.eps2 is None:
            raise InvalidInputError(f"decompose {args.action} needs --eps1 and --eps2")
        reports = classify_triads(h, d, args.eps1, args.eps2, args.search_budget, args.mu, args.seed, args.threads)
        result['counts'] = _counts(reports)
        if args.action == 'classify':
            result['triads'] = [r.to_json() for r in reports]
            if args.mu is not None:
                hom = homogeneity_report(h, d, args.mu)
                result['homogeneity'] = {'fraction': fraction_json(hom.fraction),
                                         'homogeneous_triples': hom.homogeneous_triples,
                                         'covered_triples': hom.covered_triples}
        else:
            shape = error_shape(reports, d.t, eps1=args.shape_eps or args.eps1)
            result['error_shape'] = shape.to_json()
            if args.binary_construction and shape.kind == constants.BINARY:
                d = binary_disc3_construction(h, d, shape.cover, args.seed)
                again = classify_triads(h, d, args.eps1, args.eps2, args.search_budget, None, args.seed, args.threads)
                result['after_construction'] = _counts(again)
                ok = result['after_construction'][constants.DISC3_IRREGULAR] == 0
    if args.save:
        d.save(args.save)
        result['saved'] = args.save
    return Outcome('decompose', result, inputs, ok)


# -- partition-stable -----------------------------------------------------------------------------

def _chunks(size, count):
    if not 1 <= count <= max(size, 1):
        raise InvalidInputError(f"cannot cut {size} leaves into {count} parts")
    return [list(range(size))[c * size // count:(c + 1) * size // count] for c in range(count)]


def partition_stable_command(args):
    schedule = Schedule.parse(args.schedule) if args.schedule else None
    if args.alg == 'fiberwise':
        h = _load(args.input, ThreeGraph)
        result = fiberwise_good_partition(h, eps=args.eps, f=schedule, d=args.d, threads=args.threads)
        return Outcome('partition-stable', result.to_json(), [args.input], all(result.checks.values()))
    g = _load(args.input, BipartiteGraph)
    if args.alg in ('goodsets1', 'goodpairs'):
        part = goodsets1_partition(g, d_cap=args.d or 2, f=schedule)
        result = part.to_json()
        ok = all(part.checks.values())
        if args.alg == 'goodpairs':
            rows = good_pair_report(g, [m for _, m in part.sets()], args.eps)
            result = {'partition': result, 'pairs': [{'pair': list(r['pair']), 'density': fraction_json(r['density']),
                                                      'outcome': r['outcome']} for r in rows]}
        return Outcome('partition-stable', result, [args.input], ok)
    if args.alg in ('goodstrong', 'equitable'):
        parts = _chunks(g.right_size, args.parts)
        strong = goodstrong_partition(g, parts, args.eps, f=schedule, d=args.d, equitable=args.alg == 'equitable',
                                      threads=args.threads)
        return Outcome('partition-stable', strong.to_json(), [args.input], all(strong.checks.values()))
    if args.alg == 'symmetry':
        return Outcome('partition-stable', symmetry_classify(g, args.eps).to_json(), [args.input])
    removal = tree_removal_partition(g, d=args.d or 2, mu=args.mu, eps=args.eps)
    if args.alg == 'removal':
        return Outcome('partition-stable', removal.to_json(), [args.input])
    cleanup = stable_removal_cleanup(g, removal, args.delta)
    return Outcome('partition-stable', {'removal': removal.to_json(), 'cleanup': cleanup.to_json()},
                   [args.input], cleanup.passed)


# -- special-verify and witness -------------------------------------------------------------------

def special_verify_command(args):
    instance = build_instance(args.family, _params(args.params))
    reports = verify_axioms(instance, parse_axioms(args.axioms), args.sample_budget, args.seed, args.threads)
    result = {'instance': instance.to_json(), 'axioms': [r.to_json() for r in reports]}
    return Outcome('special-verify', result, [], all(r.passed for r in reports))


def _need(args, *names):
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n) is None]
    if missing:
        raise InvalidInputError(f"witness {args.kind} needs {', '.join(missing)}")


def witness_command(args):
    kind = args.kind
    if kind == 'hbark':
        _need(args, 'n', 't')
        partition = random_equipartition(3 * args.n, args.t, args.seed)
        eps1 = args.eps1 if args.eps1 is not None else Fraction(1, 2 ** 18)
        return Outcome('witness', hbark_irregular_witness(args.n, partition, eps1).to_json())
    if kind == 'mixed':
        _need(args, 't', 'eps')
        g = _load(args.input, ThreeGraph)
        partition = random_equipartition(g.n, args.t, args.seed)
        rows = mixed_density_scan(g, partition, args.eps)
        result = {'classes': [list(c) for c in partition.classes], 'mixed': [r.to_json() for r in rows]}
        return Outcome('witness', result, [args.input])
    _need(args, 'family')
    instance = build_instance(args.family, _params(args.params))
    if kind == 'split':
        _need(args, 'x', 'y', 'r')
        found = split_witness(instance, args.x, args.y, args.r, args.fallback)
    elif kind == 'pairsplit':
        _need(args, 'x', 'x_prime', 'y')
        radii = _fraction_list(args.radii, 3) if args.radii else None
        found = pair_split_witness(instance, args.x, args.x_prime, args.y, radii, args.fallback)
    else:
        _need(args, 'y', 'z', 'z_prime')
        found = neighborhood_intersection_ball(instance, args.y, args.z, args.z_prime)
    return Outcome('witness', {'instance': instance.to_json(), 'witness': found.to_json()})


# -- suite ----------------------------------------------------------------------------------------

def suite_command(args):
    table = run_suite(args.tier, parse_only(args.only), args.seed, args.threads)
    return Outcome('suite', table, [], table['passed'])


handlers = {
    'construct': construct_command,
    'measure': measure_command,
    'detect': detect_command,
    'decompose': decompose_command,
    'partition-stable': partition_stable_command,
    'special-verify': special_verify_command,
    'witness': witness_command,
    'suite': suite_command,
}
