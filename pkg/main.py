import argparse
import json
import os
import sys
import time

import jsonschema
from dotenv import load_dotenv

import constants
from cli_commands import suggested_commands
from dbhelper import Session, engine
from models import RunManifest, Report
from modules.commands import (DECOMPOSE_ACTIONS, METRICS, STABLE_ALGS, WITNESS_KINDS, fraction_arg, handlers)
from modules.formats import file_hash
from modules.helpers import HypergraphError, get_logger

load_dotenv()

logger = get_logger(__name__)

SCHEMA_PATH = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'schemas', 'report.schema.json')


class _Parser(argparse.ArgumentParser):
    """ Usage errors become an exception so run() can return 2 instead of exiting the process """

    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


class _UsageError(Exception):
    pass


def _add_construct(p):
    p.add_argument('--family', required=True)
    p.add_argument('--k', type=int)
    p.add_argument('--ell', '--l', dest='ell', type=int)
    p.add_argument('--n', type=int)
    p.add_argument('--p', type=int)
    p.add_argument('--in', dest='input')
    p.add_argument('--out')


def _add_measure(p):
    p.add_argument('--in', dest='input', required=True)
    p.add_argument('--metric', choices=METRICS, required=True)
    p.add_argument('--density', type=fraction_arg)
    p.add_argument('--mode', choices=('exact', 'sample', 'auto'), default='exact')
    p.add_argument('--eps', type=fraction_arg)
    p.add_argument('--samples', type=int, default=4096)
    p.add_argument('--search-budget', type=int, default=2000)


def _add_detect(p):
    p.add_argument('--in', dest='input', required=True)
    p.add_argument('--pattern')
    p.add_argument('--vc-cap', type=int, default=4)
    p.add_argument('--depth-cap', type=int, default=8)
    p.add_argument('--trees', type=int)


def _add_decompose(p):
    p.add_argument('action', choices=DECOMPOSE_ACTIONS)
    p.add_argument('--in', dest='input', required=True)
    p.add_argument('--t', type=int, default=3)
    p.add_argument('--l', type=int, default=2)
    p.add_argument('--strategy', choices=('random', 'natural'), default='random')
    p.add_argument('--decomp')
    p.add_argument('--other')
    p.add_argument('--check', action='store_true')
    p.add_argument('--eps1', type=fraction_arg)
    p.add_argument('--eps2', type=fraction_arg)
    p.add_argument('--mu', type=fraction_arg)
    p.add_argument('--shape-eps', type=fraction_arg)
    p.add_argument('--binary-construction', action='store_true')
    p.add_argument('--target', type=fraction_arg)
    p.add_argument('--encode-eps', type=fraction_arg, default=fraction_arg('1/10'))
    p.add_argument('--encode-pattern', default='HALF_GRAPH:k=2')
    p.add_argument('--extract', type=int)
    p.add_argument('--search-budget', type=int, default=2000)
    p.add_argument('--save')


def _add_partition_stable(p):
    p.add_argument('--alg', choices=STABLE_ALGS, required=True)
    p.add_argument('--in', dest='input', required=True)
    p.add_argument('--schedule')
    p.add_argument('--d', type=int)
    p.add_argument('--eps', type=fraction_arg, default=fraction_arg('1/10'))
    p.add_argument('--parts', type=int, default=2)
    p.add_argument('--mu', type=fraction_arg, default=fraction_arg('1/8'))
    p.add_argument('--delta', type=fraction_arg, default=fraction_arg('1/4'))


def _add_special_verify(p):
    p.add_argument('--family', choices=('gs', 'hp', 'GS', 'HP'), required=True)
    p.add_argument('--params', required=True)
    p.add_argument('--axioms', default='1-9')
    p.add_argument('--sample-budget', type=int)


def _add_witness(p):
    p.add_argument('--kind', choices=WITNESS_KINDS, required=True)
    p.add_argument('--family', choices=('gs', 'hp', 'GS', 'HP'))
    p.add_argument('--params')
    p.add_argument('--x', type=int)
    p.add_argument('--x-prime', type=int)
    p.add_argument('--y', type=int)
    p.add_argument('--z', type=int)
    p.add_argument('--z-prime', type=int)
    p.add_argument('--r', type=fraction_arg)
    p.add_argument('--radii')
    p.add_argument('--fallback', action='store_true')
    p.add_argument('--n', type=int)
    p.add_argument('--t', type=int)
    p.add_argument('--eps1', type=fraction_arg)
    p.add_argument('--eps', type=fraction_arg)
    p.add_argument('--in', dest='input')


def _add_suite(p):
    p.add_argument('--tier', choices=('fast', 'full'), default='fast')
    p.add_argument('--only')


subcommand_options = {
    'construct': _add_construct,
    'measure': _add_measure,
    'detect': _add_detect,
    'decompose': _add_decompose,
    'partition-stable': _add_partition_stable,
    'special-verify': _add_special_verify,
    'witness': _add_witness,
    'suite': _add_suite,
}


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument('--seed', type=int, default=0)
    common.add_argument('--json', dest='json_path')
    common.add_argument('--cap-exact-disc2', type=int)
    common.add_argument('--cap-exact-vdisc3', type=int)
    common.add_argument('--budget', type=int)
    common.add_argument('--threads', type=int)
    parser = _Parser(prog='hypergraph', description='3-graph regularity toolkit')
    sub = parser.add_subparsers(dest='command', parser_class=_Parser)
    sub.required = True
    for name, help_text in suggested_commands.items():
        subcommand_options[name](sub.add_parser(name, help=help_text, parents=[common]))
    return parser


OVERRIDABLE = ('CAP_EXACT_DISC2', 'CAP_EXACT_VDISC3', 'SEARCH_BUDGET', 'THREADS')


def apply_overrides(args):
    """ Flags win over the environment for this run; run() restores the previous values afterwards """
    if args.cap_exact_disc2 is not None:
        constants.CAP_EXACT_DISC2 = args.cap_exact_disc2
    if args.cap_exact_vdisc3 is not None:
        constants.CAP_EXACT_VDISC3 = args.cap_exact_vdisc3
    if args.budget is not None:
        constants.SEARCH_BUDGET = args.budget
    if args.threads is not None:
        constants.THREADS = args.threads
    return {
        'cap_exact_disc2': constants.CAP_EXACT_DISC2,
        'cap_exact_vdisc3': constants.CAP_EXACT_VDISC3,
        'cap_exact_disc23': constants.CAP_EXACT_DISC23,
        'search_budget': constants.SEARCH_BUDGET,
        'vertex_cap': constants.VERTEX_CAP,
    }


def validate_report(report):
    with open(SCHEMA_PATH, encoding='utf-8') as fh:
        schema = json.load(fh)
    jsonschema.validate(instance=report, schema=schema)


def create_tables():
    RunManifest.__table__.create(engine, checkfirst=True)
    Report.__table__.create(engine, checkfirst=True)


def persist(argv, args, caps, inputs, wall_time, exit_code, report=None):
    try:
        create_tables()
        with Session() as session:
            manifest = RunManifest(command_line=json.dumps(list(argv)), subcommand=args.command, seed=args.seed,
                                   caps=json.dumps(caps, sort_keys=True), input_hashes=json.dumps(inputs, sort_keys=True),
                                   tool_version=constants.TOOL_VERSION, wall_time=wall_time, exit_code=exit_code)
            if manifest.save(session) is None:
                return None
            if report is not None:
                session.add(Report(manifest_id=manifest.id, kind=args.command,
                                   payload=json.dumps(report, sort_keys=True)))
                session.commit()
            logger.info(f"persisted run {manifest.id}: {args.command}, exit {exit_code}")
            return manifest.id
    except Exception:
        logger.error(f"could not persist run of {args.command}", exc_info=True)
        Session.remove()
        return None


def run(argv):
    started = time.perf_counter()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as e:
        print(str(e), file=sys.stderr)
        return constants.EXIT_USAGE
    except SystemExit as e:
        # --help
        return e.code or constants.EXIT_OK
    saved = {name: getattr(constants, name) for name in OVERRIDABLE}
    try:
        return _execute(argv, args, started)
    finally:
        for name, value in saved.items():
            setattr(constants, name, value)


def _execute(argv, args, started):
    caps = apply_overrides(args)
    inputs = {}
    try:
        outcome = handlers[args.command](args)
        inputs = {path: file_hash(path) for path in outcome.inputs}
        status = 'ok' if outcome.ok else 'failed'
        report = {
            'command': args.command,
            'tool_version': constants.TOOL_VERSION,
            'seed': args.seed,
            'caps': caps,
            'inputs': inputs,
            'status': status,
            'result': outcome.result,
        }
        validate_report(report)
    except HypergraphError as e:
        print(f"error: {e}", file=sys.stderr)
        logger.error(f"{args.command} failed: {e}", exc_info=True)
        persist(argv, args, caps, inputs, time.perf_counter() - started, e.exit_code)
        return e.exit_code
    except jsonschema.ValidationError as e:
        print(f"error: report does not match its schema: {e.message}", file=sys.stderr)
        logger.error(f"{args.command} produced an invalid report", exc_info=True)
        return constants.EXIT_VERIFICATION
    text = json.dumps(report, sort_keys=True, indent=2)
    print(text)
    if args.json_path:
        with open(args.json_path, 'w', encoding='utf-8', newline='\n') as fh:
            fh.write(text + '\n')
    code = constants.EXIT_OK if outcome.ok else constants.EXIT_VERIFICATION
    persist(argv, args, caps, inputs, time.perf_counter() - started, code, report)
    return code


if __name__ == '__main__':
    sys.exit(run(sys.argv[1:]))
