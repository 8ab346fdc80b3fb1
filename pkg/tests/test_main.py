"""End-to-end tests of the command line through main.run.

Test categories:
  - unit: construct, measure, witness and suite runs with their JSON reports
  - negative: usage errors, malformed files and caps map to exit codes
"""
import json

import pytest

import constants
import main
from dbhelper import Session
from models import Report, RunManifest


def run_json(capsys, argv):
    code = main.run(argv)
    out = capsys.readouterr().out
    return code, json.loads(out) if out.strip() else None, out


@pytest.fixture
def hp_file(tmp_path, capsys):
    path = str(tmp_path / 'hp.3g')
    assert main.run(['construct', '--family', 'HP', '--k', '2', '--out', path]) == constants.EXIT_OK
    capsys.readouterr()
    return path


def test_construct_report(capsys, tmp_path):
    """construct writes the graph and reports its size and hash."""
    path = str(tmp_path / 'h.3g')
    code, report, _ = run_json(capsys, ['construct', '--family', 'HP', '--k', '2', '--out', path])
    assert code == constants.EXIT_OK
    assert report['command'] == 'construct'
    assert report['status'] == 'ok'
    assert report['tool_version'] == constants.TOOL_VERSION
    assert report['result']['edges'] == 7
    assert report['result']['parts'] == [2, 2, 2]
    with open(path) as fh:
        assert fh.readline() == '3graph 6\n'


def test_construct_alias_inline(capsys):
    """The H alias builds a half graph and prints it when --out is absent."""
    code, report, _ = run_json(capsys, ['construct', '--family', 'H', '--k', '2'])
    assert code == constants.EXIT_OK
    assert report['result']['graph'] == 'bip 2 2\n0 0\n0 1\n1 1\n'


def test_measure_vdisc3(capsys, hp_file):
    """measure reports the deviation and hashes its input."""
    code, report, _ = run_json(capsys, ['measure', '--in', hp_file, '--metric', 'vdisc3'])
    assert code == constants.EXIT_OK
    assert 'deviation' in report['result']
    assert list(report['inputs']) == [hp_file]
    assert len(report['inputs'][hp_file]) == 64


def test_reruns_are_byte_identical(capsys, hp_file):
    """The same command and seed print the same report."""
    argv = ['measure', '--in', hp_file, '--metric', 'triad', '--seed', '5']
    first = run_json(capsys, argv)[2]
    second = run_json(capsys, argv)[2]
    assert first == second


def test_json_file_matches_stdout(capsys, hp_file, tmp_path):
    """--json writes exactly what was printed."""
    out_path = tmp_path / 'report.json'
    _, _, printed = run_json(capsys, ['measure', '--in', hp_file, '--metric', 'oct23', '--json', str(out_path)])
    assert out_path.read_text() == printed


def test_malformed_file_exit_code(capsys, tmp_path):
    """A malformed input exits 2 and names the bad line."""
    path = tmp_path / 'bad.3g'
    path.write_text('3graph 4\n0 1\n')
    assert main.run(['measure', '--in', str(path), '--metric', 'vdisc3']) == constants.EXIT_USAGE
    assert 'line 2' in capsys.readouterr().err


@pytest.mark.parametrize('argv', [[], ['bogus'], ['measure'], ['measure', '--in', 'x', '--metric', 'nope'],
                                  ['measure', '--in', 'x', '--metric', 'disc2', '--density', 'half']])
def test_usage_errors(capsys, argv):
    """Argument errors exit 2 without a report."""
    assert main.run(argv) == constants.EXIT_USAGE
    assert capsys.readouterr().out == ''


def test_help_exits_zero(capsys):
    """--help is not an error."""
    assert main.run(['--help']) == constants.EXIT_OK


def test_cap_exit_code_and_restore(capsys, tmp_path):
    """An exact disc2 above the per-run cap exits 3 and the cap reverts afterwards."""
    path = str(tmp_path / 'h.bip')
    main.run(['construct', '--family', 'HALF_GRAPH', '--k', '4', '--out', path])
    before = constants.CAP_EXACT_DISC2
    code = main.run(['measure', '--in', path, '--metric', 'disc2', '--cap-exact-disc2', '2'])
    assert code == constants.EXIT_CAP
    assert constants.CAP_EXACT_DISC2 == before


def test_witness_split(capsys):
    """The GS split witness is reachable from the command line."""
    code, report, _ = run_json(capsys, ['witness', '--kind', 'split', '--family', 'gs', '--params', 'p=3,n=2',
                                        '--x', '0', '--y', '9', '--r', '1/3'])
    assert code == constants.EXIT_OK
    assert (report['result']['witness']['f0'], report['result']['witness']['f1']) == (20, 19)


def test_witness_missing_flags(capsys):
    """A witness kind without its required flags is a usage error."""
    assert main.run(['witness', '--kind', 'hbark']) == constants.EXIT_USAGE
    assert '--n' in capsys.readouterr().err


def test_suite_run_is_persisted(capsys):
    """A suite run prints its table and leaves a manifest with its report."""
    code, report, _ = run_json(capsys, ['suite', '--only', '1', '--seed', '11'])
    assert code == constants.EXIT_OK
    assert report['result']['passed']
    session = Session()
    try:
        manifests = [m for m in RunManifest.get_by_subcommand(session, 'suite') if m.seed == 11]
        assert manifests
        latest = manifests[-1]
        assert latest.exit_code == constants.EXIT_OK
        assert latest.argv() == ['suite', '--only', '1', '--seed', '11']
        stored = Report.get_reports_by_manifest(session, latest.id)
        assert stored[-1].data()['result']['passed']
    finally:
        Session.remove()
