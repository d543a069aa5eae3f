# tests/test_cli.py
import json

import pytest

from bench import (EXIT_BAL_FORMAT, EXIT_CONFIGURATION, EXIT_IO, EXIT_OK, build_parser,
                   config_from_args, main)
from shared.exporters import TRACE_COLUMNS


def test_circle_run_writes_json(tmp_path):
    path = tmp_path / "circle.json"
    assert main(['--problem', 'circle', '--max-iters', '3', '--output', str(path)]) == EXIT_OK
    report = json.loads(path.read_text())
    assert report['config']['problem'] == 'circle'
    assert report['summary']['iterations_run'] <= 3


def test_csv_to_stdout(capsys):
    assert main(['--max-iters', '2', '--format', 'csv']) == EXIT_OK
    header = capsys.readouterr().out.splitlines()[0]
    assert header.split(',') == TRACE_COLUMNS


def test_mode_comparison(tmp_path):
    path = tmp_path / "modes.json"
    assert main(['--compare-modes', '--max-iters', '2', '--output', str(path)]) == EXIT_OK
    report = json.loads(path.read_text())
    assert set(report['results']) == {'analytic', 'auto', 'dynamic'}
    assert report['divergence']


def test_bal_defaults_differ_from_circle():
    parser = build_parser()
    bal = config_from_args(parser.parse_args(['--problem', 'bal', '--input', 'x.txt']))
    circle = config_from_args(parser.parse_args([]))
    assert (bal.lm.max_iterations, bal.pcg.max_iterations) == (50, 10)
    assert (circle.lm.max_iterations, circle.pcg.max_iterations) == (10, 50)


def test_missing_input_file(tmp_path):
    assert main(['--problem', 'bal', '--input', str(tmp_path / "absent.txt")]) == EXIT_IO


def test_malformed_bal_file(tmp_path):
    path = tmp_path / "broken.txt"
    path.write_text("1 1 1\n0 0 1.0\n")
    assert main(['--problem', 'bal', '--input', str(path)]) == EXIT_BAL_FORMAT


def test_bal_without_input():
    assert main(['--problem', 'bal']) == EXIT_CONFIGURATION


@pytest.mark.parametrize('flag', ['--max-iters', '--pcg-iters'])
def test_zero_iteration_counts_are_rejected(flag):
    assert main([flag, '0']) == EXIT_CONFIGURATION


def test_unknown_flag_is_a_usage_error():
    with pytest.raises(SystemExit) as excinfo:
        main(['--no-such-flag'])
    assert excinfo.value.code == 2
