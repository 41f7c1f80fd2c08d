import math

import numpy as np
import pytest

import pyatsh
from pyatsh import ConfigError, SweepConfig
from pyatsh.bench import parse_config
from pyatsh.cli import main

pyatsh.set_loggers('ERROR')
pyatsh.set_pbars(hide=True)

CONFIG = """
# Efficiency sweep
methods = numerov4, atsh4-zd
problems = problem1   # inhomogeneous
workers = 3
timing = yes
j_range.numerov4.problem1 = 2..3
base.problem1 = 0.5
"""


@pytest.fixture(scope='module')
def minerr_records():
    cfg = SweepConfig(methods=['atsh5-minerr'], problems=['problem1'], workers=2)
    return pyatsh.run_sweep(cfg)


def test_sweep(minerr_records):
    assert [r.h for r in minerr_records] == [2.0 ** -j for j in range(5, 0, -1)]
    assert all(r.ok for r in minerr_records)
    errors = [r.max_global_error for r in minerr_records]
    # Sorted by increasing h
    assert all(a < b for a, b in zip(errors, errors[1:]))
    r = next(r for r in minerr_records if r.h == 0.125)
    assert r.g_evals == 2398
    assert r.steps == 800
    assert r.wall_time_s == 0.0


def test_deterministic_output(tmp_path):
    cfg = SweepConfig(methods=['numerov4', 'atsh4-zd'], problems=['problem1', 'problem4'],
                      workers=3, j_ranges={('numerov4', 'problem1'): range(1, 3),
                                           ('atsh4-zd', 'problem1'): range(1, 3),
                                           ('numerov4', 'problem4'): range(2, 4),
                                           ('atsh4-zd', 'problem4'): range(2, 4)})
    first, second = tmp_path / 'a.csv', tmp_path / 'b.csv'
    pyatsh.emit(pyatsh.run_sweep(cfg), str(first))
    pyatsh.emit(pyatsh.run_sweep(cfg), str(second))
    assert first.read_bytes() == second.read_bytes()


def test_csv_round_trip(tmp_path, minerr_records):
    path = str(tmp_path / 'sweep.csv')
    pyatsh.emit(minerr_records, path)
    assert pyatsh.read_csv(path) == minerr_records


def test_failed_cells_are_kept(tmp_path):
    method = 'classical:atsh5-minerr'
    cfg = SweepConfig(methods=[method], problems=['problem1'], on_error='pass',
                      j_ranges={(method, 'problem1'): range(1, 3)})
    records = pyatsh.run_sweep(cfg)
    assert [r.h for r in records] == [0.25, 0.5]
    ok, failed = records
    assert ok.ok and ok.max_global_error > 1
    assert failed.status == 'non-finite'
    assert failed.steps == 200
    assert failed.g_evals == 0
    assert math.isnan(failed.max_global_error)

    path = str(tmp_path / 'failed.csv')
    pyatsh.emit(records, path)
    back = pyatsh.read_csv(path)
    assert back[1].status == 'non-finite'
    assert math.isnan(back[1].max_global_error)

    cfg.on_error = 'raise'
    with pytest.raises(pyatsh.NonFiniteState):
        pyatsh.run_sweep(cfg)


def test_infinite_error_is_a_failed_cell(monkeypatch):
    def overflowing(method, problem, h, **kwargs):
        return pyatsh.IntegrationResult(method=method, problem=problem.name, h=h,
                                        xs=np.array([0.0, h]), ys=np.zeros((2, 1)),
                                        g_evals=3, errors=np.array([0.0, np.inf]))

    monkeypatch.setattr(pyatsh.bench, 'integrate', overflowing)
    cfg = SweepConfig(methods=['numerov4'], problems=['problem1'], on_error='pass',
                      j_ranges={('numerov4', 'problem1'): range(1, 2)})
    record, = pyatsh.run_sweep(cfg)
    assert record.status == 'non-finite'
    assert math.isnan(record.max_global_error)


def test_empty_sweep(tmp_path):
    assert pyatsh.run_sweep(SweepConfig(problems=[])) == []
    path = tmp_path / 'empty.csv'
    pyatsh.emit([], str(path))
    assert path.read_text().strip() == ','.join(pyatsh.bench.FIELDS)


def test_records_frame(minerr_records):
    df = pyatsh.records_frame(minerr_records)
    assert list(df.columns) == pyatsh.bench.FIELDS
    assert len(df) == 5
    assert df.steps.dtype == np.int64


def test_parse_config():
    kwargs = parse_config(CONFIG)
    assert kwargs['methods'] == ['numerov4', 'atsh4-zd']
    assert kwargs['problems'] == ['problem1']
    assert kwargs['workers'] == 3
    assert kwargs['timing'] is True
    assert kwargs['j_ranges'] == {('numerov4', 'problem1'): range(2, 4)}
    assert kwargs['bases'] == {'problem1': 0.5}

    cfg = SweepConfig(**kwargs)
    assert cfg.stepsizes('numerov4', 'problem1') == [0.125, 0.0625]
    assert cfg.stepsizes('atsh4-zd', 'problem1') == [0.5 * 2.0 ** -j for j in range(1, 6)]
    assert len(cfg.cells()) == 7


@pytest.mark.parametrize("text", ["bogus = 1",
                                  "methods",
                                  "j_range.numerov4 = 1..2",
                                  "j_range.numerov4.problem1 = 3..1",
                                  "j_range.numerov4.problem1 = 1-3",
                                  "workers = many",
                                  "base.problem1 = wide"])
def test_parse_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


@pytest.mark.parametrize("kwargs", [{'on_error': 'ignore'},
                                    {'workers': 0},
                                    {'methods': ['rk4']},
                                    {'problems': ['problem9']},
                                    {'bases': {'problem1': -1.0}}])
def test_config_validation(kwargs):
    with pytest.raises(ConfigError):
        SweepConfig(**kwargs)


def test_from_file_precedence(tmp_path, monkeypatch):
    monkeypatch.setenv('PYATSH_MAX_WORKERS', '5')
    assert SweepConfig.from_file().workers == 5

    path = tmp_path / 'sweep.cfg'
    path.write_text(CONFIG)
    assert SweepConfig.from_file(str(path)).workers == 3
    cfg = SweepConfig.from_file(str(path), workers=7, methods=None)
    assert cfg.workers == 7
    assert cfg.methods == ['numerov4', 'atsh4-zd']

    with pytest.raises(ConfigError):
        SweepConfig.from_file(str(tmp_path / 'missing.cfg'))


def test_reference_file(tmp_path, monkeypatch):
    path = str(tmp_path / 'refs.pickle')
    assert parse_config(f'reference_file = {path}') == {'reference_file': path}

    saved = pyatsh.cache.Cache()
    saved[('problem3', (), 0.5)] = np.ones((3, 1))
    saved.save(path)
    monkeypatch.setattr(pyatsh.problems, 'reference_cache', pyatsh.cache.Cache())
    monkeypatch.setattr(pyatsh.bench, 'reference_cache', pyatsh.problems.reference_cache)

    cfg = SweepConfig(methods=['numerov4'], problems=['problem1'], reference_file=path,
                      j_ranges={('numerov4', 'problem1'): range(1, 2)})
    record, = pyatsh.run_sweep(cfg)
    assert record.ok
    np.testing.assert_array_equal(pyatsh.problems.reference_cache[('problem3', (), 0.5)],
                                  np.ones((3, 1)))

    (tmp_path / 'bad.pickle').write_bytes(b'not a pickle')
    cfg.reference_file = str(tmp_path / 'bad.pickle')
    with pytest.raises(ConfigError, match='Unable to load references'):
        pyatsh.run_sweep(cfg)


def test_plot_script(tmp_path, minerr_records):
    script = tmp_path / 'plot.py'
    pyatsh.emit(minerr_records, str(script), 'plot-script', csv_path=str(tmp_path / 'sweep.csv'))
    source = script.read_text()
    assert "'sweep.csv'" in source
    compile(source, str(script), 'exec')

    with pytest.raises(ValueError):
        pyatsh.emit(minerr_records, str(script), 'png')


def test_emit_unwritable(tmp_path, minerr_records):
    with pytest.raises(OSError, match='Unable to write'):
        pyatsh.emit(minerr_records, str(tmp_path / 'missing' / 'sweep.csv'))


def test_cli_check_order(capsys):
    assert main(['check-order', 'atsh5-pl8', '--nu', '0.5']) == 0
    out = capsys.readouterr().out
    assert 'verified order 5 (declared 5)' in out
    header = out.splitlines()[1].split()
    assert header == ['tree_id', 'rho', 'lhs', 'rhs', 'residual', 'passed']
    assert 't21' in out

    assert main(['check-order', 'atsh5-pl8', '--nu', '0.5', '--summary']) == 0
    out = capsys.readouterr().out
    assert len(out.splitlines()) == 1


def test_cli_phase(capsys):
    assert main(['phase', 'atsh4-zd', '--omega', '1', '--epsilon', '0.1']) == 0
    out = capsys.readouterr().out
    assert 'q       6' in out
    assert 'r       inf' in out


def test_cli_integrate(capsys, tmp_path):
    out = tmp_path / 'traj.csv'
    assert main(['integrate', 'numerov4', 'problem1', '--j', '3', '--out', str(out)]) == 0
    assert 'g_evals           1599' in capsys.readouterr().out
    header = out.read_text().splitlines()[0]
    assert header == 'x,y1,error'


def test_cli_stability(capsys):
    assert main(['stability', 'numerov4', '--grid', '10', '--z-min', '-1', '--z-max', '1']) == 0
    assert 'periodic' in capsys.readouterr().out


def test_cli_bench(capsys, tmp_path):
    cfg = tmp_path / 'sweep.cfg'
    cfg.write_text('j_range.classical:atsh5-minerr.problem1 = 1..2\n')
    argv = ['bench', '--config', str(cfg), '--methods', 'classical:atsh5-minerr',
            '--problems', 'problem1', '--workers', '1']
    assert main(argv) == 1
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == ','.join(pyatsh.bench.FIELDS)
    assert lines[2].endswith(',non-finite')


@pytest.mark.parametrize("argv, code", [
    (['integrate', 'numerov4', 'problem1'], 2),
    (['integrate', 'numerov4', 'problem1', '--j', '2', '--param', 'omega=3'], 1),
    (['bench', '--config', '/nonexistent/sweep.cfg'], 2),
])
def test_cli_exit_codes(argv, code):
    assert main(argv) == code
