import math
import os

import pandas as pd
import pytest

import cli
import scenario as sc

def test_parse_bound():
    cfg = cli.parse_args(['bound', '--regime', 'local', '--dim', '2', '--restarts', '8', '--seed', '42'])
    assert cfg.subcommand == 'bound'
    assert cfg.regime is sc.Regime.LocalHiddenVariable
    assert (cfg.dimension, cfg.restarts, cfg.seed) == (2, 8, 42)

def test_parse_simulate_angles_in_degrees():
    cfg = cli.parse_args(['simulate', '--model', 'quantum', '--shots', '1000000',
                          '--angles', '0,45,22.5,-22.5', '--seed', '7'])
    assert cfg.model == 'quantum'
    assert cfg.shots == 1000000
    assert cfg.angles.alpha2 == pytest.approx(math.pi / 4)
    assert cfg.angles.beta1 == pytest.approx(math.pi / 8)
    assert cfg.angles.beta2 == pytest.approx(7 * math.pi / 8)

def test_parse_scan_step_in_radians():
    cfg = cli.parse_args(['scan', '--step', '22.5'])
    assert cfg.step == pytest.approx(math.pi / 8)
    assert cfg.model == 'all'

@pytest.mark.parametrize('argv, flag', [
    (['bound', '--regime', 'bogus'], '--regime'),
    (['bound', '--regime', 'local', '--restarts', '0'], '--restarts'),
    (['bound'], '--regime'),
    (['simulate', '--angles', '0,45'], '--angles'),
    (['simulate', '--seed', '-1'], '--seed'),
    (['scan', '--step', '45'], '--step'),
    (['bound', '--regime', 'local', '--frobnicate'], '--frobnicate'),
])
def test_usage_errors(argv, flag, capsys):
    assert cli.main(argv) == 2
    assert flag in capsys.readouterr().err

def test_bound_classical(capsys):
    assert cli.main(['bound', '--regime', 'classical']) == 0
    out = capsys.readouterr().out
    assert 'Classical' in out
    assert 'achieved               2.000000' in out
    assert 'target                 2.000000' in out

def test_bound_local_csv(tmp_path, capsys):
    path = tmp_path / 'bound.csv'
    argv = ['bound', '--regime', 'local', '--dim', '2', '--restarts', '8', '--seed', '42', '--output', str(path)]
    assert cli.main(argv) == 0
    assert '2.828427' in capsys.readouterr().out
    frame = pd.read_csv(path)
    assert list(frame.columns) == cli.BOUND_COLUMNS
    assert frame['achieved'].iloc[0] == pytest.approx(2 * math.sqrt(2), abs=1e-6)
    assert frame['seed'].iloc[0] == 42

def test_check_local_scenario(scenario_dir, capsys):
    assert cli.main(['check', os.path.join(scenario_dir, 'local_pauli.ini')]) == 0
    out = capsys.readouterr().out
    assert 'LocalHiddenVariable' in out
    assert 'a1,a2' in out

def test_check_shared_scenario(scenario_dir, capsys):
    assert cli.main(['check', os.path.join(scenario_dir, 'shared_nonlocal.ini')]) == 0
    assert 'Nonlocal' in capsys.readouterr().out

def test_expect_optimal_scenario(scenario_dir, capsys):
    assert cli.main(['expect', os.path.join(scenario_dir, 'optimal_chsh.ini')]) == 0
    out = capsys.readouterr().out
    assert 'expectation            2.828427' in out
    assert 'swap delta' in out

def test_unreadable_scenario(tmp_path, capsys):
    path = str(tmp_path / 'nowhere.ini')
    assert cli.main(['expect', path]) == 1
    assert path in capsys.readouterr().err

def test_missing_config(tmp_path, capsys):
    path = str(tmp_path / 'absent.ini')
    assert cli.main(['--config', path, 'bound', '--regime', 'classical']) == 1
    assert path in capsys.readouterr().err

def test_computational_error_exits_one(tmp_path, capsys):
    path = tmp_path / 'bad.ini'
    path.write_text('a1 = diag 3 0\na2 = pauli_x\nb1 = pauli_z\nb2 = pauli_x\n', encoding='utf-8')
    assert cli.main(['check', str(path)]) == 1
    assert 'outside' in capsys.readouterr().err

def test_simulate_csv_is_reproducible(tmp_path, capsys):
    first, second = tmp_path / 'a.csv', tmp_path / 'b.csv'
    for path in (first, second):
        assert cli.main(['simulate', '--shots', '20000', '--seed', '7', '--output', str(path)]) == 0
    assert first.read_bytes() == second.read_bytes()
    frame = pd.read_csv(first)
    assert frame['model'].iloc[0] == 'quantum'
    assert abs(frame['S'].iloc[0] - 2 * math.sqrt(2)) <= 4 * frame['sigma'].iloc[0]
    assert 'S' in capsys.readouterr().out

def test_seed_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv('BELLBOUND_SEED', '9')
    path = tmp_path / 'sim.csv'
    assert cli.main(['simulate', '--model', 'malus', '--shots', '1000', '--output', str(path)]) == 0
    assert pd.read_csv(path)['seed'].iloc[0] == 9

def test_seed_from_config(tmp_path):
    config = tmp_path / 'config.ini'
    config.write_text('[CONFIG]\nSEED=123\nSHOTS=500\n', encoding='utf-8')
    path = tmp_path / 'sim.csv'
    assert cli.main(['--config', str(config), 'simulate', '--output', str(path)]) == 0
    frame = pd.read_csv(path)
    assert frame['seed'].iloc[0] == 123
    assert frame['shots'].iloc[0] == 500

def test_scan_writes_csv(capsys):
    assert cli.main(['scan', '--model', 'quantum', '--step', '22.5', '--shots', '1000', '--seed', '1']) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == 'phi,model,shots,S,sigma,S_exact,seed'
    assert len(lines) == 4

def test_report_with_experimental_value(tmp_path, capsys):
    path = tmp_path / 'report.csv'
    argv = ['report', '--restarts', '2', '--experimental', '2.828', '--seed', '42', '--output', str(path)]
    assert cli.main(argv) == 0
    frame = pd.read_csv(path)
    assert list(frame['regime']) == ['Classical', 'LocalHiddenVariable', 'Nonlocal']
    assert list(frame['consistent']) == [False, True, True]

def test_tolerance_and_solver_flags(scenario_dir, capsys):
    argv = ['check', os.path.join(scenario_dir, 'local_pauli.ini'), '--tol-commutator', '5', '--solver', 'numpy']
    assert cli.main(argv) == 0
    assert 'Classical' in capsys.readouterr().out

def test_unknown_gradient_in_config(tmp_path, capsys):
    config = tmp_path / 'config.ini'
    config.write_text('[CONFIG]\nGRADIENT=secant\n', encoding='utf-8')
    assert cli.main(['--config', str(config), 'bound', '--regime', 'nonlocal']) == 1
    assert 'secant' in capsys.readouterr().err
