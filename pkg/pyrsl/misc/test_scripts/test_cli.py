import json
import os

import numpy as np
import pandas as pd
import pytest

from pyrsl.helpers import geometry
from pyrsl.helpers.geometry import PointCloud
from pyrsl.helpers.instances import ball_instance, save_instance
from pyrsl.helpers.prob import uniform_space
from pyrsl.helpers.randomset import RandomCloud
from pyrsl.mains.cli import EXIT_FAILED, EXIT_GUARD, EXIT_INPUT, EXIT_OK, build_parser, config_from_args, run


def test_verify_hulls_passes(tmp_path):
    out = tmp_path / 'hulls.json'
    assert run(['verify', 'hulls', '--seed', '7', '--trials', '4', '--out', str(out)]) == EXIT_OK
    report = json.loads(out.read_text())
    assert report['schema'] == 'rsl/1'
    assert report['suite'] == 'hulls'
    assert report['pass'] is True
    assert report['config']['seed'] == 7
    assert all(e['instances'] >= 1 for e in report['entries'])


def test_verify_kernel_and_aumann_pass():
    assert run(['verify', 'kernel', '--seed', '3', '--trials', '5']) == EXIT_OK
    assert run(['verify', 'aumann', '--seed', '3', '--trials', '3']) == EXIT_OK


def test_verify_barycenter_passes():
    assert run(['verify', 'barycenter', '--seed', '1', '--trials', '10', '--grid', '2']) == EXIT_OK


def test_verify_extreme_instances(capsys):
    assert run(['verify', 'extreme', '--example', '8.6']) == EXIT_OK
    assert 'f1 is not extreme in dec A' in capsys.readouterr().out
    assert run(['verify', 'extreme', '--instance', 'split-step']) == EXIT_OK
    assert 'f1 is not extreme in dec A' in capsys.readouterr().out
    assert run(['verify', 'extreme', '--seed', '2', '--trials', '5']) == EXIT_OK


def test_verify_extreme_on_circle_constants(capsys):
    assert run(['verify', 'extreme', '--example', '8.5']) == EXIT_OK
    assert 'e(dec A) = dec e(A)' in capsys.readouterr().out


def reject_constant(name):
    raise ValueError(f"non-finite number {name} in report")


def test_negative_set_tolerance_fails_verification(tmp_path, monkeypatch):
    monkeypatch.delenv('RSL_GUARD_MAX', raising=False)
    tol_before = geometry.TOL_SET_EQ
    out = tmp_path / 'extreme.json'
    assert run(['verify', 'extreme', '--example', '8.6', '--tol-set-eq', '-1', '--out', str(out)]) == EXIT_FAILED
    report = json.loads(out.read_text(), parse_constant=reject_constant)
    assert report['pass'] is False
    assert report['config']['tol_set_eq'] == -1

    # run settings reach the suites as arguments, never as module or process state
    assert geometry.TOL_SET_EQ == tol_before
    assert 'RSL_GUARD_MAX' not in os.environ


def test_grid_flag_reaches_the_hulls_suite(tmp_path):
    parser = build_parser()
    assert config_from_args(parser.parse_args(['verify', 'hulls', '--grid', '3'])).suite_grid == 3
    assert config_from_args(parser.parse_args(['verify', 'hulls'])).suite_grid == 2

    out = tmp_path / 'hulls.json'
    assert run(['verify', 'hulls', '--grid', '1', '--trials', '3', '--out', str(out)]) == EXIT_OK
    assert json.loads(out.read_text())['config']['suite_grid'] == 1


def test_unknown_suite_is_an_input_error():
    with pytest.raises(SystemExit) as exc:
        run(['verify', 'nonsense'])
    assert exc.value.code == EXIT_INPUT


def test_convexification_csv_is_reproducible(tmp_path):
    first, second = tmp_path / 'a.csv', tmp_path / 'b.csv'
    for out in (first, second):
        assert run(['experiment', 'convexification', '--n', '1', '10', '100', '--no-timing', '--out', str(out)]) == EXIT_OK
    assert first.read_bytes() == second.read_bytes()

    table = pd.read_csv(first)
    assert table['n'].tolist() == [1, 10, 100]
    assert 'runtime_ms' not in table.columns
    assert np.allclose(table['gap'], 1 / (2 * table['n']), atol=1e-12)


def test_example67_names_the_staircase_series(tmp_path):
    out = tmp_path / 'example67.csv'
    assert run(['experiment', 'example67', '--n', '2', '3', '--no-timing', '--out', str(out)]) == EXIT_OK
    table = pd.read_csv(out)
    assert table['N'].tolist() == [2, 3]
    assert table['pass'].all()


def test_staircase_and_shrink_gap_experiments(tmp_path):
    out = tmp_path / 'staircase.csv'
    assert run(['experiment', 'staircase', '--n', '2', '3', '4', '5', '--out', str(out)]) == EXIT_OK
    table = pd.read_csv(out)
    assert table['pass'].all()
    assert table['kernel_pass'].all()
    assert 'runtime_ms' in table.columns

    assert run(['experiment', 'shrink-gap', '--no-timing']) == EXIT_OK


def test_expect_on_ball_instance(tmp_path):
    path = tmp_path / 'balls.json'
    save_instance(ball_instance(np.random.default_rng(5), 2, 3), path)
    out = tmp_path / 'expect.json'
    assert run(['expect', str(path), '--out', str(out)]) == EXIT_OK

    report = json.loads(out.read_text())
    assert report['command'] == 'expect'
    assert report['result']['method'] == 'minkowski'
    assert report['closed_form']['law'] == 'ball'
    assert report['closed_form']['gap'] <= 1e-12
    support = pd.read_csv(tmp_path / 'expect_support.csv')
    assert len(support) == 256


def test_expect_on_cloud_prints_json(tmp_path, capsys):
    path = tmp_path / 'cloud.json'
    save_instance(RandomCloud(uniform_space(2), (PointCloud([[0.0], [1.0]]),) * 2), path)
    assert run(['expect', str(path)]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report['result']['hausdorff_gap'] == pytest.approx(0.25, abs=1e-12)
    assert sorted(p[0] for p in report['result']['aumann']['points']) == [0.0, 0.5, 1.0]
    assert 'closed_form' not in report


def test_malformed_instance_exits_with_input_error(tmp_path):
    path = tmp_path / 'broken.json'
    path.write_text('{"weights": [0.5, 0.5], "values": [')
    assert run(['expect', str(path)]) == EXIT_INPUT

    path.write_text(json.dumps({"weights": [0.5, 0.6], "values": [{"points": [[0]]}, {"points": [[1]]}]}))
    assert run(['expect', str(path)]) == EXIT_INPUT

    assert run(['expect', str(tmp_path / 'missing.json')]) == EXIT_INPUT

    path.write_bytes(b'\xff\xfe{"weights": [1.0]}')
    assert run(['expect', str(path)]) == EXIT_INPUT


def test_oversized_enumeration_hits_the_guard(tmp_path, monkeypatch):
    path = tmp_path / 'large.json'
    cloud = PointCloud(np.arange(10, dtype=float).reshape(-1, 1))
    save_instance(RandomCloud(uniform_space(3), (cloud,) * 3), path)
    monkeypatch.setenv('RSL_GUARD_MAX', '100')
    assert run(['expect', str(path)]) == EXIT_GUARD
