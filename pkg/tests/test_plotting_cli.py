from __future__ import annotations

import json
import warnings

import numpy as np
import pytest

from lojalab import cli, experiment, plotting, rates
from lojalab.engine import ConfigError, Trajectory


def _power_traj(p=-2.0, points=200):
    g = np.geomspace(1.0, 1000.0, points)
    q = g ** p
    return Trajectory(np.arange(points), g, q, q.copy(), theta=(1.0 / g)[:, None])


def test_plotdata_empty_warns(tmp_path):
    traj = Trajectory(np.arange(5), np.arange(5.0), np.zeros(5), np.zeros(5))
    with pytest.warns(UserWarning):
        dropped = plotting.emit_plotdata(traj, "f_gap", tmp_path / "p.dat")
    assert dropped == 4


def test_plotdata_slope_matches_fit(tmp_path):
    traj = _power_traj(-1.5)
    fit = rates.fit_loglog(traj, "f_gap", predicted=1.5)
    path = tmp_path / "p.dat"
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        plotting.emit_plotdata(traj, "f_gap", path, fit=fit)
    data = np.loadtxt(path)
    assert data.shape == (200, 4)
    slope = np.polyfit(data[:, 0], data[:, 1], 1)[0]
    assert slope == pytest.approx(fit.slope, abs=1e-9)
    assert np.allclose(data[:, 2], data[:, 1], atol=1e-9)


def test_figures_are_written(tmp_path):
    traj = _power_traj(-2.0)
    fit = rates.fit_loglog(traj, "f_gap", predicted=2.0)
    a = plotting.render_rate_figure(traj, [fit], tmp_path / "a.png", title="t")
    b = plotting.render_rate_figure(traj, [fit], tmp_path / "b.png", title="t")
    assert a.read_bytes()[:4] == b"\x89PNG" and a.read_bytes() == b.read_bytes()
    s = plotting.render_series_figure(traj.gamma, {"q": traj.f}, tmp_path / "s.png", logy=True)
    assert s.stat().st_size > 0


def _quick_sgd(**extra):
    data = {"name": "quick", "kind": "sgd", "objective": {"id": "quadratic", "dim": 1},
            "theta0": [1.0], "schedule": {"a": 0.8, "c": 0.5, "r": 1.4}, "max_iters": 20_000,
            "noise": {"kind": "iid_gaussian", "sigma": 0.1}}
    data.update(extra)
    return data


def test_config_error_names_field():
    data = _quick_sgd()
    del data["schedule"]["a"]
    with pytest.raises(ConfigError) as e:
        experiment.parse_config(data)
    assert "schedule.a" in str(e.value)
    with pytest.raises(ConfigError):
        experiment.parse_config(_quick_sgd(kind="bogus"))
    with pytest.raises(ConfigError):
        experiment.parse_config(_quick_sgd(repetitions=0))


def test_repetitions_write_distinct_files(tmp_path):
    cfg = experiment.parse_config(_quick_sgd(repetitions=3), seed=10)
    res = experiment.run_experiment(cfg, tmp_path)
    files = sorted(p.name for p in res.outdir.glob("trajectory_*.csv"))
    assert files == ["trajectory_r0_s10.csv", "trajectory_r1_s11.csv", "trajectory_r2_s12.csv"]
    contents = {(res.outdir / f).read_bytes() for f in files}
    assert len(contents) == 3
    assert (res.outdir / "summary.txt").exists() and (res.outdir / "rates.csv").exists()
    assert list(res.outdir.glob("fig_*.png"))
    assert not [p for p in tmp_path.iterdir() if p.name.startswith(".")]


def test_parallel_equals_serial(tmp_path):
    cfg = experiment.parse_config(_quick_sgd(repetitions=2))
    a = experiment.run_experiment(cfg, tmp_path / "a", jobs=1)
    b = experiment.run_experiment(cfg, tmp_path / "b", jobs=2)
    for p in sorted(a.outdir.glob("*.csv")):
        assert p.read_bytes() == (b.outdir / p.name).read_bytes()


def test_cli_run_is_byte_identical(tmp_path):
    cfg_path = tmp_path / "quick.json"
    cfg_path.write_text(json.dumps(_quick_sgd()))
    assert cli.main(["run", str(cfg_path), "--out", str(tmp_path / "o1")]) == 0
    assert cli.main(["run", str(cfg_path), "--out", str(tmp_path / "o2")]) == 0
    for p in sorted((tmp_path / "o1" / "quick").iterdir()):
        assert p.read_bytes() == (tmp_path / "o2" / "quick" / p.name).read_bytes(), p.name


def test_cli_config_error_exit_code(tmp_path, capsys):
    data = _quick_sgd()
    del data["schedule"]["a"]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(data))
    assert cli.main(["run", str(path), "--out", str(tmp_path)]) == 2
    assert "config error: schedule.a" in capsys.readouterr().err
    assert not (tmp_path / "bad").exists()
    assert cli.main(["run", str(tmp_path / "missing.json")]) == 2


def test_cli_validate_schedule(capsys):
    assert cli.main(["validate-schedule", "--a", "0.8", "--r", "1.2", "--horizon", "100000"]) == 0
    assert "(1, 1.5)" in capsys.readouterr().out
    assert cli.main(["validate-schedule", "--a", "0.7"]) == 1
    assert cli.main(["validate-schedule"]) == 2


def test_cli_rates_on_trajectory(tmp_path, capsys):
    path = _power_traj(-2.0).to_csv(tmp_path / "t.csv")
    # the final iterate is its own limit point, so its theta gap is dropped with a warning
    with pytest.warns(UserWarning, match="dropped 1 rows"):
        code = cli.main(["rates", str(path), "--mu", "1.3333333333333333", "--out", str(tmp_path / "r")])
    assert code == 0
    assert "f_gap" in capsys.readouterr().out
    assert (tmp_path / "r" / "rates.csv").exists() and (tmp_path / "r" / "fig_rates.png").exists()


def test_cli_arma_sim_uses_env_root(tmp_path, monkeypatch):
    monkeypatch.setenv("LOJA_OUT", str(tmp_path / "env"))
    assert cli.main(["arma-sim", "--steps", "100", "--seed", "3"]) == 0
    out = tmp_path / "env" / "arma_signal_s3.csv"
    assert out.exists() and len(out.read_text().splitlines()) == 101


def test_cli_arma_ident_and_mlp_train(tmp_path):
    assert cli.main(["arma-ident", "--steps", "20000", "--out", str(tmp_path)]) in (0, 1)
    assert list((tmp_path / "arma_ident").glob("*.csv"))
    assert cli.main(["mlp-train", "--steps", "5000", "--eval-size", "500", "--out", str(tmp_path)]) in (0, 1)
    assert list((tmp_path / "mlp_train").glob("*.csv"))


def test_shipped_configs_parse():
    paths = sorted(experiment.shipped_config_dir().glob("*.json"))
    assert len(paths) >= 10
    for p in paths:
        experiment.load_config(p)
