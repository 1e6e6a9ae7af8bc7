import json

import numpy as np
import pytest
from click.testing import CliRunner

from ilqr_track.cli import main
from ilqr_track.config import ConfigError, ExperimentConfig, load_config
from ilqr_track.harness import (
    TRAJECTORY_CSV_HEADER,
    fixed_duration_dt,
    gnuplot_script,
    read_trajectory_csv,
    rescore_trajectory_csv,
    run_compare,
    run_experiment,
    write_trajectory_csv,
)
from ilqr_track.path import read_path_csv


def write_config(tmp_path, data, name="cfg.json"):
    f = tmp_path / name
    f.write_text(json.dumps(data))
    return f


def test_default_config_values():
    cfg = ExperimentConfig()
    assert cfg.path.params.n_points == 200
    assert cfg.controller.selected() == ["lqr", "ilqr"]
    assert len(cfg.perturbation.compare_set) == 6
    assert all(len(v) == 7 for v in cfg.perturbation.compare_set)
    np.testing.assert_array_equal(cfg.perturbation.initial_offset(), np.zeros(7))


def test_config_roundtrip_through_dict():
    cfg = ExperimentConfig.from_dict(
        {
            "path": {"height": 1.5, "n_points": 120},
            "weights": {"Q": [1, 1, 1, 0, 0, 0, 0], "R": [0.5, 0.5]},
            "solver": {"max_iterations": 20},
            "controller": {"type": "ilqr", "lqr_substeps": 3},
            "perturbation": {"offset": [0.1, 0.0], "seed": 4},
        }
    )
    assert cfg.path.params.height == 1.5
    assert cfg.weights.Q[0] == 1.0
    assert cfg.perturbation.offset == (0.1, 0, 0, 0, 0, 0, 0)
    assert ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg


@pytest.mark.parametrize(
    "data",
    [
        {"bogus": {}},
        {"path": {"n_points": 1}},
        {"path": {"colour": "red"}},
        {"weights": {"R": [1.0, 0.0]}},
        {"weights": {"Q": [1, 2, 3]}},
        {"solver": {"mu_factor": 0.5}},
        {"controller": {"type": "pid"}},
        {"controller": {"lqr_substeps": 0}},
        {"perturbation": {"noise_std": [-1]}},
        {"perturbation": {"offset": [0] * 8}},
        [],
    ],
)
def test_invalid_config_rejected(data):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(data)


def test_load_config_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(bad)
    with pytest.raises(OSError):
        load_config(tmp_path / "missing.json")


def test_seeded_noise_is_reproducible():
    cfg = ExperimentConfig.from_dict({"perturbation": {"noise_std": [0.1, 0.1, 0.05]}})
    a = cfg.with_seed(3).perturbation.initial_offset()
    b = cfg.with_seed(3).perturbation.initial_offset()
    c = cfg.with_seed(4).perturbation.initial_offset()
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)
    assert np.all(a[3:] == 0.0)


def test_run_experiment_reports_both_controllers():
    result = run_experiment(ExperimentConfig())
    report = result.report()
    assert report["schema"] == "ilqr_track.run/1"
    assert set(report["controllers"]) == {"lqr", "ilqr"}
    ilqr = report["controllers"]["ilqr"]
    assert ilqr["converged"] is True
    assert ilqr["iterations"] >= 1
    assert len(ilqr["cost_history"]) >= 1
    for name in ("lqr", "ilqr"):
        assert set(report["controllers"][name]["metrics"]) == {"pos_rmse", "heading_rmse", "max_pos_err", "terminal_pos_err"}
    json.dumps(report)


def test_compare_same_controller_has_zero_deltas():
    cfg = ExperimentConfig.from_dict({"controller": {"baseline": "lqr", "candidate": "lqr"}})
    report = run_compare(cfg).report()
    assert len(report["cases"]) == 7
    for case in report["cases"]:
        assert all(v == 0.0 for v in case["delta"].values())


def test_compare_sweep_rows():
    cfg = ExperimentConfig()
    report = run_compare(cfg, sweep_n=(50, 100)).report()
    assert [row["n_points"] for row in report["sweep"]] == [50, 100]
    for row in report["sweep"]:
        assert row["dt"] * row["n_points"] == pytest.approx(cfg.path.params.dt * cfg.path.params.n_points)
    assert fixed_duration_dt(cfg, 400) == pytest.approx(0.05)


def test_trajectory_csv_roundtrip_rescores_identically(tmp_path, bell_path):
    res = run_experiment(ExperimentConfig(), bell_path).results["ilqr"]
    f = tmp_path / "traj.csv"
    write_trajectory_csv(f, res.X, res.U, bell_path)
    cols = read_trajectory_csv(f)
    assert tuple(cols) == TRAJECTORY_CSV_HEADER
    assert len(cols["t"]) == len(bell_path)
    assert np.isnan(cols["u_v"][-1])
    np.testing.assert_array_equal(cols["x"], res.X[:, 0])
    m = rescore_trajectory_csv(f)
    for k, v in res.metrics.as_dict().items():
        assert getattr(m, k) == pytest.approx(v, rel=1e-12, abs=1e-15)


def test_gnuplot_script_mentions_files():
    script = gnuplot_script(["a.csv", "b.csv"])
    assert "'a.csv' using 7:8" in script and "'b.csv' using 2:3" in script


def test_cli_path_generate(tmp_path):
    out = tmp_path / "out"
    r = CliRunner().invoke(main, ["path", "generate", "--out", str(out)])
    assert r.exit_code == 0, r.output
    path = read_path_csv(out / "path.csv", dt=0.1)
    assert len(path) == 200
    assert path.s[0] == 0.0


@pytest.mark.filterwarnings("ignore:consecutive path points")
@pytest.mark.parametrize("n, height", [(2, 2.0), (50, 0.0)])
def test_cli_path_generate_from_config(tmp_path, n, height):
    cfg = write_config(tmp_path, {"path": {"n_points": n, "height": height}})
    out = tmp_path / "out"
    r = CliRunner().invoke(main, ["path", "generate", "--config", str(cfg), "--out", str(out)])
    assert r.exit_code == 0, r.output
    path = read_path_csv(out / "path.csv", dt=0.1, v_max=100.0)
    assert len(path) == n
    if height == 0.0:
        assert np.allclose(path.points[:, 1], np.tan(0.3) * path.points[:, 0])


def test_cli_malformed_config_exits_1_without_output(tmp_path):
    cfg = write_config(tmp_path, {"path": {"n_points": 1}})
    out = tmp_path / "out"
    for args in (["path", "generate"], ["run"], ["compare"]):
        r = CliRunner().invoke(main, [*args, "--config", str(cfg), "--out", str(out)])
        assert r.exit_code == 1
        assert not out.exists()


def test_cli_missing_config_exits_2(tmp_path):
    out = tmp_path / "out"
    r = CliRunner().invoke(main, ["run", "--config", str(tmp_path / "nope.json"), "--out", str(out)])
    assert r.exit_code == 2
    assert not out.exists()


def test_cli_run_writes_outputs(tmp_path):
    out = tmp_path / "out"
    r = CliRunner().invoke(main, ["run", "--out", str(out), "--plot-script"])
    assert r.exit_code == 0, r.output
    report = json.loads((out / "report.json").read_text())
    assert report["controllers"]["lqr"]["trajectory_csv"] == "trajectory_lqr.csv"
    assert (out / "trajectory_ilqr.csv").exists() and (out / "plot.gp").exists()
    assert "converged=True" in r.output


def test_cli_run_is_deterministic(tmp_path):
    cfg = write_config(tmp_path, {"perturbation": {"noise_std": [0.05, 0.05, 0.02], "seed": 7}})
    outs = [tmp_path / "a", tmp_path / "b"]
    for out in outs:
        assert CliRunner().invoke(main, ["run", "--config", str(cfg), "--out", str(out)]).exit_code == 0
    for name in ("trajectory_lqr.csv", "trajectory_ilqr.csv"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    other = tmp_path / "c"
    CliRunner().invoke(main, ["run", "--config", str(cfg), "--out", str(other), "--seed", "8"])
    assert (other / "trajectory_lqr.csv").read_bytes() != (outs[0] / "trajectory_lqr.csv").read_bytes()


def test_cli_compare(tmp_path):
    out = tmp_path / "out"
    r = CliRunner().invoke(main, ["compare", "--out", str(out), "--sweep-n", "50,100"])
    assert r.exit_code == 0, r.output
    report = json.loads((out / "compare.json").read_text())
    assert report["schema"] == "ilqr_track.compare/1"
    assert [c["name"] for c in report["cases"]][0] == "nominal"
    assert len(report["sweep"]) == 2
    assert (out / "trajectory_baseline_lqr.csv").exists()
    assert (out / "trajectory_candidate_ilqr.csv").exists()
    assert "n=50" in r.output


def test_cli_compare_rejects_bad_sweep(tmp_path):
    out = tmp_path / "out"
    for sweep in ("abc", "1"):
        r = CliRunner().invoke(main, ["compare", "--out", str(out), "--sweep-n", sweep])
        assert r.exit_code == 1
    assert not out.exists()


def test_cli_run_with_csv_path(tmp_path):
    CliRunner().invoke(main, ["path", "generate", "--out", str(tmp_path)])
    cfg = write_config(tmp_path, {"path": {"csv": "path.csv"}, "controller": {"type": "lqr"}})
    out = tmp_path / "out"
    r = CliRunner().invoke(main, ["run", "--config", str(cfg), "--out", str(out)])
    assert r.exit_code == 0, r.output
    assert set(json.loads((out / "report.json").read_text())["controllers"]) == {"lqr"}
