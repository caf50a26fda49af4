from pathlib import Path

import numpy as np
import pytest

from liftrom.cli import main
from liftrom.config import ExperimentConfig, parse_method
from liftrom.harness import ExperimentRunner, run_experiment
from liftrom.storage import load_matrix


def _mini_config(out_dir, **overrides):
    base = dict(
        name="sg1d-mini", model="sine-gordon-1d", nx=48, ny=None, dt=0.02,
        train_t_end=1.0, test_t_end=1.5, snapshot_stride=1,
        two_r_list=[4, 6],
        methods=[parse_method("lifting"), parse_method("psd"),
                 parse_method("spdeim(2r)")],
        out_dir=Path(out_dir), timing_runs=1,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


def test_wave_experiment_artifacts_and_reports(tmp_path):
    cfg = _mini_config(tmp_path / "run")
    result = run_experiment(cfg)
    assert len(result.reports) == 6  # 2 sizes x 3 methods
    for rep in result.reports:
        assert {"train", "test"} <= set(rep.regimes)
        assert rep.regimes["train"].rel_err_q >= 0.0
        assert rep.wall_seconds > 0.0
    out = tmp_path / "run"
    assert (out / "metrics.csv").exists()
    assert (out / "timings.csv").exists()
    assert (out / "offline_costs.csv").exists()
    cost_lines = (out / "offline_costs.csv").read_text().splitlines()
    assert cost_lines[0] == "model,method,two_r,mu,component,seconds"
    components = {line.split(",")[4] for line in cost_lines[1:]}
    assert "lifted_snapshots_and_svd" in components
    assert "quadratic_projection" in components
    assert "jacobian_snapshots_and_svd" in components
    assert (out / "snapshots" / "Q.splm").exists()
    assert (out / "bases" / "phi_2r4.splm").exists()
    assert (out / "roms" / "lifting_2r4" / "Br.splm").exists()
    assert (out / "runs" / "lifting_2r4" / "energy_lifted.csv").exists()
    assert (out / "operators" / "sine-gordon-1d_A.spso").exists()
    header = (out / "metrics.csv").read_text().splitlines()[0]
    assert header.startswith("model,method,two_r")


def test_metrics_csv_deterministic_across_runs(tmp_path):
    cfg_a = _mini_config(tmp_path / "a")
    cfg_b = _mini_config(tmp_path / "b")
    run_experiment(cfg_a)
    run_experiment(cfg_b)
    assert (tmp_path / "a" / "metrics.csv").read_bytes() == (
        tmp_path / "b" / "metrics.csv"
    ).read_bytes()


def test_snapshot_reuse_from_disk(tmp_path):
    cfg = _mini_config(tmp_path / "c")
    runner = ExperimentRunner(cfg)
    runner.simulate_fom()
    first_wall = runner.fom_wall
    assert first_wall > 0.0
    runner2 = ExperimentRunner(_mini_config(tmp_path / "c"))
    runner2.simulate_fom()
    assert runner2.fom_wall == 0.0  # loaded, not simulated


def test_stage_methods_persist_their_artifacts(tmp_path):
    cfg = _mini_config(tmp_path / "d", two_r_list=[4])
    runner = ExperimentRunner(cfg)
    runner.build_bases()
    out = tmp_path / "d"
    assert (out / "bases" / "phi_2r4.splm").exists()
    assert (out / "bases" / "lifting_w1_2r4.splm").exists()
    assert not (out / "roms").exists()
    runner.build_roms()
    assert (out / "roms" / "lifting_2r4" / "Ar.splm").exists()
    assert (out / "roms" / "spdeim(2r)_2r4" / "Vdeim.splm").exists()
    assert (out / "roms" / "psd_Dhat_2r4.splm").exists()
    # Bases are cached: Phi on disk equals the in-memory one.
    phi = load_matrix(out / "bases" / "phi_2r4.splm")
    np.testing.assert_array_equal(phi, runner._phi(2).matrix)


def test_cli_stages(tmp_path):
    cfg_text = f"""
[experiment]
name = cli-mini
model = sine-gordon-1d

[grid]
nx = 32

[time]
dt = 0.05
train_t_end = 0.5
test_t_end = 0.5

[reduction]
two_r = 4
methods = lifting

[output]
dir = {tmp_path / "cli-out"}
timing_runs = 1
"""
    cfg_path = tmp_path / "mini.cfg"
    cfg_path.write_text(cfg_text)
    assert main(["simulate-fom", "--config", str(cfg_path)]) == 0
    assert (tmp_path / "cli-out" / "snapshots" / "Q.splm").exists()
    assert main(["build-basis", "--config", str(cfg_path)]) == 0
    assert main(["build-rom", "--config", str(cfg_path)]) == 0
    assert main(["run-rom", "--config", str(cfg_path)]) == 0
    assert main(["experiment", "--config", str(cfg_path)]) == 0
    assert (tmp_path / "cli-out" / "metrics.csv").exists()
    # Output directory override.
    assert main(
        ["experiment", "--config", str(cfg_path), "--out", str(tmp_path / "o2"),
         "--seed", "3"]
    ) == 0
    assert (tmp_path / "o2" / "metrics.csv").exists()


def test_standard_lifting_rejected_for_non_sine_gordon(tmp_path):
    cfg = _mini_config(
        tmp_path / "e", model="exp-wave", name="bad",
        methods=[parse_method("standard-lifting")], two_r_list=[4],
    )
    with pytest.raises(ValueError, match="sine-Gordon"):
        run_experiment(cfg)


def test_kgz_mini_experiment(tmp_path):
    cfg = ExperimentConfig(
        name="kgz-mini", model="kgz", nx=10, ny=10, dt=0.02,
        train_t_end=0.2, test_t_end=0.3, snapshot_stride=1,
        two_r_list=[6], methods=[parse_method("lifting")],
        out_dir=tmp_path / "kgz", timing_runs=1,
    )
    result = run_experiment(cfg)
    (rep,) = result.reports
    assert rep.reduced_dim == 7 * 3
    assert rep.regimes["train"].rel_err_q >= 0.0
    assert result.diagnostics["nonjoint_residual_2r6"] > 1e-8
    assert (tmp_path / "kgz" / "diagnostics.csv").exists()
    assert (tmp_path / "kgz" / "snapshots" / "VARPHI.splm").exists()


def test_parametric_mini_experiment(tmp_path):
    cfg = ExperimentConfig(
        name="kg-mini", model="klein-gordon", nx=10, ny=10, dt=0.1,
        train_t_end=0.5, test_t_end=0.5, snapshot_stride=1,
        two_r_list=[6], methods=[parse_method("lifting"), parse_method("psd")],
        mu_train=[0.2, 0.6, 1.0], mu_test=[1.2],
        out_dir=tmp_path / "kg", timing_runs=1,
    )
    result = run_experiment(cfg)
    assert len(result.reports) == 2
    for rep in result.reports:
        assert set(rep.regimes) == {"train", "test"}
    assert (tmp_path / "kg" / "snapshots" / "mu_0.2" / "Q.splm").exists()
    assert (tmp_path / "kg" / "runs").exists()
