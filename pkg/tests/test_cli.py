"""End-to-end tests of the command-line interface."""

import json
import subprocess
import sys

import pytest

from snloc.cli import main
from snloc.scene import load_measurements, load_scene

BASIC_CONFIG = """
[experiment]
name = "cli-unit"
scenario = "paper_square"
trials = 1
master_seed = 3
solvers = ["rank-reduction"]

[scene]
n_sensors = 8

[measure]
scheme = "unit_ball"
r = 1.5
"""

SWEEP_CONFIG = """
[experiment]
name = "cli-sweep"
scenario = "paper_square"
trials = 1
master_seed = 3
solvers = ["rank-reduction"]

[scene]
n_sensors = 8

[measure]
scheme = "unit_ball"

[sweep]
axis = "r"
values = [1.2, 1.6]
"""


@pytest.fixture
def basic_config(tmp_path):
    path = tmp_path / "basic.toml"
    path.write_text(BASIC_CONFIG)
    return path


def test_selfcheck_passes(capsys):
    assert main(["selfcheck"]) == 0
    out = capsys.readouterr().out
    lines = [line for line in out.splitlines() if line.strip()]
    assert len(lines) == 4
    assert all(line.startswith("ok  ") for line in lines)


def test_usage_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["solve", "--config", "x.toml", "--solver", "not-a-solver"])
    assert exc.value.code == 2


def test_simulate_writes_scene_and_measurements(tmp_path, basic_config, capsys):
    out_dir = tmp_path / "sim"
    assert (
        main(
            [
                "simulate",
                "--config",
                str(basic_config),
                "--seed",
                "5",
                "--out",
                str(out_dir),
            ]
        )
        == 0
    )
    scene = load_scene(out_dir / "scene.json")
    assert scene.n == 12
    mask, d_obs, header = load_measurements(out_dir / "measurements.json")
    assert header["n"] == 12
    assert mask.num_pairs > 0
    assert d_obs.shape == (12, 12)

    out_csv = tmp_path / "sim_csv"
    assert (
        main(
            [
                "simulate",
                "--config",
                str(basic_config),
                "--seed",
                "5",
                "--out",
                str(out_csv),
                "--format",
                "csv",
            ]
        )
        == 0
    )
    mask2, d_obs2, _ = load_measurements(out_csv / "measurements.csv")
    assert (mask2.pairs == mask.pairs).all()
    assert (d_obs2 == d_obs).all()


def test_solve_emits_json_report(tmp_path, basic_config):
    out = tmp_path / "report.json"
    code = main(
        [
            "solve",
            "--config",
            str(basic_config),
            "--solver",
            "rank-reduction",
            "--seed",
            "2",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    record = json.loads(out.read_text())
    assert set(record) == {
        "solver",
        "seed",
        "re",
        "msle",
        "iters",
        "final_grad_norm",
        "hessian_psd",
        "wall_ms",
    }
    assert record["solver"] == "rank-reduction"
    assert record["re"] < 1e-5


def test_solve_runtime_failure_exits_1(tmp_path, capsys):
    # unit_ball without a radius anywhere: synthesis fails at run time.
    bad = tmp_path / "bad.toml"
    bad.write_text(
        BASIC_CONFIG.replace("r = 1.5\n", ""),
    )
    code = main(
        ["solve", "--config", str(bad), "--solver", "rank-reduction"]
    )
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_sweep_writes_csv_and_dump(tmp_path, capsys):
    config = tmp_path / "sweep.toml"
    config.write_text(SWEEP_CONFIG)
    out = tmp_path / "sweep.csv"
    dump = tmp_path / "trials.jsonl"
    code = main(
        [
            "sweep",
            "--config",
            str(config),
            "--out",
            str(out),
            "--dump-trials",
            str(dump),
        ]
    )
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "value,solver,re_q85,msle_q85,success,wall_ms"
    assert len(lines) == 3
    assert all(line.startswith(("1.2,", "1.6,")) for line in lines[1:])
    records = [json.loads(line) for line in dump.read_text().splitlines()]
    assert len(records) == 2
    assert all(rec["solver"] == "rank-reduction" for rec in records)


def test_basin_probe_report(tmp_path):
    out = tmp_path / "probe.json"
    code = main(
        [
            "basin-probe",
            "--n",
            "40",
            "--d",
            "2",
            "--p",
            "0.9",
            "--draws",
            "5",
            "--seed",
            "0",
            "--out",
            str(out),
        ]
    )
    assert code == 0  # measured min ratio for this setting is ~16
    payload = json.loads(out.read_text())
    assert payload["n"] == 40
    assert payload["num_draws"] == 5
    assert payload["min_ratio"] >= 1.0
    assert len(payload["ratios"]) == 5
    assert payload["min_ratio"] == min(payload["ratios"])


def test_phase_grid_command(tmp_path):
    config = tmp_path / "grid.toml"
    config.write_text(
        """
[grid]
axis = "n"
axis_values = [12]
p_values = [1.0]
trials = 1
master_seed = 0
"""
    )
    out = tmp_path / "grid.csv"
    assert main(["phase-grid", "--config", str(config), "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "n,p,success"
    assert lines[1] == "12,1,1"


def test_rigidity_curve_command(tmp_path):
    config = tmp_path / "rigidity.toml"
    config.write_text(
        """
[rigidity]
r_values = [3.0]
trials = 2
master_seed = 1

[scene]
n_sensors = 8
"""
    )
    out = tmp_path / "rig.csv"
    assert (
        main(["rigidity-curve", "--config", str(config), "--out", str(out)]) == 0
    )
    lines = out.read_text().splitlines()
    assert lines[0] == "r,generically_rigid,globally_rigid"
    assert lines[1] == "3,1,1"


def test_console_entry_points():
    proc = subprocess.run(
        [sys.executable, "-m", "snloc", "selfcheck"],
        capture_output=True,
        text=True,
        timeout=120,
    )
    assert proc.returncode == 0, proc.stderr
    proc = subprocess.run(
        ["snloc", "selfcheck"], capture_output=True, text=True, timeout=120
    )
    assert proc.returncode == 0, proc.stderr
