import json
import os

import pytest

from wfdual.cli import main
from wfdual.config import ConfigError, ExperimentConfig


BASE = """
[drift]
coeffs = [0.0]

[initial]
kind = "gaussian_bump"
a = 0.3
b = 0.4

[run]
points = [0.0, 0.5]
T = 0.05
domain_X = 8.0
dx = 0.03125
dt_particles = 1e-3
reps_field = 60
reps_dual = 400
seed = 7
output_dir = "{out}"
"""


def write_cfg(tmp_path, body, name="cfg.toml"):
    path = tmp_path / name
    path.write_text(body.replace("{out}", str(tmp_path / "out")))
    return str(path)


def test_coeffs_binomial_scan(capsys):
    rc = main(["coeffs", "--binomial-q", "0.5", "--k", "8",
               "--scan-r", "1.0,2.0"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "condition at R=1: pass" in out
    assert "condition at R=2: fail" in out
    assert "tail mass" in out


def test_coeffs_requires_input(capsys):
    assert main(["coeffs"]) == 2


def test_unknown_key_rejected(tmp_path):
    cfg = write_cfg(tmp_path, BASE + "\ntypo_key = 1\n")
    assert main(["duality", "--config", cfg]) == 2


def test_unknown_run_key_rejected(tmp_path):
    bad = BASE.replace("seed = 7", "seed = 7\nrepz = 3")
    cfg = write_cfg(tmp_path, bad)
    assert main(["duality", "--config", cfg]) == 2


def test_missing_config_file():
    assert main(["duality", "--config", "/nonexistent.toml"]) == 2


def test_duality_subcommand_small(tmp_path, capsys):
    cfg = write_cfg(tmp_path, BASE)
    rc = main(["duality", "--config", cfg])
    assert rc == 0
    payload = json.loads((tmp_path / "out" / "duality.json").read_text())
    assert {"lhs", "rhs", "z", "pass", "config_hash", "timestamp"} <= set(payload)
    assert payload["pass"] is True


def test_outputs_byte_identical_modulo_timestamp(tmp_path):
    cfg = write_cfg(tmp_path, BASE)
    main(["duality", "--config", cfg])
    first = json.loads((tmp_path / "out" / "duality.json").read_text())
    main(["duality", "--config", cfg])
    second = json.loads((tmp_path / "out" / "duality.json").read_text())
    first.pop("timestamp")
    second.pop("timestamp")
    assert first == second


def test_spde_snapshot_csv(tmp_path):
    body = BASE + "\nsnapshot_times = [0.0, 0.05]\n"
    body = body.replace("snapshot_times", "snapshot_times", 1)
    cfg = write_cfg(tmp_path, BASE.replace(
        'output_dir = "{out}"',
        'output_dir = "{out}"\nsnapshot_times = [0.0, 0.05]'))
    rc = main(["spde", "--config", cfg])
    assert rc == 0
    text = (tmp_path / "out" / "field_snapshots.csv").read_text()
    lines = text.splitlines()
    assert lines[0].startswith("# config_hash=")
    assert lines[1] == "t,x,u"
    assert len(lines) > 10


def test_dual_trajectory_and_coupled(tmp_path):
    body = """
[drift]
coeffs = [0.0, -1.0]
b_inf = 1.0

[run]
points = [0.0, 0.3]
T = 0.2
dt_particles = 1e-2
seed = 3
output_dir = "{out}"
sample_times = [0.05, 0.1, 0.15, 0.2]
m = 4
"""
    cfg = write_cfg(tmp_path, body)
    assert main(["dual", "--config", cfg]) == 0
    pop = (tmp_path / "out" / "population.csv").read_text().splitlines()
    assert pop[1] == "t,|I|,n_branch,n_branch_neg,K"
    term = json.loads((tmp_path / "out" / "terminal.json").read_text())
    assert all("." not in lab or lab.count(".") >= 1
               for lab in term["labels"])
    rc = main(["dual", "--config", cfg, "--coupled-m", "2,4,6"])
    assert rc == 0
    for m in (2, 4, 6):
        assert (tmp_path / "out" / f"population_m{m}.csv").exists()


def test_moments_subcommand(tmp_path):
    body = """
[drift]
coeffs = [0.0, -1.0]
b_inf = 1.0

[initial]
kind = "one"

[run]
seed = 5
dt_particles = 1e-2
reps = 40
output_dir = "{out}"

[moments]
x = 0.0
t = 0.1
l_list = [1, 2]
m_list = [2, 4]
"""
    cfg = write_cfg(tmp_path, body)
    rc = main(["moments", "--config", cfg])
    assert rc == 0
    grid = (tmp_path / "out" / "moments_grid.csv").read_text().splitlines()
    assert grid[1] == "l,m,mean,stderr,reps"
    assert len(grid) == 6  # comment + header + 4 cells


def test_diagnose_branching(tmp_path):
    body = """
[drift]
coeffs = [0.0, -1.0, 1.0]

[run]
points = [0.0, 0.0]
T = 0.1
dt_particles = 1e-3
reps = 400
seed = 6
output_dir = "{out}"
"""
    cfg = write_cfg(tmp_path, body)
    rc = main(["diagnose", "--config", cfg, "--check", "branching"])
    assert rc == 0
    payload = json.loads(
        (tmp_path / "out" / "diagnostic_branching.json").read_text())
    assert payload["check"] == "branching"
    assert payload["pass"] is True


def test_diagnose_rejects_thin_replication(tmp_path):
    body = BASE.replace("reps_field = 60", "reps = 50\nreps_field = 60")
    cfg = write_cfg(tmp_path, body)
    assert main(["diagnose", "--config", cfg, "--check", "branching"]) == 2


def test_config_round_trip_and_hash(tmp_path):
    cfg_path = write_cfg(tmp_path, BASE)
    cfg = ExperimentConfig.from_toml(cfg_path)
    again = ExperimentConfig.from_dict(
        {"drift": cfg.drift, "initial": cfg.initial,
         "run": {"points": cfg.points, "T": cfg.T, "domain_X": cfg.domain_X,
                 "dx": cfg.dx, "dt_particles": cfg.dt_particles,
                 "reps_field": cfg.reps_field, "reps_dual": cfg.reps_dual,
                 "seed": cfg.seed, "output_dir": cfg.output_dir}})
    assert cfg.config_hash() == again.config_hash()
    assert cfg.canonical_dict() == again.canonical_dict()


def test_config_error_conditions():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"drift": {"coeffs": [0.0]},
                                    "run": {"dt_field": 1.0}})
