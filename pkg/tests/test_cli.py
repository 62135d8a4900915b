import json
import math
from pathlib import Path

import pytest

from pmclab.artifacts import load_solution_csv
from pmclab.cli import main
from pmclab.config import ConfigError, apply_overrides, parse_config

REPO = Path(__file__).resolve().parent.parent
CONFIGS = REPO / "configs"
GOLDEN = Path(__file__).resolve().parent / "golden"


def run_cli(tmp_path, command, config_name, overrides=()):
    out = tmp_path / "out"
    argv = [command, "--config", str(CONFIGS / config_name),
            "--out", str(out)]
    for ov in overrides:
        argv += ["--override", ov]
    code = main(argv)
    return code, out


class TestParseConfig:
    def test_defaults(self):
        cfg = parse_config({
            "command": "solve",
            "domain": {"type": "disk", "R": 1.0},
            "problem": {"H": 0.8, "bc": "robin", "alpha": 1.0},
        })
        assert cfg.mesh["h_target"] == 0.1
        assert cfg.solver["newton_tol"] == 1e-10
        assert cfg.problem["t"] == 1.0
        assert cfg.config_hash

    def test_homotopy_default_schedule(self):
        cfg = parse_config({
            "command": "homotopy",
            "domain": {"type": "disk", "R": 1.0},
            "problem": {"H": 0.8, "bc": "robin", "alpha": 1.0},
        })
        assert len(cfg.problem["schedule"]) == 11
        assert cfg.problem["schedule"][-1] == 1.0

    def test_robin_with_c_rejected(self):
        with pytest.raises(ConfigError) as exc:
            parse_config({
                "command": "solve",
                "domain": {"type": "disk", "R": 1.0},
                "problem": {"H": 0.8, "bc": "robin", "alpha": 1.0, "c": 0.5},
            })
        assert exc.value.path == "problem.c"

    def test_t_out_of_range_rejected(self):
        with pytest.raises(ConfigError) as exc:
            parse_config({
                "command": "solve",
                "domain": {"type": "disk", "R": 1.0},
                "problem": {"H": 0.8, "bc": "robin", "alpha": 1.0, "t": 1.5},
            })
        assert exc.value.path == "problem.t"

    def test_unknown_key_rejected_with_path(self):
        with pytest.raises(ConfigError) as exc:
            parse_config({
                "command": "solve",
                "domain": {"type": "disk", "R": 1.0, "radius": 2.0},
                "problem": {"H": 0.8, "bc": "robin", "alpha": 1.0},
            })
        assert "domain.radius" in str(exc.value)

    def test_cli_subcommand_wins(self):
        cfg = parse_config({
            "command": "solve",
            "domain": {"type": "disk", "R": 1.0},
            "problem": {"H": 0.8, "bc": "robin", "alpha": 1.0},
        }, command="verify")
        assert cfg.command == "verify"

    def test_overrides(self):
        doc = {"command": "solve",
               "domain": {"type": "disk", "R": 1.0},
               "problem": {"H": 0.8, "bc": "robin", "alpha": 1.0}}
        apply_overrides(doc, ["mesh.h_target=0.2", "problem.H=0.5"])
        cfg = parse_config(doc)
        assert cfg.mesh["h_target"] == 0.2
        assert cfg.problem["H"] == 0.5

    def test_hash_changes_with_content(self):
        base = {"command": "solve",
                "domain": {"type": "disk", "R": 1.0},
                "problem": {"H": 0.8, "bc": "robin", "alpha": 1.0}}
        a = parse_config(base).config_hash
        b = parse_config(apply_overrides(dict(base), ["problem.H=0.5"]))
        assert a != b.config_hash


class TestExitCodes:
    def test_verify_pass_is_zero(self, tmp_path):
        code, out = run_cli(tmp_path, "verify", "robin_disk.json",
                            ["mesh.h_target=0.1"])
        assert code == 0
        rep = json.loads((out / "report.json").read_text())
        assert rep["status"] == "ok"
        assert rep["verification"]["verdict"] == "pass"

    def test_infeasible_is_four_and_no_solve(self, tmp_path):
        code, out = run_cli(tmp_path, "verify", "neumann_infeasible.json")
        assert code == 4
        rep = json.loads((out / "report.json").read_text())
        assert rep["status"] == "infeasible"
        assert rep["solve"] is None
        assert not (out / "solution.csv").exists()

    def test_solve_infeasible_gated_upstream(self, tmp_path):
        code, out = run_cli(tmp_path, "solve", "neumann_infeasible.json")
        assert code == 4

    def test_invalid_config_is_four(self, tmp_path):
        code, _ = run_cli(tmp_path, "verify", "robin_disk.json",
                          ["problem.t=1.5"])
        assert code == 4

    def test_nonconvergence_is_three(self, tmp_path):
        code, out = run_cli(tmp_path, "solve", "robin_disk.json",
                            ["problem.H=2.6", "mesh.h_target=0.2",
                             "solver.max_iter=10"])
        assert code == 3
        rep = json.loads((out / "report.json").read_text())
        assert rep["status"] == "solver-failure"


class TestArtifacts:
    def test_solve_writes_all_files(self, tmp_path):
        code, out = run_cli(tmp_path, "solve", "robin_disk.json",
                            ["mesh.h_target=0.1"])
        assert code == 0
        for name in ("report.json", "solution.csv", "critical_points.csv",
                     "contours.svg"):
            assert (out / name).exists(), name

    def test_artifacts_carry_config_hash(self, tmp_path):
        code, out = run_cli(tmp_path, "solve", "robin_disk.json",
                            ["mesh.h_target=0.1"])
        rep = json.loads((out / "report.json").read_text())
        h = rep["config_hash"]
        assert f"# config={h}" in (out / "solution.csv").read_text()
        assert f"config={h}" in (out / "contours.svg").read_text()
        assert f"# config={h}" in (out / "critical_points.csv").read_text()

    def test_solution_roundtrip(self, tmp_path):
        code, out = run_cli(tmp_path, "solve", "robin_disk.json",
                            ["mesh.h_target=0.1"])
        cfg_hash, mesh_hash, values = load_solution_csv(out / "solution.csv")
        rep = json.loads((out / "report.json").read_text())
        assert cfg_hash == rep["config_hash"]
        assert mesh_hash == rep["mesh"]["mesh_hash"]
        assert len(values) == rep["mesh"]["n_vertices"]

    def test_compare_writes_nodal_artifacts(self, tmp_path):
        code, out = run_cli(tmp_path, "compare", "compare_robin_disk.json",
                            ["mesh.h_target=0.1"])
        assert code == 0
        rep = json.loads((out / "report.json").read_text())
        assert (out / "nodal_arcs.csv").exists()
        assert rep["nodal"]["critical_point"] is not None

    def test_mesh_report(self, tmp_path):
        code, out = run_cli(tmp_path, "mesh-report", "robin_disk.json",
                            ["mesh.h_target=0.2"])
        assert code == 0
        rep = json.loads((out / "report.json").read_text())
        assert rep["mesh"]["min_angle_deg"] >= 20.0
        assert rep["mesh"]["h"] <= 1.5 * 0.2

    def test_homotopy_command(self, tmp_path):
        code, out = run_cli(tmp_path, "homotopy", "robin_disk.json",
                            ["mesh.h_target=0.15"])
        assert code == 0
        rep = json.loads((out / "report.json").read_text())
        assert len(rep["homotopy"]["steps"]) == 11
        assert all(s["minima"] == 1 for s in rep["homotopy"]["steps"])

    def test_axisym_command(self, tmp_path):
        code, out = run_cli(tmp_path, "axisym", "ball3d_robin.json",
                            ["mesh.h_target=0.1"])
        assert code == 0
        rep = json.loads((out / "report.json").read_text())
        assert rep["axisym"]["monotone"]["holds"]
        entries = rep["axisym"]["axis_hessian"]["entries"]
        assert all(e > 0 for e in entries)
        assert math.fsum(entries) == pytest.approx(0.8, rel=0.1)


class TestDeterminism:
    def test_rerun_byte_identical(self, tmp_path):
        _, out1 = run_cli(tmp_path / "a", "verify", "robin_disk.json",
                          ["mesh.h_target=0.1"])
        _, out2 = run_cli(tmp_path / "b", "verify", "robin_disk.json",
                          ["mesh.h_target=0.1"])
        for name in ("report.json", "solution.csv", "critical_points.csv",
                     "contours.svg"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
