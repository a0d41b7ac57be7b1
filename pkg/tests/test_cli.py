import json
import math

import pytest
from click.testing import CliRunner

from lab import __version__
from lab.cli import cli
from lab.suite import EXIT_SOLVER, EXIT_USAGE


@pytest.fixture
def runner():
    return CliRunner()


def read_report(path):
    return json.loads(path.read_text(encoding="utf-8"))


def test_version(runner):
    result = runner.invoke(cli, ["--version"])
    assert result.exit_code == 0
    assert __version__ in result.output


class TestExperimentCommands:
    def test_verify_passes(self, runner, write_config, ring_verify_config, tmp_path):
        config = write_config(ring_verify_config)
        output = tmp_path / "report.json"
        result = runner.invoke(cli, ["verify", "-c", str(config), "-o", str(output)])

        assert result.exit_code == 0, result.output
        report = read_report(output)
        assert report["result"]["counts"]["failed"] == 0
        assert report["config"] == ring_verify_config
        assert "created" not in json.dumps(report)
        meta = read_report(tmp_path / "report.json.meta.json")
        assert meta["lab_version"] == __version__
        assert "created" in meta

    def test_reports_are_deterministic(self, runner, write_config, ring_verify_config, tmp_path):
        config = write_config(ring_verify_config)
        first, second = tmp_path / "first.json", tmp_path / "second.json"
        runner.invoke(cli, ["verify", "-c", str(config), "-o", str(first)])
        runner.invoke(cli, ["verify", "-c", str(config), "-o", str(second)])
        assert first.read_bytes() == second.read_bytes()

    def test_csv_report(self, runner, write_config, ring_verify_config, tmp_path):
        config = write_config(ring_verify_config)
        output = tmp_path / "report.csv"
        result = runner.invoke(cli, ["verify", "-c", str(config), "-o", str(output), "--format", "csv"])
        assert result.exit_code == 0, result.output
        lines = output.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "name,status,kind,lhs,rhs,slack,tolerance_used"
        assert lines[1].startswith("adjugate_identity,passed,identity")

    def test_forced_failure(self, runner, write_config, ring_verify_config, tmp_path):
        ring_verify_config["map"] = {"family": "radial_power", "a": 2.0}
        ring_verify_config["verify"] = {"checks": ["change_of_variables"]}
        config = write_config(ring_verify_config)
        output = tmp_path / "report.json"
        result = runner.invoke(cli, ["verify", "-c", str(config), "-o", str(output), "--tol", "1e-15"])

        assert result.exit_code == 1
        verdicts = read_report(output)["result"]["verdicts"]
        assert [verdict["status"] for verdict in verdicts] == ["failed"]
        assert verdicts[0]["tolerance_used"] == 1e-15

    def test_distortion(self, runner, write_config, diag_distortion_config, tmp_path):
        config = write_config(diag_distortion_config)
        output = tmp_path / "report.json"
        result = runner.invoke(cli, ["distortion", "-c", str(config), "-o", str(output)])

        assert result.exit_code == 0, result.output
        assert "diag21: member" in result.output
        report = read_report(output)["result"]
        assert report["ball_class_verdict"] == "member"
        assert report["K_I_qs"] == pytest.approx(2.0)

    def test_grid_override_is_echoed(self, runner, write_config, diag_distortion_config, tmp_path):
        config = write_config(diag_distortion_config)
        output = tmp_path / "report.json"
        runner.invoke(cli, ["distortion", "-c", str(config), "-o", str(output), "--grid", "8"])
        assert read_report(output)["config"]["domain"]["grid"] == 8

    def test_capacity(self, runner, write_config, tmp_path):
        config = write_config({
            "command": "capacity",
            "domain": {"kind": "annulus", "center": [0, 0], "r_inner": 1, "r_outer": math.e, "grid": 32},
            "condenser": {"p": 2, "F0": {"kind": "outer_ring"}, "F1": {"kind": "inner_ring"}},
        }, "ring.json")
        output = tmp_path / "report.json"
        result = runner.invoke(cli, ["capacity", "-c", str(config), "-o", str(output)])

        assert result.exit_code == 0, result.output
        report = read_report(output)
        assert report["name"] == "ring"
        assert report["result"]["oracle"] == pytest.approx(2 * math.pi)

    def test_solver_failure(self, runner, write_config, tmp_path):
        config = write_config({
            "command": "capacity",
            "domain": {"kind": "box", "n": 2, "lower": [0, 0], "upper": [1, 1], "grid": 16},
            "condenser": {"p": 2, "F0": {"kind": "slab", "axis": 0, "side": "low", "cells": 2},
                          "F1": {"kind": "slab", "axis": 0, "side": "high", "cells": 2}},
            "solver": {"max_iter": 1, "jacobi_sweeps": 0},
        })
        output = tmp_path / "report.json"
        result = runner.invoke(cli, ["capacity", "-c", str(config), "-o", str(output)])

        assert result.exit_code == EXIT_SOLVER
        assert read_report(output)["result"]["partial"]["converged"] is False


class TestUsageErrors:
    def test_missing_config(self, runner, tmp_path):
        result = runner.invoke(cli, ["verify", "-c", str(tmp_path / "missing.json")])
        assert result.exit_code == EXIT_USAGE

    def test_invalid_annulus(self, runner, write_config, ring_verify_config):
        ring_verify_config["domain"]["r_inner"] = 3.0
        result = runner.invoke(cli, ["verify", "-c", str(write_config(ring_verify_config))])
        assert result.exit_code == EXIT_USAGE
        assert "domain.r_inner" in result.output

    def test_command_mismatch(self, runner, write_config, ring_verify_config):
        result = runner.invoke(cli, ["distortion", "-c", str(write_config(ring_verify_config))])
        assert result.exit_code == EXIT_USAGE
        assert "command" in result.output

    def test_bad_grid(self, runner, write_config, ring_verify_config):
        result = runner.invoke(cli, ["verify", "-c", str(write_config(ring_verify_config)), "--grid", "0"])
        assert result.exit_code != 0


class TestConfigCommands:
    def test_template_then_validate(self, runner, tmp_path):
        path = tmp_path / "lab.toml"
        result = runner.invoke(cli, ["config", "template", "--command", "capacity", "-o", str(path)])
        assert result.exit_code == 0, result.output
        assert path.exists()

        result = runner.invoke(cli, ["config", "validate", "-c", str(path)])
        assert result.exit_code == 0, result.output
        assert "(capacity)" in result.output

    def test_template_to_stdout(self, runner):
        result = runner.invoke(cli, ["config", "template"])
        assert result.exit_code == 0
        assert 'command = "verify"' in result.output

    def test_template_keeps_existing_file(self, runner, tmp_path):
        path = tmp_path / "lab.toml"
        path.write_text("keep", encoding="utf-8")
        result = runner.invoke(cli, ["config", "template", "-o", str(path)], input="n\n")
        assert "Aborted." in result.output
        assert path.read_text(encoding="utf-8") == "keep"

    def test_validate_invalid(self, runner, write_config):
        path = write_config({"command": "verify", "domain": {"kind": "box"}})
        result = runner.invoke(cli, ["config", "validate", "-c", str(path)])
        assert result.exit_code == EXIT_USAGE
        assert "invalid" in result.output

    def test_validate_missing(self, runner, tmp_path):
        result = runner.invoke(cli, ["config", "validate", "-c", str(tmp_path / "missing.toml")])
        assert result.exit_code == EXIT_USAGE
