import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from lab.cli import cli
from lab.exceptions import ValidationError
from lab.suite import EXIT_SOLVER, EXIT_USAGE, SUMMARY_COLUMNS, read_manifest, run_one, run_suite, suite_exit_code

SUITES = Path(__file__).parent.parent / "lab" / "suites"


@pytest.fixture
def manifest(tmp_path, write_config, ring_verify_config, diag_distortion_config):
    """A two-experiment manifest listed out of name order."""

    def write(*lines):
        path = tmp_path / "suite.manifest"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path

    write_config(ring_verify_config, "ring_qc.json")
    write_config(diag_distortion_config, "diag21.json")
    return write


class TestManifest:
    def test_comments_and_relative_paths(self, tmp_path):
        path = tmp_path / "suite.manifest"
        path.write_text("# experiments\n\nfirst.json  # inline\n/abs/second.toml\n", encoding="utf-8")
        assert read_manifest(path) == [tmp_path / "first.json", Path("/abs/second.toml")]

    def test_empty(self, tmp_path):
        path = tmp_path / "suite.manifest"
        path.write_text("# nothing here\n", encoding="utf-8")
        with pytest.raises(ValidationError, match="no experiments"):
            read_manifest(path)


@pytest.mark.parametrize("codes, expected", [
    ([0, 0], 0),
    ([0, 2], 2),
    ([2, 1, 0], 1),
    ([1, EXIT_SOLVER], EXIT_SOLVER),
    ([EXIT_SOLVER, EXIT_USAGE, 2], EXIT_USAGE),
    ([], 0),
])
def test_suite_exit_code(codes, expected):
    assert suite_exit_code(codes) == expected


class TestRunOne:
    def test_missing_config(self, tmp_path):
        run = run_one(tmp_path / "missing.json")
        assert run["exit_code"] == EXIT_USAGE
        assert run["rows"][0]["status"] == "missing"
        assert tuple(run["rows"][0]) == SUMMARY_COLUMNS

    def test_invalid_config(self, write_config, ring_verify_config):
        ring_verify_config["domain"]["r_inner"] = 3.0
        run = run_one(write_config(ring_verify_config))
        assert run["exit_code"] == EXIT_USAGE
        assert "domain.r_inner" in run["rows"][0]["message"]

    def test_verify_rows(self, write_config, ring_verify_config):
        run = run_one(write_config(ring_verify_config))
        assert run["exit_code"] == 0
        assert {row["status"] for row in run["rows"]} == {"passed"}
        assert run["rows"][0]["name"] == "adjugate_identity"

    def test_other_commands_give_one_row(self, write_config, diag_distortion_config):
        run = run_one(write_config(diag_distortion_config))
        assert len(run["rows"]) == 1
        assert run["rows"][0]["status"] == "done"
        assert run["rows"][0]["name"] == "distortion"
        assert "member" in run["rows"][0]["message"]

    def test_solver_failure(self, write_config):
        path = write_config({
            "command": "capacity",
            "domain": {"kind": "box", "n": 2, "lower": [0, 0], "upper": [1, 1], "grid": 16},
            "condenser": {"p": 2, "F0": {"kind": "slab", "axis": 0, "side": "low", "cells": 2},
                          "F1": {"kind": "slab", "axis": 0, "side": "high", "cells": 2}},
            "solver": {"max_iter": 1, "jacobi_sweeps": 0},
        })
        assert run_one(path)["exit_code"] == EXIT_SOLVER


class TestRunSuite:
    def test_rows_sorted_by_config(self, manifest):
        result = run_suite(manifest("ring_qc.json", "diag21.json"))
        assert [run["config"] for run in result.runs] == ["diag21", "ring_qc"]
        assert result.exit_code == 0

    def test_parallel_matches_serial(self, manifest):
        path = manifest("ring_qc.json", "diag21.json")
        assert run_suite(path, jobs=2).to_csv() == run_suite(path, jobs=1).to_csv()

    def test_missing_entry(self, manifest):
        result = run_suite(manifest("diag21.json", "absent.json"))
        assert result.exit_code == EXIT_USAGE
        assert result.counts() == {"done": 1, "missing": 1}

    def test_forced_failure(self, manifest, write_config, ring_verify_config):
        ring_verify_config.update(name="radial", map={"family": "radial_power", "a": 2.0},
                                  verify={"checks": ["change_of_variables"]})
        write_config(ring_verify_config, "radial.json")
        result = run_suite(manifest("radial.json", "diag21.json"), overrides={"tol": 1e-15})
        assert result.exit_code == 1
        assert any(row["status"] == "failed" for row in result.rows)

    def test_csv_summary(self, manifest):
        lines = run_suite(manifest("diag21.json")).to_csv().splitlines()
        assert lines[0] == ",".join(SUMMARY_COLUMNS)
        assert lines[1].startswith("diag21,distortion,done")


class TestSuiteCommand:
    def test_json_summary(self, manifest, tmp_path):
        output = tmp_path / "summary.json"
        result = CliRunner().invoke(cli, ["suite", str(manifest("diag21.json", "ring_qc.json")), "-o", str(output),
                                          "--format", "json"])
        assert result.exit_code == 0, result.output
        summary = json.loads(output.read_text(encoding="utf-8"))
        assert summary["experiments"] == 2
        assert summary["exit_code"] == 0

    def test_empty_manifest(self, manifest):
        result = CliRunner().invoke(cli, ["suite", str(manifest("# nothing"))])
        assert result.exit_code == EXIT_USAGE
        assert "no experiments" in result.output

    @pytest.mark.slow
    def test_bundled_suite(self, tmp_path):
        output = tmp_path / "summary.csv"
        result = CliRunner().invoke(cli, ["suite", str(SUITES / "builtin.manifest"), "-j", "2", "-o", str(output)])
        assert result.exit_code == 0, output.read_text(encoding="utf-8") if output.exists() else result.output
