import math
from pathlib import Path

import pytest

from lab import __version__
from lab.config import ExperimentConfig
from lab.exceptions import ConvergenceError
from lab.experiment import default_checks, partial_report, run_experiment

SUITES = Path(__file__).parent.parent / "lab" / "suites"

SLAB_CAPACITY = {
    "name": "slab16",
    "command": "capacity",
    "domain": {"kind": "box", "n": 2, "lower": [0.0, 0.0], "upper": [1.0, 1.0], "grid": 16},
    "condenser": {"p": 2.0, "F0": {"kind": "slab", "axis": 0, "side": "low", "cells": 2},
                  "F1": {"kind": "slab", "axis": 0, "side": "high", "cells": 2}},
}


@pytest.fixture
def slab_capacity():
    return {**SLAB_CAPACITY, "condenser": dict(SLAB_CAPACITY["condenser"])}


class TestDistortion:
    def test_diag21(self, diag_distortion_config):
        result = run_experiment(ExperimentConfig(diag_distortion_config))
        assert result.exit_code == 0
        assert result.result["ball_class_verdict"] == "member"
        assert result.result["K_I_qs"] == pytest.approx(2.0)
        assert result.result["adj_Lr_norm"] == pytest.approx(2.0)
        assert result.lines[0].startswith("diag21: member")

    def test_report_envelope(self, diag_distortion_config):
        report = run_experiment(ExperimentConfig(diag_distortion_config)).report()
        assert set(report) == {"name", "command", "lab_version", "config", "result"}
        assert report["lab_version"] == __version__
        assert report["config"] == diag_distortion_config


class TestCapacity:
    def test_ring_oracle(self):
        raw = {"command": "capacity",
               "domain": {"kind": "annulus", "center": [0, 0], "r_inner": 1, "r_outer": math.e, "grid": 32},
               "condenser": {"p": 2, "F0": {"kind": "outer_ring"}, "F1": {"kind": "inner_ring"}}}
        result = run_experiment(ExperimentConfig(raw))
        assert result.result["oracle"] == pytest.approx(2 * math.pi)
        assert result.result["relative_error"] < 0.1

    def test_no_oracle_for_slabs(self, slab_capacity):
        result = run_experiment(ExperimentConfig(slab_capacity))
        assert "oracle" not in result.result
        assert result.result["value"] == pytest.approx(16 / 13, rel=1e-2)

    def test_bracket(self, slab_capacity):
        slab_capacity["bracket"] = True
        bracket = run_experiment(ExperimentConfig(slab_capacity)).result["bracket"]
        assert bracket["eroded"] <= bracket["dilated"]

    def test_image_capacity(self, slab_capacity):
        slab_capacity["map"] = {"family": "linear", "matrix": [[2.0, 0.0], [0.0, 1.0]]}
        result = run_experiment(ExperimentConfig(slab_capacity))
        # stretching the gap by 2 halves the 2-capacity of the slabs
        assert result.result["image"]["value"] == pytest.approx(result.result["value"] / 2, rel=1e-2)

    def test_minimizer_and_profile_files(self, slab_capacity, tmp_path):
        slab_capacity["output"] = {"minimizer": str(tmp_path / "u.csv"), "profile": str(tmp_path / "profile.csv")}
        run_experiment(ExperimentConfig(slab_capacity))
        assert (tmp_path / "u.csv").read_text(encoding="utf-8").startswith("x0,x1,u\n")
        assert (tmp_path / "profile.csv").exists()

    def test_partial_report(self, slab_capacity):
        slab_capacity["solver"] = {"max_iter": 1, "jacobi_sweeps": 0}
        config = ExperimentConfig(slab_capacity)
        with pytest.raises(ConvergenceError) as excinfo:
            run_experiment(config)
        report = partial_report(config, excinfo.value)
        assert report["result"]["partial"]["converged"] is False
        assert "did not converge" in report["result"]["error"]


class TestVerify:
    def test_ring_identity(self, ring_verify_config):
        result = run_experiment(ExperimentConfig(ring_verify_config))
        assert result.exit_code == 0
        assert result.result["counts"]["failed"] == 0
        names = [verdict.name for verdict in result.verdicts]
        assert names[:2] == ["adjugate_identity", "transfer_identity"]
        assert "change_of_variables[constant]" in names
        assert result.lines[-1].endswith("0 failed, 0 vacuous")

    def test_forced_failure(self, ring_verify_config):
        ring_verify_config["map"] = {"family": "radial_power", "a": 2.0}
        ring_verify_config["verify"] = {"checks": ["change_of_variables"], "identity_tolerance": 1e-15}
        result = run_experiment(ExperimentConfig(ring_verify_config))
        assert result.exit_code == 1
        assert result.result["exit_code"] == 1

    def test_default_checks_for_the_ring(self, ring_verify_config):
        del ring_verify_config["verify"]
        ring_verify_config["condenser"] = {"F0": {"kind": "outer_ring"}, "F1": {"kind": "inner_ring"}}
        assert default_checks(ExperimentConfig(ring_verify_config)) == [
            "adjugate", "transfer", "change_of_variables", "energy_bounds", "operator_norm", "ball_functional",
            "capacity_distortion", "capacity_smallness"]

    def test_default_checks_without_exact_image(self):
        config = ExperimentConfig.from_file(SUITES / "slab_shear.json")
        assert default_checks(config) == ["adjugate", "capacity_distortion"]

    def test_default_checks_without_condenser(self):
        config = ExperimentConfig.from_file(SUITES / "ring_qc.json")
        config.checks = None
        assert "capacity_distortion" not in default_checks(config)

    def test_same_exponents_skip_inner_estimates(self, ring_verify_config):
        del ring_verify_config["verify"]
        ring_verify_config["exponents"] = {"q": 2.0, "s": 2.0}
        ring_verify_config["condenser"] = {"F0": {"kind": "outer_ring"}, "F1": {"kind": "inner_ring"}}
        checks = default_checks(ExperimentConfig(ring_verify_config))
        assert "transfer" not in checks and "capacity_distortion" not in checks
        ring_verify_config["verify"] = {"capacity_mode": "outer"}
        assert "capacity_distortion" in default_checks(ExperimentConfig(ring_verify_config))
