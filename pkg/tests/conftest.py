import json
import math

import pytest

from lab.numerics.mapping import Domain, IdentityMap, LinearMap, RadialPowerMap


@pytest.fixture
def unit_square():
    return Domain.box([0.0, 0.0], [1.0, 1.0], grid=16)


@pytest.fixture
def ring():
    """annulus(1, e): every ring capacity has a round closed form on it."""
    return Domain.annulus([0.0, 0.0], 1.0, math.e, grid=32)


@pytest.fixture
def annulus12():
    return Domain.annulus([0.0, 0.0], 1.0, 2.0, grid=64)


@pytest.fixture
def identity():
    return IdentityMap()


@pytest.fixture
def diag21():
    return LinearMap.diagonal(2.0, 1.0)


@pytest.fixture
def squaring():
    return RadialPowerMap(2.0)


@pytest.fixture
def write_config(tmp_path):
    """Write a config dict as JSON into the test directory and return its path."""

    def write(config, name="experiment.json"):
        path = tmp_path / name
        path.write_text(json.dumps(config), encoding="utf-8")
        return path

    return write


@pytest.fixture
def ring_verify_config():
    return {
        "name": "ring_qc",
        "command": "verify",
        "map": {"family": "identity"},
        "domain": {"kind": "annulus", "n": 2, "center": [0.0, 0.0], "r_inner": 1.0, "r_outer": math.e, "grid": 24},
        "exponents": {"q": 2.5, "s": 2.0},
        "verify": {"checks": ["adjugate", "transfer", "change_of_variables", "energy_bounds", "ball_functional"]},
    }


@pytest.fixture
def diag_distortion_config():
    return {
        "name": "diag21",
        "command": "distortion",
        "map": {"family": "linear", "matrix": [[2.0, 0.0], [0.0, 1.0]]},
        "domain": {"kind": "box", "n": 2, "lower": [0.0, 0.0], "upper": [1.0, 1.0], "grid": 16},
        "exponents": {"q": 2.0, "r": 2.0},
    }
