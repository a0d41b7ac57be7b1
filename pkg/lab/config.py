"""
Experiment configuration: discovery, loading, strict validation, CLI overrides and templates.

Configs are JSON (the canonical format, echoed verbatim into reports) or TOML; the loader picks the parser from the
file suffix.
"""

import copy
import json
import math
import os
import sys
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    try:
        import tomli as tomllib
    except ImportError:
        tomllib = None  # type: ignore

from lab.exceptions import ValidationError
from lab.numerics import formulas
from lab.numerics.capacity import Condenser, SolverConfig
from lab.numerics.mapping import Domain, Scheme, mapping_from_config
from lab.numerics.verify import TestFunctionFamily

COMMANDS = ("distortion", "capacity", "verify")
CONFIG_NAMES = ("lab.json", "lab.toml")
ENV_VAR = "LAB_CONFIG"

VERIFY_CHECKS = ("adjugate", "transfer", "change_of_variables", "energy_bounds", "operator_norm", "ball_functional",
                 "capacity_distortion", "capacity_smallness")

TOP_LEVEL_KEYS = {"name", "command", "map", "domain", "image_domain", "exponents", "condenser", "family", "solver",
                  "output", "seed", "scheme", "bracket", "verify"}

REQUIRED = {
    "distortion": ("map", "domain", "exponents"),
    "capacity": ("domain", "condenser"),
    "verify": ("map", "domain", "exponents"),
}


def _is_exponent(value):
    if value == "inf":
        return True
    return isinstance(value, (int, float)) and not isinstance(value, bool) and value >= 1


def _is_number(value):
    return isinstance(value, (int, float)) and not isinstance(value, bool)


# (key, type, constraint) per section; a list constraint enumerates the allowed values
VALIDATIONS = {
    "": [
        ("name", str, None),
        ("command", str, list(COMMANDS)),
        ("seed", int, lambda x: x >= 0),
        ("bracket", bool, None),
        ("scheme", (str, dict), None),
    ],
    "exponents": [
        ("p", (int, float, str), _is_exponent),
        ("q", (int, float, str), _is_exponent),
        ("r", (int, float, str), _is_exponent),
        ("s", (int, float, str), _is_exponent),
    ],
    "output": [
        ("path", str, None),
        ("format", str, ["json", "csv"]),
        ("minimizer", str, None),
        ("profile", str, None),
    ],
    "verify": [
        ("checks", list, lambda x: all(check in VERIFY_CHECKS for check in x)),
        ("capacity_mode", str, ["inner", "outer"]),
        ("tolerance", (int, float), lambda x: _is_number(x) and x > 0),
        ("identity_tolerance", (int, float), lambda x: _is_number(x) and x > 0),
        ("density", (str, dict), None),
    ],
}


def find_config_file(explicit_path: str | None) -> Path | None:
    """
    Find the configuration file: the explicit path, lab.json or lab.toml in the working directory, then $LAB_CONFIG.
    """
    if explicit_path:
        path = Path(explicit_path)
        return path if path.exists() else None

    for name in CONFIG_NAMES:
        candidate = Path.cwd() / name
        if candidate.exists():
            return candidate

    env_var = os.getenv(ENV_VAR)
    if env_var:
        path = Path(env_var)
        return path if path.exists() else None

    return None


def read_config_file(path: Path) -> dict:
    """Parse a JSON or TOML config file."""
    path = Path(path)
    suffix = path.suffix.lower()

    if suffix == ".json":
        try:
            with open(path, encoding="utf-8") as f:
                config = json.load(f)
        except json.JSONDecodeError as e:
            raise ValidationError(f"{path} is not valid JSON: {e}") from e
    elif suffix == ".toml":
        if tomllib is None:
            raise ImportError("TOML support requires tomli for Python < 3.11. Install with: pip install tomli")
        try:
            with open(path, "rb") as f:
                config = tomllib.load(f)
        except tomllib.TOMLDecodeError as e:
            raise ValidationError(f"{path} is not valid TOML: {e}") from e
    else:
        raise ValidationError(f"unsupported config format {suffix!r}, use .json or .toml", "config")

    if not isinstance(config, dict):
        raise ValidationError("the config must be an object", "config")
    return config


def load_config(config_path: str | None = None) -> tuple[dict, Path]:
    """
    Locate and parse the configuration file.

    Raises FileNotFoundError when no file is found.
    """
    resolved_path = find_config_file(config_path)

    if resolved_path is None:
        raise FileNotFoundError("Configuration file not found. Use 'lab config template' to create one, "
                                "or specify it with --config")

    return read_config_file(resolved_path), resolved_path


def _check_section(section, values: dict):
    prefix = f"{section}." if section else ""
    known = {key for key, _, _ in VALIDATIONS[section]}

    for key, expected_type, constraint in VALIDATIONS[section]:
        if key not in values:
            continue
        value = values[key]
        if not isinstance(value, expected_type) or (expected_type is int and isinstance(value, bool)):
            raise ValidationError(f"invalid type: expected {expected_type}, got {type(value).__name__}",
                                  f"{prefix}{key}")
        if isinstance(constraint, list):
            if value not in constraint:
                raise ValidationError(f"invalid value {value!r}, must be one of {constraint}", f"{prefix}{key}")
        elif callable(constraint) and not constraint(value):
            raise ValidationError(f"invalid value {value!r}", f"{prefix}{key}")

    if section:
        unknown = set(values) - known
        if unknown:
            raise ValidationError(f"unknown keys {sorted(unknown)}", section)


def validate_config(config: dict, command: str | None = None) -> str:
    """
    Check the structure of an experiment config without building anything. Returns the command it describes.

    Unknown keys are rejected in every section.
    """
    if not isinstance(config, dict):
        raise ValidationError("the config must be an object", "config")

    unknown = set(config) - TOP_LEVEL_KEYS
    if unknown:
        raise ValidationError(f"unknown keys {sorted(unknown)}", "config")

    _check_section("", config)

    declared = config.get("command")
    if command is not None and declared is not None and declared != command:
        raise ValidationError(f"config is for {declared!r}, not {command!r}", "command")
    command = command or declared
    if command is None:
        raise ValidationError("no command given; set 'command' or use a subcommand", "command")

    for key in REQUIRED[command]:
        if key not in config:
            raise ValidationError(f"required for {command}", key)

    for section in ("exponents", "output", "verify"):
        if section in config:
            if not isinstance(config[section], dict):
                raise ValidationError("must be an object", section)
            _check_section(section, config[section])

    exponents = config.get("exponents", {})
    if command in ("distortion", "verify") and "q" not in exponents:
        raise ValidationError(f"required for {command}", "exponents.q")
    if command == "verify" and "s" not in exponents:
        raise ValidationError("required for verify", "exponents.s")

    return command


def _exponent(value):
    return math.inf if value == "inf" else float(value)


class ExperimentConfig:
    """
    A validated experiment: the parsed config plus the objects built from it.

    :param self.raw: the effective config (file values with CLI overrides applied), echoed into reports
    :param self.exponents: p, q, r, s as floats; p defaults to q, r to q/(q−1), s to 1
    """

    __slots__ = ("name", "command", "raw", "domain", "image_domain", "spec", "exponents", "condenser", "families",
                 "density", "solver", "output", "seed", "scheme", "bracket", "checks", "capacity_mode", "tolerance",
                 "identity_tolerance")

    def __init__(self, raw: dict, command: str | None = None, name: str | None = None):
        command = validate_config(raw, command)
        self.raw = raw
        self.command = command
        self.name = raw.get("name", name or command)
        self.seed = raw.get("seed", 0)
        self.bracket = raw.get("bracket", False)
        self.scheme = Scheme.parse(raw.get("scheme"))
        self.solver = SolverConfig.from_config(raw.get("solver"))

        self.output = {"path": None, "format": "json", "minimizer": None, "profile": None}
        self.output.update(raw.get("output", {}))

        self.domain = Domain.from_config(raw["domain"], "domain")
        self.image_domain = Domain.from_config(raw["image_domain"], "image_domain") if "image_domain" in raw else None
        self.spec = mapping_from_config(raw["map"], self.domain, "map") if "map" in raw else None

        exponents = {key: _exponent(value) for key, value in raw.get("exponents", {}).items()}
        if "q" in exponents:
            exponents.setdefault("p", exponents["q"])
            exponents.setdefault("r", formulas.conjugate_exponent(exponents["q"]))
            exponents.setdefault("s", 1.0)
        self.exponents = exponents

        self.condenser = None
        if "condenser" in raw:
            condenser = dict(raw["condenser"])
            if command == "verify" and "p" not in condenser:
                condenser["p"] = exponents["q"]
            self.condenser = Condenser.from_config(condenser, self.domain)

        family = raw.get("family")
        if family is None:
            self.families = None
        elif isinstance(family, list):
            self.families = [TestFunctionFamily.from_config(item, f"family[{i}]") for i, item in enumerate(family)]
        else:
            self.families = [TestFunctionFamily.from_config(family)]

        verify = raw.get("verify", {})
        self.checks = verify.get("checks")
        self.capacity_mode = verify.get("capacity_mode", "inner")
        self.tolerance = verify.get("tolerance")
        self.identity_tolerance = verify.get("identity_tolerance")
        self.density = TestFunctionFamily.from_config(verify.get("density", "constant"), "verify.density")

        if self.spec is not None and self.spec.dimension not in (None, self.domain.dimension):
            raise ValidationError(f"mapping acts on ℝ^{self.spec.dimension}, domain lives in ℝ^{self.domain.dimension}",
                                  "map")

    def __repr__(self):
        return f"ExperimentConfig({self.name}: {self.command})"

    @classmethod
    def from_file(cls, path, command: str | None = None, overrides: dict | None = None):
        raw = read_config_file(path)
        raw = merge_config_with_cli(raw, overrides or {})
        return cls(raw, command, Path(path).stem)


def merge_config_with_cli(config: dict, cli_args: dict) -> dict:
    """
    Apply CLI overrides to a config (CLI always wins). None values are ignored.

    grid sets the resolution of the domain and the image domain, tol both the inequality and the identity
    tolerance, bracket the rasterization bracketing flag, output and format the report destination.
    """
    merged = copy.deepcopy(config)

    if cli_args.get("grid") is not None:
        for key in ("domain", "image_domain"):
            if isinstance(merged.get(key), dict):
                merged[key]["grid"] = int(cli_args["grid"])

    if cli_args.get("tol") is not None:
        verify = merged.setdefault("verify", {})
        verify["tolerance"] = verify["identity_tolerance"] = float(cli_args["tol"])

    if cli_args.get("bracket"):
        merged["bracket"] = True

    for key in ("output", "format"):
        if cli_args.get(key) is not None:
            merged.setdefault("output", {})["path" if key == "output" else key] = cli_args[key]

    return merged


TEMPLATES = {
    "distortion": """# Distortion experiment
# Generated by: lab config template --command distortion
command = "distortion"
name = "diag21"

# Differentiation scheme: "analytic" or "central_fd"
scheme = "analytic"

[map]
# Family: identity, linear, radial_power, planar_stretch, grid_field, composed
family = "linear"
matrix = [[2.0, 0.0], [0.0, 1.0]]

[domain]
# Kind: box (lower, upper), ball (center, radius) or annulus (center, r_inner, r_outer)
kind = "box"
lower = [0.0, 0.0]
upper = [1.0, 1.0]
# Cells per axis
grid = 64

[exponents]
# Sobolev exponent of the mapping, q > 1 (required)
q = 2.0
# Adjugate exponent, default q/(q-1)
r = 2.0
# Outer exponent of K_{p,q}, default q; "inf" allowed
p = 2.0
# Inner exponent of K^I_{q,s}, default 1
s = 1.0

[output]
# Report path (default: stdout) and format: json or csv
format = "json"
""",
    "capacity": """# Capacity experiment
# Generated by: lab config template --command capacity
command = "capacity"
name = "annulus_p2"

# Solve again with eroded and dilated plates
bracket = false

[domain]
kind = "annulus"
center = [0.0, 0.0]
r_inner = 1.0
r_outer = 2.718281828459045
grid = 128

[condenser]
# Capacity exponent, solver range [1.1, 10]
p = 2.0

[condenser.F0]
# Plate kinds: outer_ring, inner_ring, ball (center, radius), slab (axis, side, cells), cells (indices)
kind = "outer_ring"

[condenser.F1]
kind = "inner_ring"

[solver]
tol_energy = 1e-9
max_iter = 20000
eps_schedule = [1e-2, 1e-4, 1e-6, 1e-8]

[output]
format = "json"
# Optional CSV dumps of the minimizer grid and its radial profile
# minimizer = "minimizer.csv"
# profile = "profile.csv"
""",
    "verify": """# Verification experiment
# Generated by: lab config template --command verify
command = "verify"
name = "ring_qc"
# Seed of the random matrices of the adjugate check
seed = 0

[map]
family = "identity"

[domain]
kind = "annulus"
center = [0.0, 0.0]
r_inner = 1.0
r_outer = 2.718281828459045
grid = 64

[exponents]
q = 2.5
s = 2.0

[condenser]
[condenser.F0]
kind = "outer_ring"
[condenser.F1]
kind = "inner_ring"

[family]
# Kinds: coordinate, radial_log, radius, bump, tensor_cosine, constant
kind = "coordinate"

[verify]
# Checks to run, default: every check the config supports
# checks = ["transfer", "energy_bounds", "capacity_distortion"]
# Capacity estimate: inner (K^I_{q,s}) or outer (K_{q,s})
capacity_mode = "inner"
# Inequality tolerance
tolerance = 0.05
# Relative residual allowed for the transfer and change-of-variables identities, default grid dependent
# identity_tolerance = 1e-3

[output]
format = "json"
""",
}


def generate_config_template(command: str) -> str:
    """Commented TOML template for a command."""
    if command not in TEMPLATES:
        raise ValidationError(f"unknown command {command!r}, expected one of {list(COMMANDS)}", "command")
    return TEMPLATES[command]
