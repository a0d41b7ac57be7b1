"""
Experiment core: run one validated experiment and build its report.

This module is shared by the CLI subcommands and the suite runner.
"""

import logging

from lab import __version__, reports
from lab.config import ExperimentConfig
from lab.exceptions import ConvergenceError, NoClosedFormInverseError, ValidationError
from lab.numerics import formulas
from lab.numerics.capacity import (analytic_ring_capacity, bracket_capacity, capacity_of_compact, image_condenser,
                                   solve_capacity)
from lab.numerics.distortion import ball_membership
from lab.numerics.mapping import image_domain_of, inverse_spec, sample_grid
from lab.numerics.verify import (adjugate_identity_check, ball_functional_check, capacity_distortion_check,
                                 capacity_smallness_check, change_of_variables_residual, energy_bounds_check,
                                 exit_status, family_members, operator_norm_lower_bound, transfer_identity_residual)

logger = logging.getLogger(__name__)


class ExperimentResult:
    """
    :param self.result: JSON-ready result section of the report
    :param self.verdicts: VerificationVerdict list for verify runs, empty otherwise
    :param self.lines: one-line summaries for the terminal
    """

    __slots__ = "config", "result", "verdicts", "exit_code", "lines"

    def __init__(self, config: ExperimentConfig, result: dict, verdicts=None, exit_code=0, lines=None):
        self.config = config
        self.result = result
        self.verdicts = verdicts or []
        self.exit_code = exit_code
        self.lines = lines or []

    def __repr__(self):
        return f"ExperimentResult({self.config.name}: exit {self.exit_code})"

    def report(self) -> dict:
        return build_report(self.config, self.result)


def build_report(config: ExperimentConfig, result: dict) -> dict:
    return {"name": config.name, "command": config.command, "lab_version": __version__, "config": config.raw,
            "result": result}


def partial_report(config: ExperimentConfig, error: ConvergenceError) -> dict:
    """Report of a capacity solve that exhausted its iteration budget."""
    partial = error.partial.to_dict() if error.partial is not None else None
    return build_report(config, {"error": str(error), "partial": partial})


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    runners = {"distortion": run_distortion, "capacity": run_capacity, "verify": run_verify}
    logger.info("running %r", config)
    return runners[config.command](config)


def run_distortion(config: ExperimentConfig) -> ExperimentResult:
    exponents = config.exponents
    field = sample_grid(config.spec, config.domain, config.scheme)
    report = ball_membership(config.spec, config.domain, exponents["q"], exponents["r"], config.scheme,
                             p=exponents["p"], s=exponents["s"], field=field)

    line = (f"{config.name}: {report.ball_class_verdict} K_pq={report.K_pq:.6g} K_I_qs={report.K_I_qs:.6g} "
            f"|Dφ|_q={report.seminorm_L1q:.6g} |adj|_r={report.adj_Lr_norm:.6g}")
    return ExperimentResult(config, report.to_dict(), lines=[line])


def ring_oracle(condenser):
    """Closed-form capacity of a ring condenser on an annulus, None for other condensers."""
    domain = condenser.domain
    kinds = {condenser.F0.kind, condenser.F1.kind}
    if domain.kind != "annulus" or kinds != {"inner_ring", "outer_ring"}:
        return None
    return analytic_ring_capacity(domain.dimension, condenser.p, domain.r_inner, domain.r_outer)


def run_capacity(config: ExperimentConfig) -> ExperimentResult:
    condenser = config.condenser
    result = solve_capacity(condenser, config.solver)
    payload = result.to_dict()
    lines = [f"{config.name}: cp_{condenser.p:g} = {result.value:.8g} ({result.iterations} iterations)"]

    oracle = ring_oracle(condenser)
    if oracle is not None:
        payload["oracle"] = oracle
        payload["relative_error"] = formulas.relative_difference(result.value, oracle)
        lines.append(f"{config.name}: ring oracle {oracle:.8g}, relative error {payload['relative_error']:.3g}")

    if config.bracket:
        bracket = bracket_capacity(condenser, config.solver)
        payload["bracket"] = {key: value.value for key, value in bracket.items()}
        lines.append(f"{config.name}: bracket [{bracket['eroded'].value:.8g}, {bracket['dilated'].value:.8g}]")

    if config.spec is not None:
        image_domain = config.image_domain or image_domain_of(config.spec, condenser.domain, exact=False)
        image = solve_capacity(image_condenser(condenser, config.spec, image_domain), config.solver)
        payload["image"] = image.to_dict()
        lines.append(f"{config.name}: image cp_{condenser.p:g} = {image.value:.8g}")

    if config.output["minimizer"]:
        reports.write_minimizer_csv(result, config.output["minimizer"])
    if config.output["profile"]:
        reports.write_profile_csv(result, config.output["profile"])

    return ExperimentResult(config, payload, lines=lines)


def _invertible(spec):
    try:
        inverse_spec(spec)
    except NoClosedFormInverseError:
        return False
    return True


def _has_exact_image(config: ExperimentConfig):
    if config.image_domain is not None:
        return True
    try:
        image_domain_of(config.spec, config.domain, exact=True)
    except (ValidationError, NoClosedFormInverseError):
        return False
    return True


def _is_compact(plate, domain):
    try:
        capacity_of_compact(domain, plate, 2.0)
    except ValidationError:
        return False
    return True


def default_checks(config: ExperimentConfig) -> list[str]:
    """
    Every check the config supports.

    Checks integrating over φ(Ω) need an image domain that is itself a box, ball or annulus (or one given in the
    config); capacity checks only need the covering box and the inverse.
    """
    q, s = config.exponents["q"], config.exponents["s"]
    invertible = _invertible(config.spec)
    exact = _has_exact_image(config)

    checks = ["adjugate"]
    if exact:
        if invertible and 1 <= s < q:
            checks.append("transfer")
        if invertible:
            checks.append("change_of_variables")
        if s <= q:
            checks.append("energy_bounds")
        checks += ["operator_norm", "ball_functional"]

    if config.condenser is not None and invertible and 1 < s:
        if s < q or (config.capacity_mode == "outer" and s <= q):
            checks.append("capacity_distortion")
        if s < q and _is_compact(config.condenser.F1, config.domain):
            checks.append("capacity_smallness")
    return checks


def run_verify(config: ExperimentConfig) -> ExperimentResult:
    spec, domain, scheme = config.spec, config.domain, config.scheme
    q, s, p = config.exponents["q"], config.exponents["s"], config.exponents["p"]
    tolerance, identity_tolerance = config.tolerance, config.identity_tolerance
    checks = config.checks or default_checks(config)
    images = {}

    def exact_image():
        if config.image_domain is not None:
            return config.image_domain
        if "exact" not in images:
            images["exact"] = image_domain_of(spec, domain, exact=True)
        return images["exact"]

    def covering_image():
        if config.image_domain is not None:
            return config.image_domain
        if "covering" not in images:
            images["covering"] = image_domain_of(spec, domain, exact=False)
        return images["covering"]

    verdicts = []
    for check in checks:
        logger.info("%s: %s", config.name, check)

        if check == "adjugate":
            verdicts.append(adjugate_identity_check(domain.dimension, seed=config.seed))

        elif check == "transfer":
            verdicts.append(transfer_identity_residual(spec, domain, exact_image(), q, s, scheme,
                                                       identity_tolerance))

        elif check == "change_of_variables":
            image = exact_image()
            for member in family_members(config.density, image):
                verdicts.append(change_of_variables_residual(spec, domain, member, scheme=scheme, image_domain=image,
                                                             tolerance=identity_tolerance))

        elif check == "energy_bounds":
            verdicts += energy_bounds_check(spec, domain, exact_image(), q, s, config.families, scheme, tolerance)

        elif check == "operator_norm":
            verdicts.append(operator_norm_lower_bound(spec, domain, exact_image(), p, q, config.families, scheme,
                                                      tolerance))

        elif check == "ball_functional":
            verdicts += ball_functional_check(spec, domain, exact_image(), q, config.families, scheme, tolerance)

        elif check == "capacity_distortion":
            verdicts.append(capacity_distortion_check(spec, config.condenser, covering_image(), q, s, config.solver,
                                                      config.capacity_mode, tolerance, scheme))

        elif check == "capacity_smallness":
            verdicts.append(capacity_smallness_check(spec, domain, config.condenser.F1, covering_image(), q, s,
                                                     config.solver, tolerance, scheme))

    counts = {status: sum(verdict.status == status for verdict in verdicts) for status in ("passed", "failed",
                                                                                          "vacuous")}
    inequalities = [verdict.slack for verdict in verdicts if verdict.kind == "inequality" and not verdict.vacuous]
    payload = {
        "verdicts": [verdict.to_dict() for verdict in verdicts],
        "counts": counts,
        "worst_slack": formulas.json_number(min(inequalities)) if inequalities else None,
        "exit_code": exit_status(verdicts),
    }

    lines = [f"{config.name}: {verdict.summary()}" for verdict in verdicts]
    lines.append(f"{config.name}: {counts['passed']} passed, {counts['failed']} failed, {counts['vacuous']} vacuous")
    return ExperimentResult(config, payload, verdicts, exit_status(verdicts), lines)
