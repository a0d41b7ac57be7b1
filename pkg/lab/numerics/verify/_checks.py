"""
Numerical checks of the identities and inequalities tying distortion functionals to composition operators and
capacities.

Source-side integrals use the quadrature of the source domain, image-side integrals the quadrature of the image
domain at its own resolution. Gradients of composites come from the chain rule with closed-form test-function
gradients, never from differencing the composite.
"""

import logging
import math

import numpy as np

from lab.exceptions import ValidationError
from lab.numerics import TOLERANCES, formulas
from lab.numerics.capacity import (Plate, SolverConfig, capacity_of_compact, image_condenser, preimage_membership,
                                   solve_capacity)
from lab.numerics.distortion import ExponentPair, adjugate_Lr_norm, global_K_pq, global_KI_qs, sobolev_seminorm
from lab.numerics.mapping import Domain, MappingSpec, image_domain_of, inverse_spec, sample_grid
from lab.numerics.verify._test_functions import TestFunction, family_members
from lab.numerics.verify._verdict import VerificationVerdict

logger = logging.getLogger(__name__)

json_number = formulas.json_number


def identity_tolerance(grid, closed_form=False):
    """1e−6 when both sides are closed-form, max(1e−3, 10/N²) when quadrature is involved."""
    if closed_form:
        return TOLERANCES["closed_form"]
    return max(1e-3, 10 / grid ** 2)


def _inequality_tolerance(tolerance):
    return TOLERANCES["inequality"] if tolerance is None else float(tolerance)


def _grid_metadata(field, image_domain=None):
    metadata = {"grid": field.domain.grid, "excluded_cells": field.excluded_count}
    if image_domain is not None:
        metadata["image_grid"] = image_domain.grid
    return metadata


class _Pullback:
    """Differential data of φ on the active source cells, for chain-rule gradients of composites."""

    __slots__ = "images", "jacobian", "weights"

    def __init__(self, spec, field):
        active = field.active
        self.images = spec.evaluate(field.points[active])
        self.jacobian = field.jacobian[active]
        self.weights = field.weights[active]

    def seminorm(self, member: TestFunction, q):
        """‖φ*(f) | L¹_q(Ω)‖."""
        gradient = member.pullback_gradient(self.images, self.jacobian)
        return formulas.weighted_norm(np.linalg.norm(gradient, axis=-1), self.weights, q)


class _ImageSide:
    __slots__ = "points", "weights"

    def __init__(self, image_domain: Domain):
        self.points, self.weights, _ = image_domain.quadrature()

    def seminorm(self, member: TestFunction, exponent):
        """‖f | L¹_exponent(Ω̃)‖."""
        return formulas.weighted_norm(np.linalg.norm(member.gradient(self.points), axis=-1), self.weights, exponent)


def transfer_identity_residual(spec: MappingSpec, domain: Domain, image_domain: Domain, q, s, scheme=None,
                               tolerance=None) -> VerificationVerdict:
    """
    Compare K^I_{q,s}(Ω) with the same quantity written on the image side through φ⁻¹:

        (∫_Ω̃ (|Dφ⁻¹|^q / |J(·,φ⁻¹)|)^{s/(q−s)} dy)^{(q−s)/(qs)}   for q < ∞
        (∫_Ω̃ |Dφ⁻¹|^s dy)^{1/s}                                  for q = ∞
    """
    q, s = float(q), float(s)
    if not 1 <= s < q:
        raise ValidationError(f"the transfer identity needs 1 ≤ s < q, got q={q}, s={s}", "exponents.s")

    inverse = inverse_spec(spec)
    field = sample_grid(spec, domain, scheme)
    source_side = global_KI_qs(spec, domain, q, s, field=field)

    image_field = sample_grid(inverse, image_domain, scheme)
    active = image_field.active
    with np.errstate(divide="ignore"):
        # (|Dφ⁻¹|^q/|J|)^{1/q}, raised to κ = qs/(q−s) by the norm
        values = image_field.op_norm[active] * np.abs(image_field.det[active]) ** (-1 / q)
    image_side = formulas.weighted_norm(values, image_field.weights[active], formulas.mixed_exponent(q, s))

    if tolerance is None:
        tolerance = identity_tolerance(min(domain.grid, image_domain.grid), spec.constant_jacobian)

    metadata = _grid_metadata(field, image_domain)
    metadata.update(q=json_number(q), s=s, image_excluded_cells=image_field.excluded_count)

    verdict = VerificationVerdict.identity("transfer_identity", source_side, image_side, tolerance, metadata)
    logger.info("%s: %s", spec, verdict.summary())
    return verdict


def change_of_variables_residual(spec: MappingSpec, domain: Domain, f: TestFunction, E=None, scheme=None,  # noqa: N803
                                 image_domain: Domain | None = None, tolerance=None) -> VerificationVerdict:
    """
    Compare ∫_E f(φ(x))|J(x,φ)| dx with ∫_{φ(E)} f(y) dy for a homeomorphism φ.

    E is a boolean mask over the source grid, the whole domain when omitted. φ(E) is rasterized on the image grid by
    pulling cell centres back into the closed cells of E. Without an explicit image domain the exact image is used
    when known, a covering box restricted to the pulled-back domain otherwise.
    """
    field = sample_grid(spec, domain, scheme)
    cells = field.active.copy()

    if E is not None:
        E = np.asarray(E, dtype=bool)  # noqa: N806
        if E.shape != domain.shape:
            raise ValidationError(f"set mask has shape {E.shape}, grid has shape {domain.shape}", "E")
        cells &= E[tuple(field.index.T)]

    pulled = f.value(spec.evaluate(field.points[cells]))
    if np.any(pulled < 0):
        raise ValidationError(f"{f.name} takes negative values; the change of variables needs f ≥ 0", "f")
    lhs = float(np.sum(pulled * np.abs(field.det[cells]) * field.weights[cells]))

    exact_image = image_domain is not None
    if image_domain is None:
        try:
            image_domain = image_domain_of(spec, domain, exact=True)
            exact_image = True
        except ValidationError:
            image_domain = image_domain_of(spec, domain, exact=False)

    points, weights, _ = image_domain.quadrature()
    preimages = inverse_spec(spec).evaluate(points)

    if E is not None:
        member = preimage_membership(E, domain, preimages)
    elif exact_image:
        member = np.ones(len(points), dtype=bool)
    else:
        member = domain.contains(preimages, tolerance=1e-9)

    for point in spec.singular_points(domain.dimension):
        member &= np.linalg.norm(preimages - point, axis=-1) >= field.exclusion_radius

    values = f.value(points[member])
    if np.any(values < 0):
        raise ValidationError(f"{f.name} takes negative values; the change of variables needs f ≥ 0", "f")
    rhs = float(np.sum(values * weights[member]))

    if tolerance is None:
        grid = min(domain.grid, image_domain.grid)
        if E is not None and not np.all(E):
            # the rasterized boundary of E converges at first order only
            tolerance = max(1e-2, 4 / grid)
        else:
            closed_form = spec.constant_jacobian and f.affine and domain.kind == "box"
            tolerance = identity_tolerance(grid, closed_form)

    metadata = _grid_metadata(field, image_domain)
    metadata.update(function=f.name, source_cells=int(np.count_nonzero(cells)),
                    image_cells=int(np.count_nonzero(member)))

    verdict = VerificationVerdict.identity(f"change_of_variables[{f.name}]", lhs, rhs, tolerance, metadata)
    logger.info("%s: %s", spec, verdict.summary())
    return verdict


def _solve(condenser, config, label, diagnostics):
    result = solve_capacity(condenser, config)
    diagnostics[label] = {"value": result.value, "p": result.p, "iterations": result.iterations,
                          "grid": condenser.domain.grid}
    return result.value


def capacity_distortion_check(spec: MappingSpec, condenser, image_domain: Domain, q, s,
                              solver_config: SolverConfig | None = None, mode="inner", tolerance=None,
                              scheme=None) -> VerificationVerdict:
    """
    Capacity distortion under φ, for a source condenser (F₀, F₁) in Ω.

    inner: cp_s^{1/s}(φ(F₀), φ(F₁); Ω̃) ≤ K^I_{q,s}(Ω) · cp_q^{1/q}(F₀, F₁; Ω), with 1 < s < q.
    outer: cp_s^{1/s}(F₀, F₁; Ω) ≤ K_{q,s}(φ; Ω) · cp_q^{1/q}(φ(F₀), φ(F₁); Ω̃), with 1 < s ≤ q; s = q is the
        same-exponent form.

    Solver convergence failures propagate with their partial result.
    """
    q, s = float(q), float(s)
    if mode not in ("inner", "outer"):
        raise ValidationError(f"mode must be inner or outer, got {mode!r}", "mode")
    if mode == "inner" and not 1 < s < q:
        raise ValidationError(f"the inner capacity estimate needs 1 < s < q, got q={q}, s={s}", "exponents.s")
    if mode == "outer" and not 1 < s <= q:
        raise ValidationError(f"the outer capacity estimate needs 1 < s ≤ q, got q={q}, s={s}", "exponents.s")

    domain = condenser.domain
    capacities = {}

    if mode == "inner":
        distortion = global_KI_qs(spec, domain, q, s, scheme)
        source = _solve(condenser.with_exponent(q), solver_config, "source", capacities)
        image = _solve(image_condenser(condenser.with_exponent(s), spec, image_domain), solver_config, "image",
                       capacities)
        lhs = image ** (1 / s)
        rhs = distortion * source ** (1 / q)
    else:
        distortion = global_K_pq(spec, domain, ExponentPair(q, s), scheme)
        source = _solve(condenser.with_exponent(s), solver_config, "source", capacities)
        image = _solve(image_condenser(condenser.with_exponent(q), spec, image_domain), solver_config, "image",
                       capacities)
        lhs = source ** (1 / s)
        rhs = distortion * image ** (1 / q)

    metadata = {"mode": mode, "q": q, "s": s, "distortion": json_number(distortion), "capacities": capacities,
                "grid": domain.grid, "image_grid": image_domain.grid}

    name = "capacity_distortion" if mode == "inner" else "capacity_distortion_outer"
    verdict = VerificationVerdict.inequality(name, lhs, rhs, _inequality_tolerance(tolerance), metadata)
    logger.info("%s: %s", spec, verdict.summary())
    return verdict


def capacity_smallness_check(spec: MappingSpec, domain: Domain, plate: Plate, image_domain: Domain, q, s,
                             solver_config: SolverConfig | None = None, tolerance=None,
                             scheme=None) -> VerificationVerdict:
    """
    Small capacity is carried over to the image: for a compact plate E with cp_q(E; Ω) = ε,

        cp_s^{1/s}(φ(E); Ω̃) ≤ K^I_{q,s}(Ω) · ε^{1/q}.
    """
    q, s = float(q), float(s)
    if not 1 < s < q:
        raise ValidationError(f"the capacity smallness estimate needs 1 < s < q, got q={q}, s={s}", "exponents.s")

    capacities = {}
    distortion = global_KI_qs(spec, domain, q, s, scheme)
    epsilon = _solve(capacity_of_compact(domain, plate, q), solver_config, "source", capacities)
    image = _solve(image_condenser(capacity_of_compact(domain, plate, s), spec, image_domain), solver_config, "image",
                   capacities)

    metadata = {"q": q, "s": s, "epsilon": epsilon, "distortion": json_number(distortion), "capacities": capacities,
                "grid": domain.grid, "image_grid": image_domain.grid}

    verdict = VerificationVerdict.inequality("capacity_smallness", image ** (1 / s), distortion * epsilon ** (1 / q),
                                             _inequality_tolerance(tolerance), metadata)
    logger.info("%s: %s", spec, verdict.summary())
    return verdict


def energy_bounds_check(spec: MappingSpec, domain: Domain, image_domain: Domain, q, s, family=None, scheme=None,
                        tolerance=None) -> list[VerificationVerdict]:
    """
    Two-sided potential-energy bound for every family member f:

        K^I_{q,s}(Ω)⁻¹ ‖f | L¹_s(Ω̃)‖ ≤ ‖φ*(f) | L¹_q(Ω)‖ ≤ ‖φ | L¹_q(Ω)‖ · ‖f | L¹_∞(Ω̃)‖

    An infinite distortion makes the lower bound vacuous.
    """
    q, s = float(q), float(s)
    tolerance = _inequality_tolerance(tolerance)

    field = sample_grid(spec, domain, scheme)
    distortion = global_KI_qs(spec, domain, q, s, field=field)
    seminorm = sobolev_seminorm(spec, domain, q, field=field)

    pullback = _Pullback(spec, field)
    image_side = _ImageSide(image_domain)

    verdicts = []
    for member in family_members(family, image_domain):
        pulled = pullback.seminorm(member, q)
        image_s = image_side.seminorm(member, s)
        image_sup = image_side.seminorm(member, math.inf)

        metadata = _grid_metadata(field, image_domain)
        metadata.update(function=member.name, q=json_number(q), s=s, distortion=json_number(distortion))

        vacuous = math.isinf(distortion)
        if vacuous:
            lower = 0.0
        else:
            lower = image_s / distortion if distortion > 0 else math.inf
        if vacuous:
            metadata["note"] = "K^I_{q,s} is infinite; the lower bound carries no information"

        verdicts.append(VerificationVerdict.inequality(f"energy_lower[{member.name}]", lower, pulled, tolerance,
                                                       metadata, vacuous=vacuous))
        verdicts.append(VerificationVerdict.inequality(f"energy_upper[{member.name}]", pulled, seminorm * image_sup,
                                                       tolerance, dict(metadata)))

    for verdict in verdicts:
        logger.info("%s: %s", spec, verdict.summary())
    return verdicts


def operator_norm_lower_bound(spec: MappingSpec, domain: Domain, image_domain: Domain, p, q, family=None, scheme=None,
                              tolerance=None) -> VerificationVerdict:
    """
    Empirical lower bound M = max_f ‖φ*(f) | L¹_q(Ω)‖/‖f | L¹_p(Ω̃)‖ of the composition operator norm, checked against
    K_{p,q}(φ; Ω). M^κ is reported as a lower estimate of the set function bounding the operator on Ω̃.
    """
    pair = ExponentPair(p, q)
    field = sample_grid(spec, domain, scheme)
    bound = global_K_pq(spec, domain, pair, field=field)

    pullback = _Pullback(spec, field)
    image_side = _ImageSide(image_domain)

    ratios = {}
    skipped = []
    for member in family_members(family, image_domain):
        denominator = image_side.seminorm(member, pair.p)
        if denominator == 0:
            logger.info("skipping %s: zero gradient on the image domain", member.name)
            skipped.append(member.name)
            continue
        ratios[member.name] = pullback.seminorm(member, pair.q) / denominator

    if not ratios:
        raise ValidationError("every family member has zero gradient; the operator norm ratio is undefined", "family")

    best = max(ratios.values())
    kappa = pair.kappa
    with np.errstate(over="ignore"):
        set_function = None if math.isinf(kappa) else json_number(np.power(best, kappa))
    metadata = _grid_metadata(field, image_domain)
    metadata.update(p=json_number(pair.p), q=json_number(pair.q), skipped=skipped,
                    ratios={name: json_number(ratio) for name, ratio in ratios.items()},
                    tightness=json_number(best / bound) if bound > 0 else None,
                    set_function_lower_bound=set_function)

    verdict = VerificationVerdict.inequality("operator_norm", best, bound, _inequality_tolerance(tolerance), metadata)
    logger.info("%s: %s", spec, verdict.summary())
    return verdict


def ball_functional_check(spec: MappingSpec, domain: Domain, image_domain: Domain, q, family=None, scheme=None,
                          tolerance=None) -> list[VerificationVerdict]:
    """
    ‖f | L¹_1(Ω̃)‖ ≤ ‖adj Dφ | L_r(Ω)‖ · ‖φ*(f) | L¹_q(Ω)‖ with r = q/(q−1), for every family member f.
    """
    q = float(q)
    if not q > 1:
        raise ValidationError(f"q must exceed 1, got {q}", "exponents.q")
    r = formulas.conjugate_exponent(q)
    tolerance = _inequality_tolerance(tolerance)

    field = sample_grid(spec, domain, scheme)
    adjugate_norm = adjugate_Lr_norm(spec, domain, r, field=field)
    pullback = _Pullback(spec, field)
    image_side = _ImageSide(image_domain)

    verdicts = []
    for member in family_members(family, image_domain):
        metadata = _grid_metadata(field, image_domain)
        metadata.update(function=member.name, q=json_number(q), r=json_number(r),
                        adj_Lr_norm=json_number(adjugate_norm))
        lhs = image_side.seminorm(member, 1.0)
        rhs = adjugate_norm * pullback.seminorm(member, q)
        verdicts.append(VerificationVerdict.inequality(f"ball_functional[{member.name}]", lhs, rhs, tolerance,
                                                       metadata))
    return verdicts


def adjugate_identity_check(dimension, count=1000, seed=0, tolerance=None) -> VerificationVerdict:
    """
    |adj A| = |det A|/σ_min(A) over random nonsingular matrices A = U diag(σ) Vᵀ with σ log-uniform in [0.1, 10].
    """
    dimension, count = int(dimension), int(count)
    if dimension < 2 or count < 1:
        raise ValidationError("the adjugate check needs n ≥ 2 and at least one matrix", "n")

    rng = np.random.default_rng(seed)
    u, _ = np.linalg.qr(rng.normal(size=(count, dimension, dimension)))
    v, _ = np.linalg.qr(rng.normal(size=(count, dimension, dimension)))
    sigma = np.exp(rng.uniform(math.log(0.1), math.log(10), size=(count, dimension)))
    matrices = u @ (sigma[..., None] * np.swapaxes(v, -1, -2))

    adjugate_norm = formulas.operator_norm(formulas.adjugate(matrices))
    _, min_stretch = formulas.singular_values(matrices)
    expected = np.abs(formulas.determinant(matrices)) / min_stretch

    residual = np.abs(adjugate_norm - expected) / np.maximum(adjugate_norm, expected)
    worst = int(np.argmax(residual))

    tolerance = TOLERANCES["adjugate"] if tolerance is None else float(tolerance)
    metadata = {"n": dimension, "count": count, "seed": seed}
    return VerificationVerdict.identity("adjugate_identity", adjugate_norm[worst], expected[worst], tolerance,
                                        metadata)
