"""
Pointwise dilatations, global distortion functionals, Sobolev seminorms and Ball-class verdicts.

Global functionals are midpoint-rule norms over the non-excluded cells of a sampled grid. Every function taking
(spec, domain, ..., scheme) also accepts a precomputed DifferentialField as `field`, so that a report built from
several functionals samples the mapping once.
"""

import logging
import math
import warnings

import numpy as np

from lab.exceptions import ValidationError
from lab.numerics import formulas
from lab.numerics.mapping import (ComposedMap, DifferentialField, DifferentialSample, Domain, GridFieldMap, MappingSpec,
                                  sample_grid)

logger = logging.getLogger(__name__)

MEMBER = "member"
NOT_MEMBER = "not_member"
INCONCLUSIVE = "inconclusive"


class ExponentPair:
    """
    Outer exponent p and inner exponent q with 1 ≤ q ≤ p ≤ ∞.

    κ is given by 1/κ = 1/q − 1/p, with κ = ∞ when p = q and κ = q when p = ∞.
    """

    __slots__ = "p", "q"

    def __init__(self, p, q):
        self.p = float(p)
        self.q = float(q)

        if math.isnan(self.p) or math.isnan(self.q):
            raise ValidationError("exponents must be numbers", "exponents")
        if not 1 <= self.q <= self.p:
            raise ValidationError(f"exponents must satisfy 1 ≤ q ≤ p ≤ ∞, got p={self.p}, q={self.q}", "exponents")

    def __repr__(self):
        return f"ExponentPair(p={self.p}, q={self.q}, κ={self.kappa})"

    def __eq__(self, other):
        return isinstance(other, ExponentPair) and (self.p, self.q) == (other.p, other.q)

    def __hash__(self):
        return hash((self.p, self.q))

    @property
    def kappa(self):
        return formulas.mixed_exponent(self.p, self.q)


def _check_exponent(value, name, minimum=1.0):
    if math.isnan(value) or value < minimum:
        raise ValidationError(f"{name} must be at least {minimum}, got {value}", f"exponents.{name}")


def kp_values(det, op_norm, p):
    """Vectorized p-dilatation |Dφ|/|J|^{1/p} with the finite-distortion convention at J = 0."""
    det = np.asarray(det, dtype=float)
    op_norm = np.asarray(op_norm, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = op_norm / np.abs(det) ** (1 / p)
    degenerate = np.where(op_norm == 0, 0.0, math.inf)
    return np.where(det != 0, ratio, degenerate)


def ki_values(det, min_stretch, s):
    """Vectorized inner dilatation |J|^{1/s}/l(Dφ), zero where J = 0."""
    det = np.asarray(det, dtype=float)
    min_stretch = np.asarray(min_stretch, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.abs(det) ** (1 / s) / min_stretch
    return np.where(det != 0, ratio, 0.0)


def pointwise_Kp(sample: DifferentialSample, p) -> float:  # noqa: N802
    """K_p(x) = |Dφ(x)|/|J(x,φ)|^{1/p}; 0 when Dφ(x) = 0, +∞ when J = 0 but Dφ(x) ≠ 0."""
    _check_exponent(p, "p")
    return float(kp_values(sample.det, sample.op_norm, p))


def pointwise_KI_s(sample: DifferentialSample, s) -> float:  # noqa: N802
    """K^I_s(x) = |J(x,φ)|^{1/s}/l(Dφ(x)) when J ≠ 0, else 0."""
    _check_exponent(s, "s")
    assert sample.det == 0 or sample.min_stretch > 0, "nonzero Jacobian with zero least stretching"
    return float(ki_values(sample.det, sample.min_stretch, s))


def _field(spec, domain, scheme, field):
    if field is not None:
        return field
    return sample_grid(spec, domain, scheme)


def global_K_pq(spec: MappingSpec, domain: Domain, pair: ExponentPair, scheme=None, *,  # noqa: N802
                field: DifferentialField | None = None) -> float:
    """K_{p,q}(φ;Ω) = ‖K_p | L_κ(Ω)‖."""
    field = _field(spec, domain, scheme, field)
    active = field.active
    values = kp_values(field.det[active], field.op_norm[active], pair.p)
    return formulas.weighted_norm(values, field.weights[active], pair.kappa)


def global_KI_qs(spec: MappingSpec, domain: Domain, q, s, scheme=None, *,  # noqa: N802
                 field: DifferentialField | None = None) -> float:
    """K^I_{q,s}(Ω) = ‖K^I_s | L_κ(Ω)‖ with 1/κ = 1/s − 1/q."""
    q, s = float(q), float(s)
    if not q > 1:
        raise ValidationError(f"q must exceed 1, got {q}", "exponents.q")
    _check_exponent(s, "s")
    if s > q:
        raise ValidationError(f"s must not exceed q, got q={q}, s={s}", "exponents.s")

    field = _field(spec, domain, scheme, field)
    active = field.active
    values = ki_values(field.det[active], field.min_stretch[active], s)
    return formulas.weighted_norm(values, field.weights[active], formulas.mixed_exponent(q, s))


def sobolev_seminorm(spec: MappingSpec, domain: Domain, q, scheme=None, *,
                     field: DifferentialField | None = None) -> float:
    """‖φ | L¹_q(Ω)‖ = ‖ |Dφ| | L_q(Ω)‖."""
    _check_exponent(q, "q")
    field = _field(spec, domain, scheme, field)
    active = field.active
    return formulas.weighted_norm(field.op_norm[active], field.weights[active], q)


def adjugate_Lr_norm(spec: MappingSpec, domain: Domain, r, scheme=None, *,  # noqa: N802
                     field: DifferentialField | None = None) -> float:
    """‖adj Dφ | L_r(Ω)‖."""
    _check_exponent(r, "r")
    field = _field(spec, domain, scheme, field)
    active = field.active
    return formulas.weighted_norm(field.adj_norm[active], field.weights[active], r)


class DistortionReport:
    """Global functionals of one mapping on one domain, with the Ball-class verdict."""

    __slots__ = ("K_pq", "K_I_qs", "seminorm_L1q", "adj_Lr_norm", "jacobian_sign_fraction", "finite_distortion_flag",
                 "ball_class_verdict", "reason", "hypothesis_flags", "excluded_cell_count", "exponents")

    def __init__(self, K_pq, K_I_qs, seminorm_L1q, adj_Lr_norm, jacobian_sign_fraction,  # noqa: N803
                 finite_distortion_flag, ball_class_verdict, reason, hypothesis_flags, excluded_cell_count, exponents):
        self.K_pq = K_pq
        self.K_I_qs = K_I_qs
        self.seminorm_L1q = seminorm_L1q
        self.adj_Lr_norm = adj_Lr_norm
        self.jacobian_sign_fraction = jacobian_sign_fraction
        self.finite_distortion_flag = finite_distortion_flag
        self.ball_class_verdict = ball_class_verdict
        self.reason = reason
        self.hypothesis_flags = hypothesis_flags
        self.excluded_cell_count = excluded_cell_count
        self.exponents = exponents

    def __repr__(self):
        return f"DistortionReport({self.ball_class_verdict}: {self.reason})"

    @property
    def member(self):
        return self.ball_class_verdict == MEMBER

    def to_dict(self):
        return {
            "K_pq": formulas.json_number(self.K_pq),
            "K_I_qs": formulas.json_number(self.K_I_qs),
            "seminorm_L1q": formulas.json_number(self.seminorm_L1q),
            "adj_Lr_norm": formulas.json_number(self.adj_Lr_norm),
            "jacobian_sign_fraction": self.jacobian_sign_fraction,
            "finite_distortion_flag": self.finite_distortion_flag,
            "ball_class_verdict": self.ball_class_verdict,
            "reason": self.reason,
            "hypothesis_flags": list(self.hypothesis_flags),
            "excluded_cell_count": self.excluded_cell_count,
            "exponents": {k: formulas.json_number(v) for k, v in self.exponents.items()},
        }


def _uses_sampled_data(spec):
    if isinstance(spec, ComposedMap):
        return _uses_sampled_data(spec.first) or _uses_sampled_data(spec.second)
    return isinstance(spec, GridFieldMap)


def hypothesis_flags(dimension, q, r):
    flags = []
    if q <= dimension - 1:
        flags.append("q ≤ n−1 regime outside the Ball-class hypotheses")
    if r < formulas.conjugate_exponent(q):
        flags.append("r < q/(q−1) regime outside the Ball-class hypotheses")
    return flags


def ball_membership(spec: MappingSpec, domain: Domain, q, r, scheme=None, p=None, s=1.0, *,
                    field: DifferentialField | None = None) -> DistortionReport:
    """
    Decide membership in the Ball class A⁺_{q,r}(Ω) on the grid.

    member: J > tol_J on every non-excluded cell and both norms finite. not_member: some non-excluded cell has
    J ≤ tol_J, or a norm is infinite. inconclusive: otherwise, when singular-point exclusion hides cells.
    The report also carries K_{p,q} (p defaults to q) and K^I_{q,s} (s defaults to 1).
    """
    q, r = float(q), float(r)
    if not q > 1:
        raise ValidationError(f"q must exceed 1, got {q}", "exponents.q")
    _check_exponent(r, "r")
    p = q if p is None else float(p)

    field = _field(spec, domain, scheme, field)
    n = field.dimension
    active = field.active
    det = field.det[active]
    op_norm = field.op_norm[active]

    tol_j = 1e-12 * (1 + op_norm ** n)
    positive = det > tol_j
    cells = len(det)
    sign_fraction = float(np.count_nonzero(positive)) / cells

    degenerate = np.abs(det) <= tol_j
    finite_distortion = bool(np.all(op_norm[degenerate] <= tol_j[degenerate]))

    seminorm = sobolev_seminorm(spec, domain, q, field=field)
    adj_norm = adjugate_Lr_norm(spec, domain, r, field=field)
    k_pq = global_K_pq(spec, domain, ExponentPair(p, q), field=field)
    k_i = global_KI_qs(spec, domain, q, s, field=field)

    if not np.all(positive):
        if np.all(det < -tol_j):
            reason = "J < 0 on all cells"
        else:
            reason = f"J ≤ 0 on {cells - int(np.count_nonzero(positive))} of {cells} cells"
        verdict = NOT_MEMBER
    elif math.isinf(seminorm) or math.isinf(adj_norm):
        verdict = NOT_MEMBER
        reason = "‖φ | L¹_q‖ is infinite" if math.isinf(seminorm) else "‖adj Dφ | L_r‖ is infinite"
    elif field.excluded_count:
        verdict = INCONCLUSIVE
        reason = (f"J > 0 on all sampled cells, but {field.excluded_count} cells within {field.exclusion_radius:.3g} "
                  "of singular points were excluded and may hide a sign change")
    else:
        verdict = MEMBER
        reason = "J > 0 on all cells, gradient and adjugate norms finite"

    if _uses_sampled_data(spec):
        reason += "; Luzin N-property unverified for sampled mappings"
    else:
        reason += "; Luzin N-property assumed for analytic diffeomorphic families"

    flags = hypothesis_flags(n, q, r)
    for flag in flags:
        warnings.warn(f"{spec!r}: {flag}", stacklevel=2)
    logger.info("%s on %r: %s (%s)", spec, domain, verdict, reason)

    return DistortionReport(k_pq, k_i, seminorm, adj_norm, sign_fraction, finite_distortion, verdict, reason, flags,
                            field.excluded_count, {"p": p, "q": q, "r": r, "s": float(s)})
