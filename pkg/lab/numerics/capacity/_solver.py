"""
Discrete p-Dirichlet energy and its minimization.

The energy of a grid function u is

    E_ε(u) = Σ_cells Σ_orthants W · (Σ_k D_k² + ε²)^{p/2}

where every cell is split into 2ⁿ orthants, D_k is the one-sided difference towards the neighbour the orthant faces
along axis k, and W is the orthant volume. Differences towards an outside cell vanish (natural boundary condition).
A difference that crosses the boundary of a level-set plate ends on the plate boundary itself, at the zero of the
linearly interpolated level set, and the orthant volume is stretched to reach it.
"""

import itertools
import logging
import math
import warnings

import numpy as np

from lab.exceptions import ConvergenceError, ValidationError
from lab.numerics import TOLERANCES, formulas
from lab.numerics.capacity._condenser import FREE, OUTSIDE, PLATE0, PLATE1, Condenser, bracket_condensers

logger = logging.getLogger(__name__)

P_RANGE = (1.1, 10.0)
SIGNS = (1, -1)
MIN_THETA = 0.1
ARMIJO = 1e-4
BACKTRACK = 0.5
MAX_BACKTRACKS = 60
TINY = np.finfo(float).tiny


class SolverConfig:
    """
    :param self.tol_energy: stop a stage when a steepest-descent step lowers the energy by less than this (relative)
    :param self.max_iter: iteration budget per continuation stage
    :param self.eps_schedule: decreasing regularization values
    :param self.jacobi_sweeps: sweeps of the harmonic initialization
    :param self.restart: conjugate-gradient restart period
    """

    __slots__ = "tol_energy", "max_iter", "eps_schedule", "jacobi_sweeps", "restart"

    DEFAULTS = {"tol_energy": 1e-9, "max_iter": 20000, "eps_schedule": [1e-2, 1e-4, 1e-6, 1e-8],
                "jacobi_sweeps": 500, "restart": 50}

    def __init__(self, tol_energy=1e-9, max_iter=20000, eps_schedule=(1e-2, 1e-4, 1e-6, 1e-8), jacobi_sweeps=500,
                 restart=50):
        self.tol_energy = float(tol_energy)
        self.max_iter = int(max_iter)
        self.eps_schedule = [float(eps) for eps in eps_schedule]
        self.jacobi_sweeps = int(jacobi_sweeps)
        self.restart = int(restart)

        if not self.tol_energy > 0:
            raise ValidationError(f"tol_energy must be positive, got {self.tol_energy}", "solver.tol_energy")
        if self.max_iter < 1:
            raise ValidationError(f"max_iter must be positive, got {self.max_iter}", "solver.max_iter")
        if not self.eps_schedule or any(eps < 0 for eps in self.eps_schedule):
            raise ValidationError("eps_schedule must be a nonempty list of non-negative values",
                                  "solver.eps_schedule")
        if any(b > a for a, b in zip(self.eps_schedule, self.eps_schedule[1:])):
            raise ValidationError("eps_schedule must be decreasing", "solver.eps_schedule")
        if self.jacobi_sweeps < 0 or self.restart < 1:
            raise ValidationError("jacobi_sweeps must be non-negative and restart positive", "solver")

    def __repr__(self):
        return (f"SolverConfig(tol_energy={self.tol_energy}, max_iter={self.max_iter}, "
                f"eps_schedule={self.eps_schedule})")

    def to_config(self):
        return {key: getattr(self, key) for key in self.DEFAULTS}

    @classmethod
    def from_config(cls, config: dict | None, field: str = "solver"):
        config = config or {}
        unknown = set(config) - set(cls.DEFAULTS)
        if unknown:
            raise ValidationError(f"unknown keys {sorted(unknown)}", field)
        return cls(**{**cls.DEFAULTS, **config})


class CapacityResult:
    """
    Outcome of a capacity solve.

    :param self.value: discrete energy of the minimizer at ε = 0
    :param self.minimizer: values on the domain grid; 0 on F₀, 1 on F₁, NaN outside the domain
    :param self.trace: one entry per continuation stage
    """

    __slots__ = ("value", "minimizer", "iterations", "final_grad_norm", "epsilon_schedule", "trace", "converged", "p",
                 "domain")

    def __init__(self, value, minimizer, iterations, final_grad_norm, epsilon_schedule, trace, converged, p, domain):
        self.value = value
        self.minimizer = minimizer
        self.iterations = iterations
        self.final_grad_norm = final_grad_norm
        self.epsilon_schedule = epsilon_schedule
        self.trace = trace
        self.converged = converged
        self.p = p
        self.domain = domain

    def __repr__(self):
        state = "converged" if self.converged else "not converged"
        return f"CapacityResult(value={self.value:.6g}, p={self.p}, {self.iterations} iterations, {state})"

    def to_dict(self):
        return {
            "value": formulas.json_number(self.value),
            "p": self.p,
            "iterations": self.iterations,
            "final_grad_norm": formulas.json_number(self.final_grad_norm),
            "epsilon_schedule": list(self.epsilon_schedule),
            "trace": [{**stage, "energy": formulas.json_number(stage["energy"]),
                       "grad_norm": formulas.json_number(stage["grad_norm"])} for stage in self.trace],
            "converged": self.converged,
        }


class _Stencil:
    """Orthant weights, difference lengths and plate crossings of one condenser on its padded grid."""

    def __init__(self, condenser: Condenser):
        domain = condenser.domain
        n = domain.dimension
        h = domain.spacing

        kinds = condenser.cell_kinds(pad=1)
        _, g0 = condenser.F0.rasterize(domain, 1)
        _, g1 = condenser.F1.rasterize(domain, 1)

        # cells inside a level-set plate lie beyond the plate boundary and carry no energy
        owner = kinds == FREE
        if g0 is None:
            owner |= kinds == PLATE0
        if g1 is None:
            owner |= kinds == PLATE1

        self.dimension = n
        self.kinds = kinds
        self.free = kinds == FREE
        self.fixed = np.where(kinds == PLATE1, 1.0, 0.0)

        self.inv = [[None, None] for _ in range(n)]
        self.cut = [[None, None] for _ in range(n)]
        self.cut_value = [[None, None] for _ in range(n)]
        omega = [[None, None] for _ in range(n)]

        for k in range(n):
            for b, s in enumerate(SIGNS):
                neighbour = np.roll(kinds, -s, axis=k)
                theta = np.ones(kinds.shape)
                cut = np.zeros(kinds.shape, dtype=bool)
                value = np.zeros(kinds.shape)

                for plate, g, fixed in ((PLATE0, g0, 0.0), (PLATE1, g1, 1.0)):
                    if g is None:
                        continue
                    crossing = (kinds == FREE) & (neighbour == plate)
                    with np.errstate(divide="ignore", invalid="ignore"):
                        fraction = g / (g - np.roll(g, -s, axis=k))
                    theta = np.where(crossing, np.clip(np.nan_to_num(fraction, nan=1.0), MIN_THETA, 1.0), theta)
                    cut |= crossing
                    value = np.where(crossing, fixed, value)

                linked = (kinds != OUTSIDE) & (neighbour != OUTSIDE)
                self.inv[k][b] = np.where(linked, 1 / (theta * h[k]), 0.0)
                self.cut[k][b] = cut
                self.cut_value[k][b] = value
                omega[k][b] = np.where(cut, 2 * theta, 1.0)

        base = np.where(owner, domain.cell_volume / 2 ** n, 0.0)
        self.orthants = []
        for choice in itertools.product(range(2), repeat=n):
            weight = base.copy()
            for k, b in enumerate(choice):
                weight *= omega[k][b]
            self.orthants.append((choice, weight))

    def differences(self, u):
        result = []
        for k in range(self.dimension):
            row = []
            for b, s in enumerate(SIGNS):
                neighbour = np.where(self.cut[k][b], self.cut_value[k][b], np.roll(u, -s, axis=k))
                row.append((neighbour - u) * self.inv[k][b])
            result.append(row)
        return result

    def energy(self, u, p, eps):
        d = self.differences(u)
        total = 0.0
        for choice, weight in self.orthants:
            squared = sum(d[k][b] ** 2 for k, b in enumerate(choice))
            total += float(np.sum(weight * (squared + eps * eps) ** (p / 2)))
        return total

    def energy_and_gradient(self, u, p, eps):
        d = self.differences(u)
        total = 0.0
        gradient = np.zeros_like(u)

        for choice, weight in self.orthants:
            squared = sum(d[k][b] ** 2 for k, b in enumerate(choice)) + eps * eps
            total += float(np.sum(weight * squared ** (p / 2)))
            # flat orthants at ε = 0 have zero gradient; keeps squared^(p/2 − 1) finite for p < 2
            squared = np.maximum(squared, TINY)

            with np.errstate(divide="ignore", invalid="ignore"):
                t = np.where(weight > 0, weight * p * squared ** (p / 2 - 1), 0.0)

            for k, b in enumerate(choice):
                c = t * d[k][b] * self.inv[k][b]
                gradient -= c
                gradient += np.roll(np.where(self.cut[k][b], 0.0, c), SIGNS[b], axis=k)

        return total, gradient

    def quadratic_diagonal(self):
        """Diagonal of the Hessian of the p = 2, ε = 0 energy."""
        diagonal = np.zeros(self.kinds.shape)
        for choice, weight in self.orthants:
            for k, b in enumerate(choice):
                c = 2 * weight * self.inv[k][b] ** 2
                diagonal += c
                diagonal += np.roll(np.where(self.cut[k][b], 0.0, c), SIGNS[b], axis=k)
        return diagonal

    def harmonic_guess(self, sweeps):
        u = self.fixed.copy()
        u[self.free] = 0.5

        diagonal = self.quadratic_diagonal()[self.free]
        diagonal[diagonal == 0] = 1.0

        for _ in range(sweeps):
            _, gradient = self.energy_and_gradient(u, 2.0, 0.0)
            u[self.free] -= gradient[self.free] / diagonal

        return u

    def inner(self, u):
        inner = (slice(1, -1),) * self.dimension
        values = np.array(u[inner], copy=True)
        values[self.kinds[inner] == OUTSIDE] = np.nan
        return values


def _line_search(evaluate, x, energy, direction, slope, alpha):
    """Parabolic fit through the trial step, then Armijo backtracking."""
    trial = evaluate(x + alpha * direction)

    curvature = trial - energy - slope * alpha
    if curvature > 0:
        fitted = -slope * alpha * alpha / (2 * curvature)
        fitted_energy = evaluate(x + fitted * direction)
        if fitted_energy < trial:
            alpha, trial = fitted, fitted_energy

    for _ in range(MAX_BACKTRACKS):
        if trial <= energy + ARMIJO * alpha * slope:
            return alpha
        alpha *= BACKTRACK
        trial = evaluate(x + alpha * direction)

    return None


def _minimize(stencil: _Stencil, u, p, eps, config: SolverConfig):
    """
    Polak-Ribière+ nonlinear conjugate gradient over the free cells.

    A stage stops when a step along the steepest-descent direction no longer decreases the energy by more than
    tol_energy (relative). A small decrease along a conjugate direction only restarts from the gradient.

    :return: (u, energy, gradient norm, iterations, converged); converged is False when the budget runs out or the
        energy or gradient stops being finite
    """
    free = stencil.free
    work = u.copy()

    def evaluate(x):
        work[free] = x
        return stencil.energy(work, p, eps)

    def evaluate_with_gradient(x):
        work[free] = x
        energy, gradient = stencil.energy_and_gradient(work, p, eps)
        return energy, gradient[free]

    def finite(energy, gradient):
        return math.isfinite(energy) and bool(np.all(np.isfinite(gradient)))

    x = u[free].copy()
    energy, gradient = evaluate_with_gradient(x)
    if not finite(energy, gradient):
        return _finish(u, free, x), energy, math.nan, 0, False

    direction = -gradient
    alpha = None
    steepest = True

    for iteration in range(1, config.max_iter + 1):
        slope = float(gradient @ direction)
        if slope >= 0:
            direction = -gradient
            slope = -float(gradient @ gradient)
            steepest = True

        if slope == 0:
            return _finish(u, free, x), energy, 0.0, iteration - 1, True

        if alpha is None:
            alpha = 0.1 / float(np.max(np.abs(direction)))

        step = _line_search(evaluate, x, energy, direction, slope, alpha)
        if step is None:
            if steepest:
                # no descent along the gradient: minimum reached to machine precision
                return _finish(u, free, x), energy, float(np.linalg.norm(gradient)), iteration, True
            direction, alpha, steepest = -gradient, None, True
            continue

        x = x + step * direction
        new_energy, new_gradient = evaluate_with_gradient(x)
        if not finite(new_energy, new_gradient):
            return _finish(u, free, x), new_energy, math.nan, iteration, False
        decrease = (energy - new_energy) / max(abs(new_energy), TINY)
        took_steepest = steepest

        if iteration % config.restart == 0:
            beta = 0.0
        else:
            beta = max(0.0, float(new_gradient @ (new_gradient - gradient)) / float(gradient @ gradient))

        direction = -new_gradient + beta * direction
        steepest = beta == 0.0
        gradient, energy, alpha = new_gradient, new_energy, step

        if decrease < config.tol_energy:
            if took_steepest:
                return _finish(u, free, x), energy, float(np.linalg.norm(gradient)), iteration, True
            direction, steepest = -gradient, True

    return _finish(u, free, x), energy, float(np.linalg.norm(gradient)), config.max_iter, False


def _finish(u, free, x):
    u = u.copy()
    u[free] = x
    return u


def _check_maximum_principle(result: CapacityResult):
    tolerance = TOLERANCES["max_principle"]
    values = result.minimizer[np.isfinite(result.minimizer)]
    low, high = float(values.min()), float(values.max())
    if low < -tolerance or high > 1 + tolerance:
        warnings.warn(f"discrete minimizer leaves [0, 1]: range [{low:.3g}, {high:.3g}]", stacklevel=3)


def solve_capacity(condenser: Condenser, config: SolverConfig | None = None) -> CapacityResult:
    """
    The p-capacity of a condenser: minimize the discrete p-Dirichlet energy over functions equal to 0 on F₀ and 1 on
    F₁, continuing over the decreasing regularization schedule, and report the energy of the minimizer at ε = 0.

    Raises ConvergenceError, carrying the partial result, when a stage exhausts its iteration budget.
    """
    config = config or SolverConfig()
    p = condenser.p
    if not P_RANGE[0] <= p <= P_RANGE[1]:
        raise ValidationError(f"the solver supports p in [{P_RANGE[0]}, {P_RANGE[1]}], got {p}", "condenser.p")

    stencil = _Stencil(condenser)
    logger.info("solving %r: %d free cells", condenser, int(stencil.free.sum()))

    u = stencil.harmonic_guess(config.jacobi_sweeps)
    trace = []
    iterations = 0
    grad_norm = 0.0

    for eps in config.eps_schedule:
        if np.any(stencil.free):
            u, energy, grad_norm, used, converged = _minimize(stencil, u, p, eps, config)
        else:
            energy, used, converged = stencil.energy(u, p, eps), 0, True

        iterations += used
        trace.append({"epsilon": eps, "iterations": used, "energy": energy, "grad_norm": grad_norm})
        logger.debug("ε=%g: %d iterations, energy %.10g, |∇E| %.3g", eps, used, energy, grad_norm)

        if not converged:
            partial = CapacityResult(stencil.energy(u, p, 0.0), stencil.inner(u), iterations, grad_norm,
                                     config.eps_schedule, trace, False, p, condenser.domain)
            if math.isfinite(energy) and math.isfinite(grad_norm):
                message = f"capacity solver did not converge within {config.max_iter} iterations at ε={eps}"
            else:
                message = f"capacity solver did not converge: non-finite energy or gradient at ε={eps}"
            raise ConvergenceError(message, partial)

    result = CapacityResult(stencil.energy(u, p, 0.0), stencil.inner(u), iterations, grad_norm, config.eps_schedule,
                            trace, True, p, condenser.domain)
    _check_maximum_principle(result)
    logger.info("capacity %.8g after %d iterations", result.value, iterations)
    return result


def bracket_capacity(condenser: Condenser, config: SolverConfig | None = None) -> dict:
    """Capacities with eroded and with dilated plates, bracketing the rasterization error."""
    eroded, dilated = bracket_condensers(condenser)
    return {"eroded": solve_capacity(eroded, config), "dilated": solve_capacity(dilated, config)}
