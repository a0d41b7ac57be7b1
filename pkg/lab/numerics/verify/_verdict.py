import math

from lab.numerics import formulas

IDENTITY = "identity"
INEQUALITY = "inequality"

PASSED = "passed"
FAILED = "failed"
VACUOUS = "vacuous"


class VerificationVerdict:
    """
    Outcome of one numerical check.

    Identities pass when the relative residual |lhs − rhs|/max(|lhs|, |rhs|) is at most the tolerance; the residual is
    stored as slack. Inequalities pass when lhs ≤ rhs·(1 + tolerance), with slack = rhs − lhs. An inequality whose
    right-hand side is infinite passes vacuously and is reported as such, never as evidence.

    :param self.metadata: grid sizes, excluded cells, solver diagnostics and notes
    """

    __slots__ = "name", "kind", "lhs", "rhs", "slack", "tolerance_used", "passed", "vacuous", "metadata"

    def __init__(self, name, kind, lhs, rhs, slack, tolerance_used, passed, vacuous=False, metadata=None):
        self.name = name
        self.kind = kind
        self.lhs = lhs
        self.rhs = rhs
        self.slack = slack
        self.tolerance_used = tolerance_used
        self.passed = passed
        self.vacuous = vacuous
        self.metadata = metadata or {}

    @classmethod
    def identity(cls, name, lhs, rhs, tolerance, metadata=None):
        residual = formulas.relative_difference(lhs, rhs)
        return cls(name, IDENTITY, float(lhs), float(rhs), residual, tolerance, bool(residual <= tolerance),
                   metadata=metadata)

    @classmethod
    def inequality(cls, name, lhs, rhs, tolerance, metadata=None, vacuous=False):
        lhs, rhs = float(lhs), float(rhs)
        vacuous = vacuous or math.isinf(rhs)
        if vacuous:
            return cls(name, INEQUALITY, lhs, rhs, math.inf, tolerance, True, True, metadata)
        return cls(name, INEQUALITY, lhs, rhs, rhs - lhs, tolerance, lhs <= rhs * (1 + tolerance), False, metadata)

    @property
    def status(self):
        if not self.passed:
            return FAILED
        return VACUOUS if self.vacuous else PASSED

    def __repr__(self):
        return f"VerificationVerdict({self.name}: {self.status}, lhs={self.lhs:.6g}, rhs={self.rhs:.6g})"

    def summary(self):
        """One-line human-readable summary."""
        measure = "residual" if self.kind == IDENTITY else "slack"
        return (f"{self.status.upper():8s} {self.name}: lhs={self.lhs:.6g} rhs={self.rhs:.6g} "
                f"{measure}={self.slack:.3g} (tol {self.tolerance_used:.3g})")

    def to_dict(self):
        return {
            "name": self.name,
            "kind": self.kind,
            "lhs": formulas.json_number(self.lhs),
            "rhs": formulas.json_number(self.rhs),
            "slack": formulas.json_number(self.slack),
            "tolerance_used": self.tolerance_used,
            "passed": self.passed,
            "vacuous": self.vacuous,
            "status": self.status,
            "metadata": self.metadata,
        }


def exit_status(verdicts) -> int:
    """0 when every verdict passed with evidence, 1 when any failed, 2 when none failed but some were vacuous."""
    if any(not verdict.passed for verdict in verdicts):
        return 1
    if any(verdict.vacuous for verdict in verdicts):
        return 2
    return 0
