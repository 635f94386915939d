"""Exception types raised across the package."""

__all__ = [
    "CapDispatchError",
    "DimensionMismatch",
    "NotSymmetric",
    "NotPsd",
    "NonFinite",
    "ParseError",
    "SchemaViolation",
    "IslandedBusWarning",
    "NotStrictlyConvex",
    "NotLinear",
    "NegativeMultiplier",
    "InfeasiblePoint",
    "UnknownRow",
    "DuplicateCap",
    "NegativeCapOnInequalityRow",
    "MissingAlphaVariable",
    "BudgetExceeded",
    "InfeasibleLp",
    "UnboundedLp",
    "NoFeasibleGridPoint",
    "NotARelaxationPair",
]


class CapDispatchError(Exception):
    """Base class for every error raised by capdispatch."""


# model ---------------------------------------------------------------------

class DimensionMismatch(CapDispatchError, ValueError):
    pass


class NotSymmetric(CapDispatchError, ValueError):
    pass


class NotPsd(CapDispatchError, ValueError):
    def __init__(self, min_eigenvalue: float):
        self.min_eigenvalue = min_eigenvalue
        super().__init__(f"Q is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")


class NonFinite(CapDispatchError, ValueError):
    pass


class ParseError(CapDispatchError):
    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(message + suffix)


class SchemaViolation(CapDispatchError, ValueError):
    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class IslandedBusWarning(UserWarning):
    """A bus with fixed demand has no line path to any generator."""


# dualize -------------------------------------------------------------------

class NotStrictlyConvex(CapDispatchError, ValueError):
    def __init__(self, min_eigenvalue: float, threshold: float):
        self.min_eigenvalue = min_eigenvalue
        super().__init__(
            f"Q is not strictly positive definite (min eigenvalue {min_eigenvalue:.3e} < {threshold:.0e}); "
            "the explicit dual needs Q^-1. Use the LP dual (lp_dual) for linear problems "
            "or solve the primal directly."
        )


class NotLinear(CapDispatchError, ValueError):
    def __init__(self):
        super().__init__("lp_dual requires Q == 0; use build_dual_qp for strictly convex QPs")


class NegativeMultiplier(CapDispatchError, ValueError):
    def __init__(self, index: int, value: float):
        self.index = index
        self.value = value
        super().__init__(f"multiplier {index} is negative ({value:.3e})")


class InfeasiblePoint(CapDispatchError, ValueError):
    def __init__(self, row: str, violation: float):
        self.row = row
        self.violation = violation
        super().__init__(f"point is not primal feasible: row {row} violated by {violation:.3e}")


# pricecap ------------------------------------------------------------------

class UnknownRow(CapDispatchError, KeyError):
    def __init__(self, row):
        self.row = row
        super().__init__(f"unknown constraint row {row!r}")

    def __str__(self):
        return self.args[0]


class DuplicateCap(CapDispatchError, ValueError):
    def __init__(self, row: str):
        self.row = row
        super().__init__(f"more than one cap on row {row}")


class NegativeCapOnInequalityRow(CapDispatchError, ValueError):
    def __init__(self, row: str, cap: float):
        self.row = row
        self.cap = cap
        super().__init__(f"cap {cap} on inequality row {row} is negative; its dual is already >= 0")


class MissingAlphaVariable(CapDispatchError, KeyError):
    def __init__(self, label: str):
        self.label = label
        super().__init__(f"no variable {label} in the capped problem")

    def __str__(self):
        return self.args[0]


# verify --------------------------------------------------------------------

class BudgetExceeded(CapDispatchError):
    pass


class InfeasibleLp(CapDispatchError):
    pass


class UnboundedLp(CapDispatchError):
    pass


class NoFeasibleGridPoint(CapDispatchError):
    pass


class NotARelaxationPair(CapDispatchError, ValueError):
    pass
