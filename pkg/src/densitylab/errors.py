"""Exception types shared across the package."""

from __future__ import annotations


class DensityLabError(Exception):
    """Base class for all package errors."""


class ConfigError(DensityLabError, ValueError):
    """Invalid configuration; names the offending field and the violated rule."""

    def __init__(self, field: str, rule: str):
        self.field = field
        self.rule = rule
        super().__init__(f"{field}: {rule}")


class UnboundedSignalError(DensityLabError, ValueError):
    """A signal has no finite supremum on t >= 0."""


class SingularEvaluation(DensityLabError, ArithmeticError):
    """A density field was evaluated on (or outside the boundary of) its singular set."""

    def __init__(self, kind: str, singular_set: str, x=None, t=None):
        self.kind = kind
        self.singular_set = singular_set
        self.x = x
        self.t = t
        super().__init__(f"singular-evaluation: {kind} at x={x}, t={t}; singular set {singular_set}")


class ControllerFault(DensityLabError, ArithmeticError):
    """The control law hit the singular set of its density function."""


class DimensionError(DensityLabError, ValueError):
    """Array dimensions are inconsistent."""


class RescaleInputFirst(DensityLabError, ValueError):
    """Decomposition requires unit plant gain; scale the commanded input by 1/k first."""

    def __init__(self, k: float):
        self.k = k
        super().__init__(f"rescale-input-first: plant gain k={k} must be 1 for decomposition")


class NotHurwitz(DensityLabError, ValueError):
    """A polynomial required to be Hurwitz is not."""
