"""Error taxonomy shared across the package.

Split by what went wrong rather than where: configuration problems
(dimensions, invalid parameter combinations), numerical rank failures,
and convergence failures of numeric routines. The CLI maps each class
to a distinct exit code.
"""


class ConfigurationError(ValueError):
    """Invalid or inconsistent configuration (dimensions, flags, domains)."""


class NumericalRankError(ArithmeticError):
    """A matrix that must have full column rank numerically does not."""


class NumericError(ArithmeticError):
    """A numeric routine failed to reach its requested tolerance."""

    def __init__(self, message, achieved_tolerance=None):
        super().__init__(message)
        self.achieved_tolerance = achieved_tolerance
