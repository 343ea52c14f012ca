"""
Exceptions shared across the package.

The CLI maps the three roots to exit codes:
ConfigError -> 2, NumericalSingularityError -> 3, MonteCarloFailureError -> 4.
"""


class ConfigError(Exception):
    """Logical configuration error with app config system."""


class InvalidParameterError(ConfigError, ValueError):
    """A configuration field holds an invalid value."""

    field: str

    def __init__(self, field: str, message: str) -> None:
        self.field = field
        super().__init__(f'{field}: {message}')


class NumericalSingularityError(ArithmeticError):
    """A formula hit a zero denominator or another singular point."""


class DegenerateDesignError(NumericalSingularityError, InvalidParameterError):
    """Sample size is not smaller than the population size."""

    def __init__(self, n: int, N: int) -> None:
        InvalidParameterError.__init__(self, 'n', f'degenerate design, need 2 <= n < N (n={n}, N={N})')


class ZeroMeanError(NumericalSingularityError):
    pass


class ZeroDenominatorError(NumericalSingularityError, ZeroDivisionError):
    pass


class EstimatorDomainError(NumericalSingularityError):
    """Estimator evaluated outside its real domain, e.g. a negative base to a fractional power."""


class SingularTauError(NumericalSingularityError):
    index: int

    def __init__(self, index: int, message: str) -> None:
        self.index = index
        super().__init__(f'tau{index}: {message}')


class FlatObjectiveError(NumericalSingularityError):
    """Quadratic objective has no curvature, so no unique optimum."""


class SingularNormalEquationsError(NumericalSingularityError):
    pass


class ZeroR1Error(NumericalSingularityError):
    """r1 is zero: the auxiliary variable carries no variation at all."""


class NonPositiveMSEError(NumericalSingularityError):
    pass


class DegeneratePopulationError(NumericalSingularityError):
    """Generated population has zero variance, so moments like rho are undefined."""


class MonteCarloFailureError(RuntimeError):
    """Too many replications flagged a numerical failure."""

    def __init__(self, message: str, result=None) -> None:
        # the MonteCarloResult, still useful for reporting
        self.result = result
        super().__init__(message)


class ExpansionValidityWarning(UserWarning):
    """|tau * n1 * kappa_X| >= 1, the MSE expansion does not hold for this sample."""
