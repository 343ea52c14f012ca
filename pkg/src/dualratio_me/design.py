"""
Population parameters of the measurement error model and the design constants derived from them.

Observed values carry additive errors, y = Y + dY and x = X + dX, with mean zero errors
uncorrelated with each other and with the true values. Under simple random sampling
without replacement every analytic formula is written in terms of
r0 = gamma (S_Y^2 + S_dY^2), r1 = gamma (S_X^2 + S_dX^2) and r01 = gamma rho S_Y S_X.
"""
from dataclasses import asdict, dataclass, field, fields, replace
import math
from numbers import Integral, Real
from typing import Any, Optional

from .errors import (
    DegenerateDesignError,
    InvalidParameterError,
    ZeroDenominatorError,
    ZeroMeanError,
)


@dataclass(frozen=True)
class PopulationParams:
    """Known moments of (Y, X) and the measurement error variances."""

    N: int
    n: int
    mean_y: float
    mean_x: float
    var_y: float
    var_x: float
    var_ey: float
    var_ex: float
    rho: float
    # regression coefficient S_yx/S_x^2; derived from rho when None
    beta: Optional[float] = field(default=None)

    def __post_init__(self):
        for name in ('N', 'n'):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, Integral):
                raise InvalidParameterError(name, f'expected an integer, got {value!r}')

        for f in fields(self):
            if f.name in ('N', 'n'):
                continue
            value = getattr(self, f.name)
            if value is None and f.name == 'beta':
                continue
            if isinstance(value, bool) or not isinstance(value, Real) or not math.isfinite(value):
                raise InvalidParameterError(f.name, f'expected a finite real, got {value!r}')

        if self.n < 2:
            raise InvalidParameterError('n', f'sample size must be at least 2, got {self.n}')
        if self.n >= self.N:
            raise DegenerateDesignError(self.n, self.N)

        for name in ('var_y', 'var_x', 'var_ey', 'var_ex'):
            if getattr(self, name) < 0:
                raise InvalidParameterError(name, f'variance must be >= 0, got {getattr(self, name)}')

        if abs(self.rho) > 1:
            raise InvalidParameterError('rho', f'correlation must be in [-1, 1], got {self.rho}')

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> 'PopulationParams':
        """
        Build from a flat JSON object with the field names of this class.
        @throws InvalidParameterError naming the offending field
        """
        if not isinstance(data, dict):
            raise InvalidParameterError('params', 'expected a JSON object')

        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise InvalidParameterError(unknown[0], 'unknown field')

        missing = [f.name for f in fields(cls) if f.name != 'beta' and f.name not in data]
        if missing:
            raise InvalidParameterError(missing[0], 'missing field')

        return cls(**data)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        if d['beta'] is None:
            del d['beta']
        return d

    def regression_coefficient(self) -> float:
        """
        Known regression coefficient of Y on X.
        Uses the explicit beta when given, otherwise rho S_Y / S_X.
        @throws ZeroDenominatorError when beta must be derived and S_X = 0
        """
        if self.beta is not None:
            return self.beta
        if self.var_x == 0:
            raise ZeroDenominatorError('beta undefined: var_x = 0')
        return self.rho * math.sqrt(self.var_y) / math.sqrt(self.var_x)

    def with_sample_size(self, n: int) -> 'PopulationParams':
        return replace(self, n=n)


@dataclass(frozen=True)
class DesignConstants:
    gamma: float
    n1: float
    R: float
    cy: float
    cx: float
    r0: float
    r1: float
    r01: float
    lam: float

    def to_dict(self) -> dict[str, float]:
        d = asdict(self)
        d['lambda'] = d.pop('lam')
        return d


def derive_constants(p: PopulationParams) -> DesignConstants:
    """
    Compute every derived constant used by the analytic formulas.
    C_yx in lambda is taken as rho C_Y C_X.
    @throws DegenerateDesignError when n >= N
    @throws ZeroMeanError when mean_x or mean_y is zero
    """
    if p.n >= p.N:
        raise DegenerateDesignError(p.n, p.N)
    if p.mean_x == 0:
        raise ZeroMeanError('mean_x must be nonzero')
    if p.mean_y == 0:
        raise ZeroMeanError('mean_y must be nonzero for the coefficient of variation C_Y')

    gamma = 1 / p.n - 1 / p.N
    n1 = p.n / (p.N - p.n)

    sd_y = math.sqrt(p.var_y)
    sd_x = math.sqrt(p.var_x)
    cy = sd_y / p.mean_y
    cx = sd_x / p.mean_x

    r0 = gamma * (p.var_y + p.var_ey)
    r1 = gamma * (p.var_x + p.var_ex)
    r01 = gamma * p.rho * sd_y * sd_x

    cyx = p.rho * cy * cx
    lam = (1 + gamma * cyx) / (1 + gamma * cx ** 2)

    return DesignConstants(
        gamma=gamma,
        n1=n1,
        R=p.mean_y / p.mean_x,
        cy=cy,
        cx=cx,
        r0=r0,
        r1=r1,
        r01=r01,
        lam=lam,
    )
