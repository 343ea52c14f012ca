"""
Point estimators of the population mean from an error-contaminated sample.

Every family is a function of the observed means (x̄, ȳ) only, so `evaluate_means` works on
scalars and on numpy arrays of per-replication means alike. `estimate` is the checked
scalar entry point: it raises on zero denominators and warns when the expansion the
MSE formulas rely on does not hold for the sample.
"""
from dataclasses import dataclass, field, replace
from enum import StrEnum
import logging
from typing import Any, Optional
import warnings

import numpy as np

from .design import PopulationParams, derive_constants
from .errors import (
    DegenerateDesignError,
    EstimatorDomainError,
    ExpansionValidityWarning,
    InvalidParameterError,
    SingularTauError,
    ZeroDenominatorError,
    ZeroMeanError,
)


class Family(StrEnum):
    MEAN = 'mean'
    DUAL_RATIO = 'dual_ratio'
    RATIO_CUM_DUAL = 'ratio_cum_dual'
    WIDER = 'wider'
    MODIFIED_DIFFERENCE = 'modified_difference'
    DIFF_CUM_DUAL = 'diff_cum_dual'


# tuning constants each family reads; everything else is ignored on serialization
FAMILY_CONSTANTS: dict[Family, tuple[str, ...]] = {
    Family.MEAN: (),
    Family.DUAL_RATIO: (),
    Family.RATIO_CUM_DUAL: ('alpha',),
    Family.WIDER: ('member', 'epsilon'),
    Family.MODIFIED_DIFFERENCE: ('J',),
    Family.DIFF_CUM_DUAL: ('d1', 'd2', 'c1', 'c2', 'c3'),
}

YP_MEMBERS = tuple(f'yp{i}' for i in range(1, 8))
WIDER_MEMBERS = (1, 2, 3, 4)


@dataclass(frozen=True, eq=False)
class ObservedSample:
    """Observed (x, y) values of the sampled units, measurement error included."""

    xs: np.ndarray
    ys: np.ndarray
    N: int

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        ys = np.asarray(self.ys, dtype=float)
        object.__setattr__(self, 'xs', xs)
        object.__setattr__(self, 'ys', ys)

        if xs.ndim != 1 or ys.ndim != 1:
            raise InvalidParameterError('xs', 'observations must be one dimensional')
        if len(xs) != len(ys):
            raise InvalidParameterError('ys', f'length {len(ys)} differs from xs length {len(xs)}')
        if len(ys) == 0:
            raise InvalidParameterError('ys', 'empty sample')
        if len(ys) < 2:
            raise InvalidParameterError('ys', 'sample needs at least 2 units')
        if self.n >= self.N:
            raise DegenerateDesignError(self.n, self.N)

    @property
    def n(self) -> int:
        return len(self.ys)


@dataclass(frozen=True)
class EstimatorSpec:
    """
    One estimator: its family, tuning constants and the population knowns it uses.
    `lam` is only read by the modified difference family and `beta` only by diff_cum_dual.
    """

    family: Family
    mu_x: float
    alpha: float = 0.0
    member: int = 3
    epsilon: float = 1.0
    J: float = 0.0
    d1: float = 0.0
    d2: float = 1.0
    c1: float = 1.0
    c2: float = 0.0
    c3: int = 1
    beta: float = 0.0
    lam: float = 1.0
    # display name, e.g. 'wider3' or 'yp7'
    name: str = field(default='')

    def __post_init__(self):
        object.__setattr__(self, 'family', Family(self.family))
        if not self.name:
            object.__setattr__(self, 'name', self.default_name())

        if self.mu_x == 0:
            raise ZeroMeanError('mu_x must be nonzero')
        if self.family == Family.WIDER and self.member not in WIDER_MEMBERS:
            raise InvalidParameterError('member', f'wider class member must be one of 1..4, got {self.member}')
        if self.family == Family.DIFF_CUM_DUAL:
            if self.c3 not in (-1, 0, 1):
                raise InvalidParameterError('c3', f'must be -1, 0 or 1, got {self.c3}')
            if self.c1 * self.mu_x + self.c2 == 0:
                raise InvalidParameterError('c2', 'c1 * mu_x + c2 must be nonzero')

    def default_name(self) -> str:
        if self.family == Family.WIDER:
            return f'wider{self.member}'
        return str(self.family)

    @property
    def tau(self) -> float:
        """c1/(c1 mu_x + c2) of a diff_cum_dual spec."""
        return self.c1 / (self.c1 * self.mu_x + self.c2)

    def with_constants(self, **constants: float) -> 'EstimatorSpec':
        return replace(self, **constants)

    def constants(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in FAMILY_CONSTANTS[self.family]}

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            'family': str(self.family),
            'name': self.name,
            'mu_x': self.mu_x,
            'constants': self.constants(),
        }
        if self.family == Family.DIFF_CUM_DUAL:
            d['beta'] = self.beta
        if self.family == Family.MODIFIED_DIFFERENCE:
            d['lambda'] = self.lam
        return d

    @classmethod
    def from_dict(cls, data: dict[str, Any], params: Optional[PopulationParams] = None) -> 'EstimatorSpec':
        """
        Parse the JSON form: {"family": ..., "constants": {...}} plus optional knowns
        "mu_x", "beta", "lambda" and "name".
        Family names "yp1".."yp7" expand to their (c1, c2, c3) and need `params`; "dual_product"
        names the diff_cum_dual reduction ȳ mu_x / x̄**.
        Knowns missing from the JSON are taken from `params`.
        @throws InvalidParameterError
        """
        if not isinstance(data, dict) or 'family' not in data:
            raise InvalidParameterError('family', 'estimator needs a "family"')

        unknown = sorted(set(data) - {'family', 'name', 'mu_x', 'beta', 'lambda', 'constants'})
        if unknown:
            raise InvalidParameterError(unknown[0], 'unknown estimator field')

        family_name = data['family']
        constants = dict(data.get('constants', {}))
        name = data.get('name', '')

        if family_name in YP_MEMBERS:
            if params is None:
                raise InvalidParameterError('family', f'{family_name} needs population params')
            base = yp_member_spec(family_name, params)
            extra = sorted(set(constants) - {'d1', 'd2'})
            if extra:
                raise InvalidParameterError(extra[0], f'{family_name} fixes c1, c2 and c3')
            return replace(base, **constants, name=name or family_name)

        if family_name == 'dual_product':
            if constants:
                raise InvalidParameterError(sorted(constants)[0], 'dual_product has no tuning constants')
            mu_x = data.get('mu_x', params.mean_x if params is not None else None)
            if mu_x is None:
                raise InvalidParameterError('mu_x', 'missing and no population params given')
            return replace(dual_to_product(mu_x), name=name or family_name)

        try:
            family = Family(family_name)
        except ValueError:
            raise InvalidParameterError('family', f'unknown estimator family {family_name!r}') from None

        extra = sorted(set(constants) - set(FAMILY_CONSTANTS[family]))
        if extra:
            raise InvalidParameterError(extra[0], f'not a constant of {family}')

        knowns: dict[str, Any] = {}
        if 'mu_x' in data:
            knowns['mu_x'] = data['mu_x']
        elif params is not None:
            knowns['mu_x'] = params.mean_x
        else:
            raise InvalidParameterError('mu_x', 'missing and no population params given')

        if family == Family.DIFF_CUM_DUAL:
            if 'beta' in data:
                knowns['beta'] = data['beta']
            elif params is not None:
                knowns['beta'] = params.regression_coefficient()
            else:
                raise InvalidParameterError('beta', 'missing and no population params given')

        if family == Family.MODIFIED_DIFFERENCE:
            if 'lambda' in data:
                knowns['lam'] = data['lambda']
            elif params is not None:
                knowns['lam'] = derive_constants(params).lam
            else:
                raise InvalidParameterError('lambda', 'missing and no population params given')

        try:
            return cls(family=family, name=name, **knowns, **constants)
        except TypeError as e:
            raise InvalidParameterError('constants', str(e)) from e


def sample_means(s: ObservedSample) -> tuple[float, float]:
    """
    @returns (x̄, ȳ) of the observed values
    @throws InvalidParameterError on an empty sample
    """
    if s.n == 0:
        raise InvalidParameterError('ys', 'empty sample')
    return float(np.mean(s.xs)), float(np.mean(s.ys))


def dual_transform(xbar, mu_x: float, N: int, n: int):
    """
    x̄** = (N mu_x - n x̄)/(N - n), evaluated as mu_x - n1 (x̄ - mu_x).
    Accepts a scalar or an array of sample means.
    @throws DegenerateDesignError when n >= N
    """
    if n >= N:
        raise DegenerateDesignError(n, N)
    n1 = n / (N - n)
    return mu_x - n1 * (xbar - mu_x)


def evaluate_means(spec: EstimatorSpec, xbar, ybar, N: int, n: int):
    """
    Evaluate the estimator from observed sample means, unchecked.
    With array inputs, zero denominators produce inf/nan elements instead of errors.
    """
    xss = dual_transform(xbar, spec.mu_x, N, n)
    u = xss / spec.mu_x

    match spec.family:
        case Family.MEAN:
            return ybar + 0 * xbar
        case Family.DUAL_RATIO:
            return ybar * u
        case Family.RATIO_CUM_DUAL:
            a = spec.alpha
            return ybar * (a * spec.mu_x / xbar + (1 - a) * u)
        case Family.WIDER:
            return _wider_member(spec.member, spec.epsilon, ybar, u)
        case Family.MODIFIED_DIFFERENCE:
            J = spec.J
            return (1 - J) * ybar + J * spec.lam * ybar * u
        case Family.DIFF_CUM_DUAL:
            regression = ybar + spec.beta * (spec.mu_x - xss)
            base = (spec.c1 * xss + spec.c2) / (spec.c1 * spec.mu_x + spec.c2)
            if spec.c3 == 1:
                adjust = base
            elif spec.c3 == -1:
                adjust = 1 / base
            else:
                adjust = 1 + 0 * base
            return spec.d1 * regression + spec.d2 * ybar * adjust

    raise ValueError(f'unhandled family {spec.family}')


def _wider_member(member: int, eps: float, ybar, u):
    match member:
        case 1:
            return ybar * (eps + (1 - eps) * u)
        case 2:
            return ybar * (2 - u ** (-eps))
        case 3:
            return ybar * (1 + eps * (u - 1))
        case 4:
            return ybar * (1 / u + eps * (1 - 1 / u))
    raise InvalidParameterError('member', f'wider class member must be one of 1..4, got {member}')


def expansion_deviation(spec: EstimatorSpec, xbar, N: int, n: int):
    """
    Size of the term whose power series the MSE formulas truncate, |tau n1 kappa_X|
    with kappa_X = x̄ - mu_x. Zero for forms that are linear in x̄**.
    """
    n1 = n / (N - n)
    kappa_x = xbar - spec.mu_x

    match spec.family:
        case Family.DIFF_CUM_DUAL if spec.c3 == -1:
            return np.abs(spec.tau * n1 * kappa_x)
        case Family.WIDER if spec.member in (2, 4):
            return np.abs(n1 * kappa_x / spec.mu_x)
        case Family.RATIO_CUM_DUAL if spec.alpha != 0:
            # mu_x/x̄ expands in kappa_X/mu_x
            return np.abs(kappa_x / spec.mu_x)
    return 0 * np.abs(kappa_x)


def estimate(spec: EstimatorSpec, s: ObservedSample) -> float:
    """
    Point estimate of the population mean for one observed sample.
    @throws ZeroDenominatorError when x̄ = 0 (ratio_cum_dual), u** = 0 or c1 x̄** + c2 = 0
    @throws EstimatorDomainError for a negative u** raised to a fractional power
    @warns ExpansionValidityWarning when |tau n1 kappa_X| >= 1; the estimate is still returned
    """
    xbar, ybar = sample_means(s)
    N, n = s.N, s.n
    xss = dual_transform(xbar, spec.mu_x, N, n)
    u = xss / spec.mu_x

    match spec.family:
        case Family.RATIO_CUM_DUAL if xbar == 0:
            raise ZeroDenominatorError('ratio_cum_dual: x̄ = 0')
        case Family.WIDER if spec.member in (2, 4) and u == 0:
            raise ZeroDenominatorError(f'wider{spec.member}: u** = 0')
        case Family.WIDER if spec.member == 2 and u < 0 and not float(spec.epsilon).is_integer():
            raise EstimatorDomainError(f'wider2: u** = {u} < 0 raised to -{spec.epsilon}')
        case Family.DIFF_CUM_DUAL if spec.c3 == -1 and spec.c1 * xss + spec.c2 == 0:
            raise ZeroDenominatorError(f'{spec.name}: c1 x̄** + c2 = 0')

    deviation = expansion_deviation(spec, xbar, N, n)
    if deviation >= 1:
        logging.debug(f'{spec.name}: expansion term {deviation:.4g} >= 1')
        warnings.warn(
            f'{spec.name}: |tau n1 kappa_X| = {deviation:.4g} >= 1, the MSE expansion does not hold for this sample',
            ExpansionValidityWarning,
            stacklevel=2,
        )

    return float(evaluate_means(spec, xbar, ybar, N, n))


def tau_values(mu_x: float, cx: float, rho: float) -> tuple[float, ...]:
    """
    tau_1..tau_8, each of the form c1/(c1 mu_x + c2) for a known (c1, c2).
    tau_4 repeats tau_1.
    @throws SingularTauError naming the first index whose denominator vanishes
    """
    # (numerator, denominator) per index
    terms = [
        (rho, rho * mu_x - cx),
        (1.0, mu_x - cx ** 2),
        (rho, rho * mu_x + cx),
        (rho, rho * mu_x - cx),
        (cx, mu_x * (cx - 1)),
        (cx, mu_x * (cx + 1)),
        (1.0, mu_x + cx),
        (1.0, mu_x - cx),
    ]

    values = []
    for i, (num, den) in enumerate(terms, start=1):
        if den == 0:
            raise SingularTauError(i, 'denominator is zero')
        values.append(num / den)
    return tuple(values)


# Named diff_cum_dual members: (c1, c2, c3, tau index) with c1, c2 as functions of (rho, C_x, mu_x)
YP_FORMS = {
    'yp1': (lambda rho, cx, mu: (-rho, cx), 1, 1),
    'yp2': (lambda rho, cx, mu: (rho, cx), -1, 3),
    'yp3': (lambda rho, cx, mu: (-rho, cx), -1, 1),
    'yp4': (lambda rho, cx, mu: (-cx, mu), -1, 5),
    'yp5': (lambda rho, cx, mu: (cx, mu), -1, 6),
    'yp6': (lambda rho, cx, mu: (1.0, cx), -1, 7),
    'yp7': (lambda rho, cx, mu: (1.0, -cx), -1, 8),
}


def yp_member_spec(name: str, params: PopulationParams, d1: float = 0.0, d2: float = 1.0) -> EstimatorSpec:
    """
    DiffCumDual spec for a named diff_cum_dual member.
    @throws SingularTauError when the member's c1 mu_x + c2 vanishes
    """
    try:
        cs, c3, tau_index = YP_FORMS[name]
    except KeyError:
        raise InvalidParameterError('family', f'unknown member {name!r}, expected one of {", ".join(YP_FORMS)}') from None

    dc = derive_constants(params)
    c1, c2 = cs(params.rho, dc.cx, params.mean_x)
    if c1 * params.mean_x + c2 == 0:
        raise SingularTauError(tau_index, f'{name}: c1 mu_x + c2 = 0')

    return EstimatorSpec(
        family=Family.DIFF_CUM_DUAL,
        mu_x=params.mean_x,
        d1=d1,
        d2=d2,
        c1=c1,
        c2=c2,
        c3=c3,
        beta=params.regression_coefficient(),
        name=name,
    )


def tau_index_of(name: str) -> int:
    return YP_FORMS[name][2]


def dual_to_product(mu_x: float) -> EstimatorSpec:
    """diff_cum_dual reduced to ȳ mu_x / x̄**, the dual of the product estimator."""
    return EstimatorSpec(family=Family.DIFF_CUM_DUAL, mu_x=mu_x, d1=0.0, d2=1.0, c1=1.0, c2=0.0, c3=-1, name='dual_product')


def member_constant_from_g1(k: int, g1: float, mean_y: float) -> float:
    """
    Tuning constant of wider class member k whose derivative with respect to u** at (Ȳ, 1) equals g1.
    @throws ZeroMeanError when mean_y = 0
    """
    if mean_y == 0:
        raise ZeroMeanError('mean_y must be nonzero')

    ratio = g1 / mean_y
    match k:
        case 1:
            return 1 - ratio
        case 2 | 3:
            return ratio
        case 4:
            return 1 + ratio
    raise InvalidParameterError('member', f'wider class member must be one of 1..4, got {k}')


@dataclass(frozen=True)
class MemberDerivatives:
    """
    Derivatives of g(ȳ, u**) at (Ȳ, 1):
    g1 = dg/du, g2 = 1/2 d2g/du2, g3 = d2g/(dȳ du), g4 = 1/2 d2g/dȳ2.
    """

    g1: float
    g2: float
    g3: float
    g4: float


def member_derivatives(k: int, epsilon: float, mean_y: float) -> MemberDerivatives:
    match k:
        case 1:
            g1 = mean_y * (1 - epsilon)
            g2 = 0.0
        case 2:
            g1 = mean_y * epsilon
            g2 = -0.5 * mean_y * epsilon * (epsilon + 1)
        case 3:
            g1 = mean_y * epsilon
            g2 = 0.0
        case 4:
            g1 = mean_y * (epsilon - 1)
            g2 = mean_y * (1 - epsilon)
        case _:
            raise InvalidParameterError('member', f'wider class member must be one of 1..4, got {k}')

    # every member is linear in ȳ
    return MemberDerivatives(g1=g1, g2=g2, g3=g1 / mean_y, g4=0.0)


def wider_member_function(k: int, epsilon: float):
    """g(ȳ, u**) of member k, for numeric differentiation."""
    def g(ybar: float, u: float) -> float:
        return float(_wider_member(k, epsilon, ybar, u))
    return g
