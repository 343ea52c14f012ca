"""
Analytic bias, MSE and optimum constants of each estimator family, to first order of approximation.
"""
from dataclasses import dataclass, field, replace
import logging
from typing import Any, Optional

from ..design import DesignConstants, PopulationParams, derive_constants
from ..errors import NonPositiveMSEError, NumericalSingularityError, ZeroR1Error
from ..estimators import (
    YP_MEMBERS,
    EstimatorSpec,
    Family,
    member_constant_from_g1,
    member_derivatives,
    tau_index_of,
    yp_member_spec,
)
from .coefficients import (
    CoefficientSet,
    Kind,
    coeffs,
    mse_bivariate,
    mse_quadratic,
    optimum_bivariate,
    optimum_scalar,
    phi_bivariate_display,
    phi_scalar_display,
)

# relative disagreement between an evaluated optimum and its closed-form display worth logging
DISPLAY_TOLERANCE = 1e-9

# table row order
ESTIMATOR_ORDER = ('mean', 'dual_ratio', 'ratio_cum_dual', 'wider', 'modified_difference') + YP_MEMBERS


@dataclass
class AnalyticResult:
    """
    Analytic properties of one estimator under one PopulationParams.
    Numeric fields are None when `status` holds an error message.
    """

    estimator: str
    bias: Optional[float]
    mse: Optional[float]
    min_mse: Optional[float]
    optimum_constants: dict[str, float] = field(default_factory=dict)
    coefficients: Optional[CoefficientSet] = None
    status: str = 'ok'

    @property
    def ok(self) -> bool:
        return self.status == 'ok'

    @classmethod
    def failed(cls, estimator: str, error: Exception) -> 'AnalyticResult':
        return cls(estimator=estimator, bias=None, mse=None, min_mse=None, status=f'{type(error).__name__}: {error}')

    def to_dict(self) -> dict[str, Any]:
        return {
            'estimator': self.estimator,
            'bias': self.bias,
            'mse': self.mse,
            'min_mse': self.min_mse,
            'optimum_constants': dict(self.optimum_constants),
            'coefficients': self.coefficients.to_dict() if self.coefficients else None,
            'status': self.status,
        }


def var_mean(dc: DesignConstants, p: PopulationParams) -> float:
    """V(ȳ) = gamma Ȳ^2 (C_Y^2 + S_dY^2/Ȳ^2), which is r0."""
    return dc.r0


def mse_dual_ratio(dc: DesignConstants, p: PopulationParams, with_me: bool = True) -> float:
    """MSE of ȳ x̄**/mu_x, with or without the measurement error terms."""
    if not with_me:
        return dc.gamma * p.mean_y ** 2 * (dc.cy ** 2 + dc.n1 ** 2 * dc.cx ** 2 - 2 * dc.n1 * p.rho * dc.cy * dc.cx)
    n1, R = dc.n1, dc.R
    return dc.r0 + n1 ** 2 * R ** 2 * dc.r1 - 2 * n1 * R * dc.r01


def mean_analytics(dc: DesignConstants, p: PopulationParams) -> AnalyticResult:
    v = var_mean(dc, p)
    return AnalyticResult('mean', bias=0.0, mse=v, min_mse=v)


def dual_ratio_analytics(dc: DesignConstants, p: PopulationParams, with_me: bool = True) -> AnalyticResult:
    m = mse_dual_ratio(dc, p, with_me)
    bias = -dc.n1 * dc.r01 / p.mean_x
    return AnalyticResult('dual_ratio', bias=bias, mse=m, min_mse=m)


def ratio_cum_dual_analytics(dc: DesignConstants, p: PopulationParams, with_me: bool = True) -> AnalyticResult:
    """
    Optimum alpha' of ȳ[alpha' mu_x/x̄ + (1 - alpha') u**] and its min MSE.
    Without measurement error the A set is used, with the error free design constants.
    """
    if with_me:
        cs = coeffs(Kind.B, dc, p)
        moments = dc
    else:
        p0 = replace(p, var_ey=0.0, var_ex=0.0)
        moments = derive_constants(p0)
        cs = coeffs(Kind.A, moments, p0)

    alpha = optimum_scalar(cs)
    m = mse_quadratic(cs, p.mean_y ** 2, alpha)

    mu = p.mean_x
    bias_ratio = (moments.R * moments.r1 - moments.r01) / mu
    bias_dual = -moments.n1 * moments.r01 / mu
    bias = alpha * bias_ratio + (1 - alpha) * bias_dual

    return AnalyticResult(
        'ratio_cum_dual',
        bias=bias,
        mse=m,
        min_mse=m,
        optimum_constants={'alpha': alpha},
        coefficients=cs,
    )


def wider_mse(dc: DesignConstants, p: PopulationParams, g1: float) -> float:
    """r0 + (n1^2 r1/mu_x^2) G1^2 - (2 n1 r01/mu_x) G1"""
    mu = p.mean_x
    return dc.r0 + dc.n1 ** 2 * dc.r1 / mu ** 2 * g1 ** 2 - 2 * dc.n1 * dc.r01 / mu * g1


def wider_g1_optimum(dc: DesignConstants, p: PopulationParams) -> float:
    """
    G1(opt) = r01 mu_x/(n1 r1)
    @throws ZeroR1Error
    """
    if dc.r1 == 0:
        raise ZeroR1Error('r1 = 0, the wider class has no optimum')
    return dc.r01 * p.mean_x / (dc.n1 * dc.r1)


def wider_class_analytics(dc: DesignConstants, p: PopulationParams, member: int = 3) -> AnalyticResult:
    """
    Wider class g(ȳ, u**) at its optimum G1, with the bias of the given member.
    @throws ZeroR1Error
    """
    g1 = wider_g1_optimum(dc, p)
    eps = member_constant_from_g1(member, g1, p.mean_y)
    d = member_derivatives(member, eps, p.mean_y)

    mu, n1 = p.mean_x, dc.n1
    bias = n1 ** 2 * dc.r1 / mu ** 2 * d.g2 - n1 * dc.r01 / mu * d.g3 + dc.r0 * d.g4
    min_mse = dc.r0 - dc.r01 ** 2 / dc.r1

    return AnalyticResult(
        'wider',
        bias=bias,
        mse=wider_mse(dc, p, g1),
        min_mse=min_mse,
        optimum_constants={'G1': g1, 'member': member, 'epsilon': eps},
    )


def modified_difference_analytics(dc: DesignConstants, p: PopulationParams) -> AnalyticResult:
    """
    J(opt) of (1 - J) ȳ + J lambda ȳ u**.
    The min MSE is the quadratic evaluated at J(opt), cross-checked against Ȳ^2 + phi2.
    """
    cs = coeffs(Kind.C, dc, p)
    J = optimum_scalar(cs)
    Y2 = p.mean_y ** 2
    m = mse_quadratic(cs, Y2, J)

    display = Y2 + phi_scalar_display(cs)
    if abs(display - m) > DISPLAY_TOLERANCE * max(abs(m), 1e-300):
        logging.warning(f'modified_difference: evaluated min MSE {m!r} differs from the phi2 display {display!r}')

    lam = dc.lam
    bias = J * lam * (p.mean_y - dc.n1 * dc.r01 / p.mean_x) + (1 - J) * p.mean_y - p.mean_y

    return AnalyticResult(
        'modified_difference',
        bias=bias,
        mse=m,
        min_mse=m,
        optimum_constants={'J': J, 'lambda': lam},
        coefficients=cs,
    )


def diff_cum_dual_bias(dc: DesignConstants, p: PopulationParams, tau: float, c3: int, d1: float, d2: float) -> float:
    Y = p.mean_y
    t = tau * dc.n1
    return d1 * Y + d2 * (Y - c3 * t * dc.r01 + c3 * (c3 - 1) / 2 * t ** 2 * dc.r1 * Y) - Y


def diff_cum_dual_mse(dc: DesignConstants, p: PopulationParams, tau: float, c3: int, beta: float, d1: float, d2: float) -> float:
    """MSE of the diff_cum_dual class at fixed (d1, d2)."""
    cs = coeffs(Kind.D, dc, p, {'tau': tau, 'c3': c3, 'beta': beta})
    return mse_bivariate(cs, p.mean_y ** 2, d1, d2)


def diff_cum_dual_analytics(dc: DesignConstants, p: PopulationParams, tau: float, c3: int, beta: float, name: str = 'diff_cum_dual') -> AnalyticResult:
    """
    Optimum (d1, d2) and min MSE of the diff_cum_dual class.
    @throws SingularNormalEquationsError when D1 D2 = D5^2
    """
    cs = coeffs(Kind.D, dc, p, {'tau': tau, 'c3': c3, 'beta': beta})
    d1, d2 = optimum_bivariate(cs)
    Y2 = p.mean_y ** 2
    m = mse_bivariate(cs, Y2, d1, d2)

    display = Y2 - phi_bivariate_display(cs)
    if abs(display - m) > DISPLAY_TOLERANCE * max(abs(Y2), 1e-300):
        logging.warning(f'{name}: evaluated min MSE {m!r} differs from the phi_p display {display!r}')

    return AnalyticResult(
        name,
        bias=diff_cum_dual_bias(dc, p, tau, c3, d1, d2),
        mse=m,
        min_mse=m,
        optimum_constants={'d1': d1, 'd2': d2, 'tau': tau, 'c3': c3, 'beta': beta},
        coefficients=cs,
    )


def yp_analytics(dc: DesignConstants, p: PopulationParams, name: str) -> AnalyticResult:
    """diff_cum_dual_analytics for a named diff_cum_dual member."""
    spec = yp_member_spec(name, p)
    logging.debug(f'{name}: c1={spec.c1:.6g} c2={spec.c2:.6g} c3={spec.c3} tau{tau_index_of(name)}={spec.tau:.6g}')
    return diff_cum_dual_analytics(dc, p, spec.tau, spec.c3, spec.beta, name=name)


def pre(var_base: float, mse_min: float) -> float:
    """
    Percent relative efficiency 100 V(ȳ)/MSE_min(T).
    @throws NonPositiveMSEError
    """
    if not mse_min > 0:
        raise NonPositiveMSEError(f'PRE needs a positive MSE, got {mse_min}')
    return var_base / mse_min * 100


def analyze_estimators(p: PopulationParams, wider_member: int = 3) -> dict[str, AnalyticResult]:
    """
    Analytic results for the whole estimator line-up, in table order.
    A family whose formulas hit a singularity gets a failed result instead of raising.
    @throws NumericalSingularityError only when the design constants themselves cannot be derived
    """
    dc = derive_constants(p)

    builders = {
        'mean': lambda: mean_analytics(dc, p),
        'dual_ratio': lambda: dual_ratio_analytics(dc, p),
        'ratio_cum_dual': lambda: ratio_cum_dual_analytics(dc, p),
        'wider': lambda: wider_class_analytics(dc, p, member=wider_member),
        'modified_difference': lambda: modified_difference_analytics(dc, p),
    }
    for name in YP_MEMBERS:
        builders[name] = lambda name=name: yp_analytics(dc, p, name)

    results: dict[str, AnalyticResult] = {}
    for name, build in builders.items():
        try:
            results[name] = build()
        except NumericalSingularityError as e:
            logging.warning(f'{name}: {e}')
            results[name] = AnalyticResult.failed(name, e)

    return results


def optimum_specs(p: PopulationParams, results: Optional[dict[str, AnalyticResult]] = None, wider_member: int = 3) -> list[EstimatorSpec]:
    """
    EstimatorSpecs with their constants fixed at the analytic optima, in table order.
    Estimators without a valid optimum are left out.
    """
    if results is None:
        results = analyze_estimators(p, wider_member=wider_member)
    dc = derive_constants(p)
    mu = p.mean_x

    specs = []
    for name, r in results.items():
        if not r.ok:
            logging.warning(f'{name} left out, no analytic optimum: {r.status}')
            continue

        c = r.optimum_constants
        match name:
            case 'mean':
                spec = EstimatorSpec(Family.MEAN, mu_x=mu)
            case 'dual_ratio':
                spec = EstimatorSpec(Family.DUAL_RATIO, mu_x=mu)
            case 'ratio_cum_dual':
                spec = EstimatorSpec(Family.RATIO_CUM_DUAL, mu_x=mu, alpha=c['alpha'])
            case 'wider':
                spec = EstimatorSpec(Family.WIDER, mu_x=mu, member=int(c['member']), epsilon=c['epsilon'], name='wider')
            case 'modified_difference':
                spec = EstimatorSpec(Family.MODIFIED_DIFFERENCE, mu_x=mu, J=c['J'], lam=dc.lam)
            case _:
                spec = yp_member_spec(name, p, d1=c['d1'], d2=c['d2'])
        specs.append(spec)

    return specs
