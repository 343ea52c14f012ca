"""
Efficiency predicates: when does an adapted estimator beat the mean per unit, the dual to
ratio estimator or the ratio-cum-dual estimator. All comparisons use the measurement error
MSEs, never the error free A set.

Each predicate's left-hand side is evaluated from its own display, built from the design
constants and the coefficient sets, and is reported next to the plain difference of the two
min MSEs so that any sign disagreement between the two shows up.
"""
from dataclasses import asdict, dataclass
import logging
from typing import Any, Literal, Optional

from ..design import DesignConstants, PopulationParams
from .coefficients import Kind, coeffs, mse_quadratic, phi_bivariate_display, phi_scalar_display
from .mse import AnalyticResult

BOUNDARY_TOLERANCE = 1e-12

# (label, candidate, baseline, relation, left display, right display)
# '<= 0' predicates read candidate - baseline, '>= 0' predicates read baseline - candidate
CONDITIONS: tuple[tuple[str, str, str, Literal['<= 0', '>= 0'], str, str], ...] = (
    ('wider<mean', 'wider', 'mean', '<= 0', 'wider', 'mean'),
    ('modified_difference<mean', 'modified_difference', 'mean', '>= 0', 'mean', 'modified_difference'),
    ('wider<dual_ratio', 'wider', 'dual_ratio', '>= 0', 'dual_ratio', 'wider'),
    ('modified_difference<dual_ratio', 'modified_difference', 'dual_ratio', '>= 0', 'dual_ratio', 'modified_difference'),
    ('yp<mean', 'yp', 'mean', '<= 0', 'yp', 'mean'),
    ('yp<dual_ratio', 'yp', 'dual_ratio', '>= 0', 'dual_ratio', 'yp'),
    ('yp<ratio_cum_dual', 'yp', 'ratio_cum_dual', '>= 0', 'ratio_cum_dual', 'yp'),
)


@dataclass
class EfficiencyCondition:
    label: str
    candidate: str
    baseline: str
    relation: str
    # left-hand side of the display, None when either MSE is unavailable
    lhs: Optional[float]
    holds: bool
    boundary: bool
    mse_candidate: Optional[float]
    mse_baseline: Optional[float]
    # the same difference taken from the two min MSEs, oriented like lhs
    mse_difference: Optional[float] = None
    # False when lhs and mse_difference disagree on the predicate
    consistent: bool = True
    status: str = 'ok'

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def mean_display(dc: DesignConstants, p: PopulationParams) -> float:
    """gamma Ȳ^2 (C_Y^2 + S_dY^2/Ȳ^2)"""
    Y2 = p.mean_y ** 2
    return dc.gamma * Y2 * (dc.cy ** 2 + p.var_ey / Y2)


def dual_ratio_display(dc: DesignConstants, p: PopulationParams) -> float:
    """gamma Ȳ^2 [C_Y^2 + n1^2 C_X^2 - 2 n1 rho C_Y C_X] + gamma [S_dY^2 + n1^2 R^2 S_dX^2]"""
    g, n1, cy, cx = dc.gamma, dc.n1, dc.cy, dc.cx
    return (g * p.mean_y ** 2 * (cy ** 2 + n1 ** 2 * cx ** 2 - 2 * n1 * p.rho * cy * cx)
            + g * (p.var_ey + n1 ** 2 * dc.R ** 2 * p.var_ex))


def wider_display(dc: DesignConstants) -> float:
    """r0 - r01^2/r1"""
    return dc.r0 - dc.r01 ** 2 / dc.r1


def _display(name: str, dc: DesignConstants, p: PopulationParams, r: AnalyticResult) -> float:
    Y2 = p.mean_y ** 2
    c = r.optimum_constants

    match name:
        case 'mean':
            return mean_display(dc, p)
        case 'dual_ratio':
            return dual_ratio_display(dc, p)
        case 'wider':
            return wider_display(dc)
        case 'modified_difference':
            cs = r.coefficients or coeffs(Kind.C, dc, p, {'lambda': c.get('lambda', dc.lam)})
            return Y2 + phi_scalar_display(cs)
        case 'ratio_cum_dual':
            cs = r.coefficients or coeffs(Kind.B, dc, p)
            return mse_quadratic(cs, Y2, c['alpha'])
    # diff_cum_dual members; the published predicates write both Ȳ^2 - phi_p and Ȳ^2 + phi_p,
    # the min MSE display Ȳ^2 - phi_p is used throughout
    cs = r.coefficients or coeffs(Kind.D, dc, p, {'tau': c['tau'], 'c3': c['c3'], 'beta': c['beta']})
    return Y2 - phi_bivariate_display(cs)


def _oriented(relation: str, left: float, right: float) -> tuple[float, bool, bool]:
    """(value, strict, boundary) of left - right under the predicate's relation."""
    value = left - right
    boundary = abs(value) <= BOUNDARY_TOLERANCE * max(abs(left), abs(right))
    strict = value < 0 if relation == '<= 0' else value > 0
    return value, strict and not boundary, boundary


def efficiency_conditions(dc: DesignConstants, p: PopulationParams, results: dict[str, AnalyticResult], yp_member: str = 'yp1') -> list[EfficiencyCondition]:
    """
    Evaluate the seven strict efficiency predicates from their displays.
    A left-hand side within 1e-12 relative of zero is flagged as boundary and does not hold.
    @param yp_member: the yp member standing in for the diff_cum_dual class
    """
    conditions = []
    for label, candidate, baseline, relation, left_name, right_name in CONDITIONS:
        candidate_name = yp_member if candidate == 'yp' else candidate
        cand = results.get(candidate_name)
        base = results.get(baseline)

        if cand is None or base is None or not cand.ok or not base.ok:
            missing = [r.status if r else f'{n} not computed' for r, n in ((cand, candidate_name), (base, baseline)) if r is None or not r.ok]
            conditions.append(EfficiencyCondition(
                label=label,
                candidate=candidate_name,
                baseline=baseline,
                relation=relation,
                lhs=None,
                holds=False,
                boundary=False,
                mse_candidate=cand.min_mse if cand else None,
                mse_baseline=base.min_mse if base else None,
                status='; '.join(missing),
            ))
            continue

        a = cand.min_mse
        b = base.min_mse
        assert a is not None and b is not None

        by_name = {candidate: cand, baseline: base}
        left = _display(candidate_name if left_name == 'yp' else left_name, dc, p, by_name[left_name])
        right = _display(candidate_name if right_name == 'yp' else right_name, dc, p, by_name[right_name])
        lhs, holds, boundary = _oriented(relation, left, right)

        if relation == '<= 0':
            mse_difference, mse_holds, _ = _oriented(relation, a, b)
        else:
            mse_difference, mse_holds, _ = _oriented(relation, b, a)

        consistent = holds == mse_holds
        if not consistent:
            logging.warning(f'{label}: display gives {lhs!r}, the min MSEs give {mse_difference!r}')

        conditions.append(EfficiencyCondition(
            label=label,
            candidate=candidate_name,
            baseline=baseline,
            relation=relation,
            lhs=lhs,
            holds=holds,
            boundary=boundary,
            mse_candidate=a,
            mse_baseline=b,
            mse_difference=mse_difference,
            consistent=consistent,
        ))

    return conditions
