"""
Coefficient sets of the quadratic MSE forms.

A: ratio-cum-dual without measurement error, values normalised by Ȳ^2.
B: ratio-cum-dual with measurement error.
C: modified difference class.
D: difference-cum-dual-to-ratio class, two free constants (d1, d2).

Every set is the expectation, to first order of approximation, of the cross products of the
two components the estimator blends. B5 and C2 follow from those expectations.
"""
from dataclasses import dataclass, field
from enum import StrEnum
import math
from typing import Any, Optional

from ..design import DesignConstants, PopulationParams
from ..errors import FlatObjectiveError, SingularNormalEquationsError, SingularTauError

# relative cutoff below which a denominator counts as zero
FLAT_TOLERANCE = 1e-12


class Kind(StrEnum):
    A = 'A'
    B = 'B'
    C = 'C'
    D = 'D'


@dataclass(frozen=True)
class CoefficientSet:
    kind: Kind
    values: tuple[float, float, float, float, float]
    context: dict[str, float] = field(default_factory=dict)
    # D only: values less Ȳ^2, computed from the design constants without the subtraction
    centered: Optional[tuple[float, float, float, float, float]] = field(default=None, compare=False)

    def __getitem__(self, i: int) -> float:
        """1-based access, v[1]..v[5]."""
        if not 1 <= i <= 5:
            raise IndexError(f'coefficient index must be 1..5, got {i}')
        return self.values[i - 1]

    def to_dict(self) -> dict[str, Any]:
        return {
            'kind': str(self.kind),
            'values': list(self.values),
            'context': dict(self.context),
        }


def coeffs(kind: Kind | str, dc: DesignConstants, p: PopulationParams, context: Optional[dict[str, float]] = None) -> CoefficientSet:
    """
    @param context: {'lambda'} for C (defaults to dc.lam), {'tau', 'c3', 'beta'} for D
    @throws SingularTauError when the D context carries a non-finite tau
    """
    kind = Kind(kind)
    context = dict(context or {})
    Y = p.mean_y
    Y2 = Y ** 2
    g, n1, R = dc.gamma, dc.n1, dc.R
    r0, r1, r01 = dc.r0, dc.r1, dc.r01

    if kind == Kind.A:
        cy, cx, rho = dc.cy, dc.cx, p.rho
        cyx = rho * cy * cx
        values = (
            1 + g * (cy ** 2 + 3 * cx ** 2 - 4 * cyx),
            1 + g * (cy ** 2 + n1 ** 2 * cx ** 2 - 4 * n1 * cyx),
            1 + g * (cx ** 2 - cyx),
            1 - n1 * g * cyx,
            1 + g * (cy ** 2 + cx ** 2 * (1 + n1) - 2 * cyx * (1 + n1)),
        )

    elif kind == Kind.B:
        values = (
            Y2 + r0 + 3 * R ** 2 * r1 - 4 * R * r01,
            Y2 + r0 + n1 ** 2 * R ** 2 * r1 - 4 * n1 * R * r01,
            Y2 + R ** 2 * r1 - R * r01,
            Y2 - n1 * R * r01,
            Y2 + r0 + (1 + n1) * R ** 2 * r1 - 2 * (1 + n1) * R * r01,
        )

    elif kind == Kind.C:
        lam = context.setdefault('lambda', dc.lam)
        values = (
            lam ** 2 * (Y2 + r0 + n1 ** 2 * R ** 2 * r1 - 4 * n1 * R * r01),
            Y2 + r0,
            lam * (Y2 - n1 * R * r01),
            Y2,
            lam * (Y2 + r0 - 2 * n1 * R * r01),
        )

    else:
        missing = [k for k in ('tau', 'c3', 'beta') if k not in context]
        if missing:
            raise KeyError(f'D coefficients need context {missing}')
        tau, c3, beta = context['tau'], context['c3'], context['beta']
        if not math.isfinite(tau):
            raise SingularTauError(int(context.get('tau_index', 0)), 'tau is not finite')

        half = c3 * (c3 - 1) / 2
        t = tau * n1
        centered = (
            r0 + beta ** 2 * n1 ** 2 * r1 + 2 * beta * n1 * r01,
            r0 + c3 ** 2 * t ** 2 * r1 * Y2 - 4 * c3 * t * r01 * Y + c3 * (c3 - 1) * t ** 2 * r1 * Y2,
            0.0,
            Y * (-c3 * t * r01 + half * t ** 2 * r1 * Y),
            r0 - 2 * c3 * t * Y * r01 + half * t ** 2 * r1 * Y2 + beta * n1 * r01 - c3 * beta * tau * n1 ** 2 * r1 * Y,
        )
        values = tuple(Y2 + v for v in centered)
        return CoefficientSet(kind=kind, values=values, context=context, centered=centered)

    return CoefficientSet(kind=kind, values=values, context=context)


def mse_quadratic(cs: CoefficientSet, ybar_sq: float, w: float) -> float:
    """
    Ȳ^2 + w^2 v1 + (1-w)^2 v2 - 2w v3 - 2(1-w) v4 + 2w(1-w) v5 for kinds B and C.
    Kind A holds normalised values, so the bracket 1 + ... is scaled by Ȳ^2 as a whole.
    """
    if cs.kind == Kind.D:
        raise ValueError('D coefficients have two free constants, use mse_bivariate')

    v1, v2, v3, v4, v5 = cs.values
    q = w ** 2 * v1 + (1 - w) ** 2 * v2 - 2 * w * v3 - 2 * (1 - w) * v4 + 2 * w * (1 - w) * v5
    if cs.kind == Kind.A:
        return ybar_sq * (1 + q)
    return ybar_sq + q


def mse_bivariate(cs: CoefficientSet, ybar_sq: float, d1: float, d2: float) -> float:
    """
    Ȳ^2 + d1^2 D1 + d2^2 D2 - 2 d1 D3 - 2 d2 D4 + 2 d1 d2 D5.
    With centered coefficients (Dk less Ȳ^2, D3 = Ȳ^2) this is evaluated as
    Ȳ^2 (d1 + d2 - 1)^2 + d1^2 D1' + d2^2 D2' - 2 d2 D4' + 2 d1 d2 D5',
    which keeps full precision at optimum constants far from 1.
    """
    if cs.centered is not None:
        c1, c2, _, c4, c5 = cs.centered
        return ybar_sq * (d1 + d2 - 1) ** 2 + d1 ** 2 * c1 + d2 ** 2 * c2 - 2 * d2 * c4 + 2 * d1 * d2 * c5

    D1, D2, D3, D4, D5 = cs.values
    return ybar_sq + d1 ** 2 * D1 + d2 ** 2 * D2 - 2 * d1 * D3 - 2 * d2 * D4 + 2 * d1 * d2 * D5


def optimum_bivariate(cs: CoefficientSet) -> tuple[float, float]:
    """
    Solve the normal equations of the D form, in centered coefficients when the set has them.
    @returns (d1, d2)
    @throws SingularNormalEquationsError when D1 D2 = D5^2
    """
    if cs.centered is not None:
        Y2 = cs.values[2]
        a, b, _, e, c = cs.centered
        # D1 D2 - D5^2, D2 D3 - D4 D5 and D1 D4 - D3 D5 with the Ȳ^4 terms cancelled
        delta = Y2 * (a + b - 2 * c) + a * b - c ** 2
        scale = max(Y2 * (abs(a) + abs(b) + 2 * abs(c)), abs(a * b), c ** 2)
        num1 = Y2 * (b - e - c) - e * c
        num2 = Y2 * (a + e - c) + a * e
    else:
        D1, D2, D3, D4, D5 = cs.values
        delta = D1 * D2 - D5 ** 2
        scale = max(abs(D1 * D2), D5 ** 2)
        num1 = D2 * D3 - D4 * D5
        num2 = D1 * D4 - D3 * D5

    if abs(delta) <= FLAT_TOLERANCE * scale:
        raise SingularNormalEquationsError(f'D1 D2 - D5^2 = {delta:g}')
    return num1 / delta, num2 / delta


def phi_scalar_display(cs: CoefficientSet) -> float:
    """(v2 - 2 v4) - (v2 + v3 - v4 - v5)^2/(v1 + v2 - 2 v5), so that min MSE = Ȳ^2 + phi."""
    v1, v2, v3, v4, v5 = cs.values
    return (v2 - 2 * v4) - (v2 + v3 - v4 - v5) ** 2 / (v1 + v2 - 2 * v5)


def phi_bivariate_display(cs: CoefficientSet) -> float:
    """
    phi of the D form written out in the coefficients, so that min MSE = Ȳ^2 - phi.
    The expanded display carries a factor (D1 D2 - D5^2) in both numerator and denominator;
    it is cancelled here, the expanded numerator loses too many digits.
    """
    D1, D2, D3, D4, D5 = cs.values
    num = D2 * D3 ** 2 - 2 * D3 * D4 * D5 + D1 * D4 ** 2
    return num / (D1 * D2 - D5 ** 2)
