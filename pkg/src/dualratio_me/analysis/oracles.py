"""
Numeric minimizers used to verify the closed-form optima.

A golden-section (scalar) or Nelder-Mead (d1, d2) search locates the minimum, then a
Newton polish with central finite differences brings the constant to full precision.
Both only ever evaluate the MSE function.
"""
from dataclasses import asdict, dataclass
from collections.abc import Callable
import logging
from typing import Any

import numpy as np
from scipy import optimize

from ..design import PopulationParams, derive_constants
from ..errors import NumericalSingularityError
from ..estimators import YP_MEMBERS, yp_member_spec
from .coefficients import Kind, coeffs, mse_bivariate, mse_quadratic
from .mse import (
    diff_cum_dual_analytics,
    modified_difference_analytics,
    ratio_cum_dual_analytics,
    wider_class_analytics,
    wider_mse,
)

CONSTANT_TOLERANCE = 1e-8
MSE_TOLERANCE = 1e-10


def _rel_diff(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    return 0.0 if scale == 0 else abs(a - b) / scale


def minimize_scalar_numeric(f: Callable[[float], float], guess: float = 0.0, width: float = 1.0, polish_steps: int = 3) -> float:
    """Golden-section search bracketed around `guess`, then central-difference Newton steps."""
    res = optimize.minimize_scalar(f, bracket=(guess - width, guess + width), method='golden', tol=1e-10)
    w = float(res.x)

    for _ in range(polish_steps):
        h = max(1.0, abs(w))
        fp, f0, fm = f(w + h), f(w), f(w - h)
        curvature = (fp - 2 * f0 + fm) / h ** 2
        if curvature <= 0:
            break
        w -= (fp - fm) / (2 * h) / curvature
    return w


def minimize_bivariate_numeric(f: Callable[[float, float], float], guess: tuple[float, float] = (0.0, 1.0), polish_steps: int = 3) -> tuple[float, float]:
    """Nelder-Mead from `guess`, then Newton steps with a finite-difference gradient and Hessian."""
    res = optimize.minimize(lambda v: f(v[0], v[1]), np.asarray(guess, dtype=float), method='Nelder-Mead',
                            options={'xatol': 1e-10, 'fatol': 1e-14, 'maxiter': 20000})
    x = np.asarray(res.x, dtype=float)

    for _ in range(polish_steps):
        h = 1.0
        e = np.eye(2) * h
        grad = np.array([(f(*(x + e[i])) - f(*(x - e[i]))) / (2 * h) for i in range(2)])
        hess = np.empty((2, 2))
        for i in range(2):
            for j in range(2):
                hess[i, j] = (f(*(x + e[i] + e[j])) - f(*(x + e[i] - e[j])) - f(*(x - e[i] + e[j])) + f(*(x - e[i] - e[j]))) / (4 * h * h)
        try:
            x = x - np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            break
    return float(x[0]), float(x[1])


@dataclass
class OptimumCheck:
    estimator: str
    constant: str
    closed_form: float
    numeric: float
    constant_rel_diff: float
    mse_closed_form: float
    mse_numeric: float
    mse_rel_diff: float

    @property
    def agrees(self) -> bool:
        return self.constant_rel_diff <= CONSTANT_TOLERANCE and self.mse_rel_diff <= MSE_TOLERANCE

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d['agrees'] = self.agrees
        return d


def _check(estimator: str, constant: str, closed: float, numeric: float, mse_closed: float, mse_numeric: float) -> OptimumCheck:
    return OptimumCheck(
        estimator=estimator,
        constant=constant,
        closed_form=closed,
        numeric=numeric,
        constant_rel_diff=_rel_diff(closed, numeric),
        mse_closed_form=mse_closed,
        mse_numeric=mse_numeric,
        mse_rel_diff=_rel_diff(mse_closed, mse_numeric),
    )


def verify_optima(p: PopulationParams) -> list[OptimumCheck]:
    """
    Compare every closed-form optimum constant and min MSE with the numeric minimizer.
    Families that are singular for these params are skipped with a warning.
    """
    dc = derive_constants(p)
    Y2 = p.mean_y ** 2
    checks: list[OptimumCheck] = []

    def run(name: str, fn: Callable[[], list[OptimumCheck]]):
        try:
            checks.extend(fn())
        except NumericalSingularityError as e:
            logging.warning(f'{name}: not verified, {e}')

    def ratio_cum_dual(with_me: bool) -> list[OptimumCheck]:
        r = ratio_cum_dual_analytics(dc, p, with_me=with_me)
        cs = r.coefficients
        assert cs is not None
        alpha = r.optimum_constants['alpha']
        w = minimize_scalar_numeric(lambda a: mse_quadratic(cs, Y2, a))
        label = 'ratio_cum_dual' if with_me else 'ratio_cum_dual (no error)'
        return [_check(label, 'alpha', alpha, w, r.min_mse, mse_quadratic(cs, Y2, w))]

    def modified_difference() -> list[OptimumCheck]:
        r = modified_difference_analytics(dc, p)
        cs = r.coefficients
        assert cs is not None
        J = r.optimum_constants['J']
        w = minimize_scalar_numeric(lambda j: mse_quadratic(cs, Y2, j))
        return [_check('modified_difference', 'J', J, w, r.min_mse, mse_quadratic(cs, Y2, w))]

    def wider() -> list[OptimumCheck]:
        r = wider_class_analytics(dc, p)
        g1 = r.optimum_constants['G1']
        w = minimize_scalar_numeric(lambda g: wider_mse(dc, p, g))
        return [_check('wider', 'G1', g1, w, r.min_mse, wider_mse(dc, p, w))]

    def yp(name: str) -> list[OptimumCheck]:
        spec = yp_member_spec(name, p)
        r = diff_cum_dual_analytics(dc, p, spec.tau, spec.c3, spec.beta, name=name)
        cs = coeffs(Kind.D, dc, p, {'tau': spec.tau, 'c3': spec.c3, 'beta': spec.beta})
        d1, d2 = r.optimum_constants['d1'], r.optimum_constants['d2']
        n1, n2 = minimize_bivariate_numeric(lambda a, b: mse_bivariate(cs, Y2, a, b))
        m = mse_bivariate(cs, Y2, n1, n2)
        return [
            _check(name, 'd1', d1, n1, r.min_mse, m),
            _check(name, 'd2', d2, n2, r.min_mse, m),
        ]

    run('ratio_cum_dual', lambda: ratio_cum_dual(True))
    run('ratio_cum_dual (no error)', lambda: ratio_cum_dual(False))
    run('modified_difference', modified_difference)
    run('wider', wider)
    for name in YP_MEMBERS:
        run(name, lambda name=name: yp(name))

    for c in checks:
        if not c.agrees:
            logging.warning(f'{c.estimator} {c.constant}: closed form {c.closed_form!r} vs numeric {c.numeric!r}')

    return checks
