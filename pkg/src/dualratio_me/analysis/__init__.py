from .coefficients import CoefficientSet, Kind, coeffs, mse_bivariate, mse_quadratic, optimum_bivariate, optimum_scalar
from .mse import (
    AnalyticResult,
    analyze_estimators,
    diff_cum_dual_analytics,
    modified_difference_analytics,
    mse_dual_ratio,
    pre,
    ratio_cum_dual_analytics,
    var_mean,
    wider_class_analytics,
)
from .conditions import EfficiencyCondition, efficiency_conditions
