"""
SRSWOR draws and measurement error injection.
"""
import numpy as np

from ..estimators import ObservedSample
from ..errors import InvalidParameterError
from .population import GeneratedPopulation, SyntheticPopulationSpec


def draw_srswor(pop: GeneratedPopulation, n: int, rng: np.random.Generator) -> np.ndarray:
    """
    n distinct unit indices, every n-subset equally likely.
    @throws InvalidParameterError when n > N
    """
    N = pop.N
    if n > N:
        raise InvalidParameterError('n', f'sample size {n} exceeds population size {N}')
    if n < 0:
        raise InvalidParameterError('n', f'sample size must be >= 0, got {n}')
    if n == N:
        return rng.permutation(N)
    return rng.choice(N, size=n, replace=False)


def error_draws(n: int, spec: SyntheticPopulationSpec, rng: np.random.Generator, error_means_zeroed: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """(y errors, x errors), independent of each other. Y errors are drawn first."""
    mean_y = 0.0 if error_means_zeroed else spec.err_y_mean
    mean_x = 0.0 if error_means_zeroed else spec.err_x_mean
    ey = rng.normal(mean_y, spec.err_y_sd, size=n)
    ex = rng.normal(mean_x, spec.err_x_sd, size=n)
    return ey, ex


def observe_with_error(pop: GeneratedPopulation, indices: np.ndarray, spec: SyntheticPopulationSpec, rng: np.random.Generator, error_means_zeroed: bool = True) -> ObservedSample:
    """
    Observed sample y = Y + dY, x = X + dX with fresh normal errors.
    With error_means_zeroed the population spec's error means are replaced by 0.
    """
    ey, ex = error_draws(len(indices), spec, rng, error_means_zeroed)
    return ObservedSample(
        xs=pop.true_x[indices] + ex,
        ys=pop.true_y[indices] + ey,
        N=pop.N,
    )
