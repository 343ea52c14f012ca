"""
Monte Carlo validation of the analytic MSEs.

Each replication draws a fresh SRSWOR sample and fresh measurement errors from its own
random stream, seeded from (master_seed, replication index). Per-replication sample means
land in preallocated arrays, so results do not depend on the worker count or on the order
in which replications finish.
"""
from collections.abc import Iterable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
import itertools
import logging
import math
from numbers import Integral
from typing import Any, Optional

import numpy as np
import pandas as pd

from ..analysis.mse import AnalyticResult, analyze_estimators, optimum_specs
from ..design import PopulationParams
from ..errors import InvalidParameterError, MonteCarloFailureError
from ..estimators import EstimatorSpec, evaluate_means, expansion_deviation, sample_means
from .population import U64_MAX, GeneratedPopulation
from .sampling import draw_srswor, observe_with_error

DEFAULT_ESTIMATORS = ('mean', 'dual_ratio', 'ratio_cum_dual', 'wider', 'modified_difference',
                      'yp1', 'yp2', 'yp3', 'yp4', 'yp5', 'yp6', 'yp7')

# replications per task handed to the thread pool
BLOCK_SIZE = 500

# relative distance from the first-order MSE beyond which an estimator is reported out of band
FIRST_ORDER_BAND = 0.10

COMPARISON_COLUMNS = ['estimator', 'analytic_mse', 'empirical_mse', 'first_order_ratio', 'within_band', 'monte_carlo_se',
                      'z', 'analytic_bias', 'empirical_bias', 'flagged']


def check_unique_names(names: list[str]):
    """@throws InvalidParameterError naming the first repeated estimator"""
    seen = set()
    for name in names:
        if name in seen:
            raise InvalidParameterError('estimators', f'estimator {name!r} is listed more than once')
        seen.add(name)


@dataclass(frozen=True)
class MonteCarloConfig:
    replications: int
    n: int
    master_seed: int
    # names resolve to the estimator at its analytic optimum; dicts are explicit EstimatorSpec JSON
    estimators: tuple[str | dict, ...] = DEFAULT_ESTIMATORS
    error_means_zeroed: bool = True
    workers: int = 1
    max_flagged_fraction: float = 0.001

    def __post_init__(self):
        object.__setattr__(self, 'estimators', tuple(self.estimators))
        for name in ('replications', 'n', 'master_seed', 'workers'):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, Integral):
                raise InvalidParameterError(name, f'expected an integer, got {value!r}')
        if self.replications < 1:
            raise InvalidParameterError('replications', f'need at least 1 replication, got {self.replications}')
        if self.n < 2:
            raise InvalidParameterError('n', f'sample size must be at least 2, got {self.n}')
        if not 0 <= self.master_seed <= U64_MAX:
            raise InvalidParameterError('master_seed', 'must be a 64-bit unsigned integer')
        if self.workers < 1:
            raise InvalidParameterError('workers', f'must be >= 1, got {self.workers}')
        if not self.estimators:
            raise InvalidParameterError('estimators', 'no estimators configured')
        names = [e if isinstance(e, str) else e.get('name') for e in self.estimators if isinstance(e, (str, dict))]
        check_unique_names([name for name in names if name])
        if not isinstance(self.error_means_zeroed, bool):
            raise InvalidParameterError('error_means_zeroed', 'expected true or false')

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> 'MonteCarloConfig':
        """@throws InvalidParameterError naming the offending field"""
        if not isinstance(data, dict):
            raise InvalidParameterError('config', 'expected a JSON object')
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise InvalidParameterError(unknown[0], 'unknown field')
        for name in ('replications', 'n', 'master_seed'):
            if name not in data:
                raise InvalidParameterError(name, 'missing field')
        return cls(**data)

    def to_dict(self) -> dict[str, Any]:
        """Everything that determines the results; workers is left out, it never changes them."""
        return {
            'replications': self.replications,
            'n': self.n,
            'master_seed': self.master_seed,
            'estimators': list(self.estimators),
            'error_means_zeroed': self.error_means_zeroed,
            'max_flagged_fraction': self.max_flagged_fraction,
        }


@dataclass
class EmpiricalStats:
    estimator: str
    empirical_bias: Optional[float]
    empirical_mse: Optional[float]
    # standard error of empirical_mse, None for fewer than 2 replications
    monte_carlo_se: Optional[float]
    replications_used: int
    flagged: int
    expansion_violations: int


@dataclass
class MonteCarloResult:
    stats: dict[str, EmpiricalStats]
    true_mean: float
    config: MonteCarloConfig
    population_spec: dict[str, Any]
    specs: list[EstimatorSpec] = field(default_factory=list)

    @property
    def master_seed(self) -> int:
        return self.config.master_seed

    def flagged_fraction(self) -> float:
        if not self.stats:
            return 0.0
        return max(s.flagged for s in self.stats.values()) / self.config.replications

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([vars(s) for s in self.stats.values()])

    def to_dict(self) -> dict[str, Any]:
        return {
            'true_mean': self.true_mean,
            'master_seed': self.master_seed,
            'config': self.config.to_dict(),
            'population_spec': self.population_spec,
            'estimators': [s.to_dict() for s in self.specs],
            'stats': [vars(s) for s in self.stats.values()],
        }


def sampling_params(pop: GeneratedPopulation, n: int) -> PopulationParams:
    """
    Realized params with the error variances the simulation actually induces.
    Fresh errors give the observed error mean variance sigma^2/n, which the gamma
    convention reproduces with a finite population error variance sigma^2 N/(N - n).
    """
    p = pop.realized_params(n)
    scale = p.N / (p.N - p.n)
    return replace(p, var_ey=p.var_ey * scale, var_ex=p.var_ex * scale)


def replication_rng(master_seed: int, rep: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(master_seed, spawn_key=(rep,))))


def resolve_estimators(cfg: MonteCarloConfig, params: PopulationParams, analytic: Optional[dict[str, AnalyticResult]] = None) -> list[EstimatorSpec]:
    """
    EstimatorSpecs for the config's estimator entries, constants fixed from `params`.
    @throws InvalidParameterError for an unknown name or an estimator without a valid optimum
    """
    if analytic is None:
        analytic = analyze_estimators(params)
    optimal = {s.name: s for s in optimum_specs(params, analytic)}

    specs = []
    for entry in cfg.estimators:
        if isinstance(entry, dict):
            specs.append(EstimatorSpec.from_dict(entry, params=params))
        elif entry in optimal:
            specs.append(optimal[entry])
        elif entry in analytic:
            raise InvalidParameterError('estimators', f'{entry} has no analytic optimum: {analytic[entry].status}')
        else:
            raise InvalidParameterError('estimators', f'unknown estimator {entry!r}')
    return specs


def _draw_block(pop: GeneratedPopulation, cfg: MonteCarloConfig, reps: range, xbars: np.ndarray, ybars: np.ndarray):
    for rep in reps:
        rng = replication_rng(cfg.master_seed, rep)
        idx = draw_srswor(pop, cfg.n, rng)
        sample = observe_with_error(pop, idx, pop.spec, rng, cfg.error_means_zeroed)
        xbars[rep], ybars[rep] = sample_means(sample)


def draw_sample_means(pop: GeneratedPopulation, cfg: MonteCarloConfig) -> tuple[np.ndarray, np.ndarray]:
    """Observed (x̄, ȳ) of every replication, indexed by replication."""
    R = cfg.replications
    xbars = np.empty(R)
    ybars = np.empty(R)
    blocks = [range(start, min(start + BLOCK_SIZE, R)) for start in range(0, R, BLOCK_SIZE)]

    if cfg.workers == 1 or len(blocks) == 1:
        for block in blocks:
            _draw_block(pop, cfg, block, xbars, ybars)
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as executor:
            futures = [executor.submit(_draw_block, pop, cfg, block, xbars, ybars) for block in blocks]
            for i, future in enumerate(futures):
                future.result()
                logging.debug(f'replication block {i + 1}/{len(blocks)} done')

    return xbars, ybars


def _stats(spec: EstimatorSpec, values: np.ndarray, xbars: np.ndarray, true_mean: float, N: int, n: int) -> EmpiricalStats:
    ok = np.isfinite(values)
    flagged = int(np.count_nonzero(~ok))
    violations = int(np.count_nonzero(expansion_deviation(spec, xbars, N, n) >= 1))
    used = values[ok]

    if len(used) == 0:
        return EmpiricalStats(spec.name, None, None, None, 0, flagged, violations)

    dev = used - true_mean
    sq = dev ** 2
    se = float(np.std(sq, ddof=1) / math.sqrt(len(sq))) if len(sq) >= 2 else None
    return EmpiricalStats(
        estimator=spec.name,
        empirical_bias=float(np.mean(dev)),
        empirical_mse=float(np.mean(sq)),
        monte_carlo_se=se,
        replications_used=len(used),
        flagged=flagged,
        expansion_violations=violations,
    )


def run_monte_carlo(pop: GeneratedPopulation, cfg: MonteCarloConfig, specs: Optional[list[EstimatorSpec]] = None) -> MonteCarloResult:
    """
    Run cfg.replications replications and summarize each estimator.
    Estimator constants come from `specs` or are resolved once from sampling_params(pop, cfg.n).
    Replications where an estimator is not finite are flagged and left out of its moments.
    @throws MonteCarloFailureError when an estimator flags more than cfg.max_flagged_fraction of replications
    """
    if cfg.n >= pop.N:
        raise InvalidParameterError('n', f'sample size {cfg.n} must be smaller than N={pop.N}')
    if specs is None:
        specs = resolve_estimators(cfg, sampling_params(pop, cfg.n))
    check_unique_names([s.name for s in specs])

    true_mean = float(np.mean(pop.true_y))
    logging.info(f'monte carlo: R={cfg.replications} n={cfg.n} estimators={len(specs)} workers={cfg.workers}')

    xbars, ybars = draw_sample_means(pop, cfg)

    stats = {}
    with np.errstate(divide='ignore', invalid='ignore', over='ignore'):
        for spec in specs:
            values = np.asarray(evaluate_means(spec, xbars, ybars, pop.N, cfg.n), dtype=float)
            s = _stats(spec, values, xbars, true_mean, pop.N, cfg.n)
            if s.flagged:
                logging.warning(f'{spec.name}: {s.flagged} replications flagged')
            if s.expansion_violations:
                logging.debug(f'{spec.name}: {s.expansion_violations} replications outside the expansion region')
            stats[spec.name] = s

    result = MonteCarloResult(
        stats=stats,
        true_mean=true_mean,
        config=cfg,
        population_spec=pop.spec.to_dict(),
        specs=list(specs),
    )

    fraction = result.flagged_fraction()
    if fraction > cfg.max_flagged_fraction:
        raise MonteCarloFailureError(
            f'{fraction:.3%} of replications flagged, limit is {cfg.max_flagged_fraction:.3%}',
            result=result,
        )
    return result


def compare_with_analytic(result: MonteCarloResult, analytic: dict[str, AnalyticResult], band: float = FIRST_ORDER_BAND) -> pd.DataFrame:
    """
    Analytic vs empirical MSE per estimator: the ratio of empirical to first-order MSE, whether
    it lies within 1 +/- band, and the z-score in Monte Carlo standard errors.
    Estimators without an analytic counterpart get empty analytic cells.
    """
    rows = []
    for name, s in result.stats.items():
        a = analytic.get(name)
        analytic_mse = a.min_mse if a is not None and a.ok else None
        analytic_bias = a.bias if a is not None and a.ok else None

        ratio = z = within = None
        if analytic_mse is not None and s.empirical_mse is not None:
            ratio = s.empirical_mse / analytic_mse
            within = abs(ratio - 1) <= band
            if not within:
                logging.warning(f'{name}: empirical MSE is {ratio:.3g} times the first-order value')
            if s.monte_carlo_se:
                z = (s.empirical_mse - analytic_mse) / s.monte_carlo_se

        rows.append({
            'estimator': name,
            'analytic_mse': analytic_mse,
            'empirical_mse': s.empirical_mse,
            'first_order_ratio': ratio,
            'within_band': within,
            'monte_carlo_se': s.monte_carlo_se,
            'z': z,
            'analytic_bias': analytic_bias,
            'empirical_bias': s.empirical_bias,
            'flagged': s.flagged,
        })
    return pd.DataFrame(rows, columns=COMPARISON_COLUMNS)


def ordering_disagreements(result: MonteCarloResult, analytic: dict[str, AnalyticResult], z: float = 3.0,
                           estimators: Optional[Iterable[str]] = None) -> list[tuple[str, str]]:
    """
    Estimator pairs whose analytic MSEs differ by more than z combined standard errors
    but whose empirical MSEs are ordered the other way.
    @param estimators: restrict the pairs to these names, default every estimator of the result
    """
    selected = set(result.stats) if estimators is None else set(estimators)
    names = [
        name for name, s in result.stats.items()
        if name in selected and name in analytic and analytic[name].ok and s.empirical_mse is not None and s.monte_carlo_se
    ]

    disagreements = []
    for a, b in itertools.combinations(names, 2):
        ma, mb = analytic[a].min_mse, analytic[b].min_mse
        sa, sb = result.stats[a], result.stats[b]
        combined = math.sqrt(sa.monte_carlo_se ** 2 + sb.monte_carlo_se ** 2)
        if abs(ma - mb) <= z * combined:
            continue
        if (ma < mb) != (sa.empirical_mse < sb.empirical_mse):
            disagreements.append((a, b))
    return disagreements
