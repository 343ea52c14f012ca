"""
Synthetic finite populations: X ~ Normal(x_mean, x_sd), Y = X + Normal(0, y_noise_sd).

Normal(a, b) always means mean a and standard deviation b.
"""
from dataclasses import asdict, dataclass, field, fields
import json
import logging
import math
from numbers import Integral, Real
from pathlib import Path
from typing import Any, Optional

import numpy as np
import pandas as pd

from ..design import PopulationParams
from ..errors import DegeneratePopulationError, InvalidParameterError

U64_MAX = 2 ** 64 - 1


@dataclass(frozen=True)
class SyntheticPopulationSpec:
    N: int
    x_mean: float
    x_sd: float
    y_noise_sd: float
    err_y_mean: float
    err_y_sd: float
    err_x_mean: float
    err_x_sd: float
    seed: int
    # design sample size recorded in the realized params
    n: int = field(default=500)

    def __post_init__(self):
        for name in ('N', 'n', 'seed'):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, Integral):
                raise InvalidParameterError(name, f'expected an integer, got {value!r}')
        for name in ('x_mean', 'x_sd', 'y_noise_sd', 'err_y_mean', 'err_y_sd', 'err_x_mean', 'err_x_sd'):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, Real) or not math.isfinite(value):
                raise InvalidParameterError(name, f'expected a finite real, got {value!r}')
            if name.endswith('_sd') and value < 0:
                raise InvalidParameterError(name, f'standard deviation must be >= 0, got {value}')

        if self.N < 2:
            raise InvalidParameterError('N', f'population needs at least 2 units, got {self.N}')
        if not 0 <= self.seed <= U64_MAX:
            raise InvalidParameterError('seed', 'must be a 64-bit unsigned integer')
        if self.n < 1:
            raise InvalidParameterError('n', f'sample size must be positive, got {self.n}')

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> 'SyntheticPopulationSpec':
        """@throws InvalidParameterError naming the offending field"""
        if not isinstance(data, dict):
            raise InvalidParameterError('spec', 'expected a JSON object')
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise InvalidParameterError(unknown[0], 'unknown field')
        missing = [f.name for f in fields(cls) if f.name != 'n' and f.name not in data]
        if missing:
            raise InvalidParameterError(missing[0], 'missing field')
        return cls(**data)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(eq=False)
class GeneratedPopulation:
    true_x: np.ndarray
    true_y: np.ndarray
    spec: SyntheticPopulationSpec

    @property
    def N(self) -> int:
        return len(self.true_y)

    @property
    def degenerate(self) -> bool:
        """True when a variance is zero and rho is undefined."""
        return bool(np.ptp(self.true_x) == 0 or np.ptp(self.true_y) == 0)

    def moments(self) -> dict[str, Any]:
        """Realized finite population moments, variances with divisor N - 1."""
        rho = None
        if not self.degenerate:
            rho = float(np.clip(np.corrcoef(self.true_x, self.true_y)[0, 1], -1.0, 1.0))

        return {
            'N': self.N,
            'mean_y': float(np.mean(self.true_y)),
            'mean_x': float(np.mean(self.true_x)),
            'var_y': float(np.var(self.true_y, ddof=1)),
            'var_x': float(np.var(self.true_x, ddof=1)),
            'var_ey': self.spec.err_y_sd ** 2,
            'var_ex': self.spec.err_x_sd ** 2,
            'rho': rho,
        }

    def realized_params(self, n: Optional[int] = None) -> PopulationParams:
        """
        PopulationParams of this population for sample size n (default spec.n).
        Error variances are the population spec's err_sd^2.
        @throws DegeneratePopulationError when rho is undefined
        @throws InvalidParameterError when n is not a valid sample size for N
        """
        m = self.moments()
        if m['rho'] is None:
            raise DegeneratePopulationError('population has zero variance in X or Y, rho is undefined')
        return PopulationParams(n=self.spec.n if n is None else n, **m)

    def save(self, csv_path: Path) -> Path:
        """
        Write the two-column CSV and a JSON sidecar (same name, .json).
        @returns sidecar path
        """
        csv_path = Path(csv_path)
        df = pd.DataFrame({'true_x': self.true_x, 'true_y': self.true_y})
        df.to_csv(csv_path, index=False, float_format='%.17g', lineterminator='\n')

        try:
            params = self.realized_params().to_dict()
        except (DegeneratePopulationError, InvalidParameterError) as e:
            logging.warning(f'no realized params for {csv_path.name}: {e}')
            params = None

        sidecar = csv_path.with_suffix('.json')
        with open(sidecar, 'w', newline='\n') as f:
            json.dump({'spec': self.spec.to_dict(), 'moments': self.moments(), 'realized_params': params}, f, indent=2)
            f.write('\n')
        return sidecar

    @classmethod
    def load(cls, csv_path: Path) -> 'GeneratedPopulation':
        csv_path = Path(csv_path)
        df = pd.read_csv(csv_path, dtype=float, float_precision='round_trip')
        with open(csv_path.with_suffix('.json'), 'r') as f:
            sidecar = json.load(f)
        spec = SyntheticPopulationSpec.from_dict(sidecar['spec'])
        return cls(true_x=df['true_x'].to_numpy(), true_y=df['true_y'].to_numpy(), spec=spec)


def generate_population(spec: SyntheticPopulationSpec) -> GeneratedPopulation:
    """Deterministic given spec.seed."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(spec.seed)))
    true_x = rng.normal(spec.x_mean, spec.x_sd, size=spec.N)
    true_y = true_x + rng.normal(0.0, spec.y_noise_sd, size=spec.N)

    pop = GeneratedPopulation(true_x=true_x, true_y=true_y, spec=spec)
    if pop.degenerate:
        logging.warning(f'generated population is degenerate (x_sd={spec.x_sd}, y_noise_sd={spec.y_noise_sd})')
    return pop
