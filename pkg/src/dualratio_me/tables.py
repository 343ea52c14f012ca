"""
Result tables and their CSV/JSON writers. All arithmetic shown in a table happens here or
in the library calls it makes, never in the CLI.
"""
from dataclasses import dataclass, field
import json
import math
from pathlib import Path
from typing import Any, Optional

import numpy as np
import pandas as pd

from .analysis.conditions import EfficiencyCondition, efficiency_conditions
from .analysis.mse import ESTIMATOR_ORDER, AnalyticResult, analyze_estimators, pre, var_mean
from .analysis.oracles import verify_optima
from .design import DesignConstants, PopulationParams, derive_constants
from .errors import NonPositiveMSEError
from .presets import REFERENCE_COLUMN, REFERENCE_TABLE, get_population

CSV_FLOAT_FORMAT = '%.6g'

ANALYSIS_COLUMNS = ['estimator', 'mse', 'pre', 'bias', 'constants', 'conditions', 'status']
CONDITION_COLUMNS = ['condition', 'candidate', 'baseline', 'relation', 'lhs', 'holds', 'boundary',
                     'mse_candidate', 'mse_baseline', 'mse_difference', 'consistent', 'status']
REPRODUCE_COLUMNS = ['population', 'reference', 'estimator', 'mse', 'reference_mse', 'mse_rel_diff',
                     'pre', 'reference_pre', 'pre_rel_diff', 'flagged', 'status']


def format_constants(constants: dict[str, float]) -> str:
    return ';'.join(f'{k}={v:.6g}' if isinstance(v, float) else f'{k}={v}' for k, v in constants.items())


def rel_diff(value: Optional[float], reference: float) -> Optional[float]:
    if value is None:
        return None
    return abs(value - reference) / abs(reference)


@dataclass
class Analysis:
    """Analytic results, PREs and efficiency predicates of one PopulationParams."""

    params: PopulationParams
    constants: DesignConstants
    results: dict[str, AnalyticResult]
    conditions: list[EfficiencyCondition]
    pres: dict[str, Optional[float]] = field(default_factory=dict)
    pre_status: dict[str, str] = field(default_factory=dict)

    def table(self) -> pd.DataFrame:
        rows = []
        for name in ESTIMATOR_ORDER:
            r = self.results[name]
            holds = [f'{c.label}={str(c.holds).lower()}' for c in self.conditions if c.candidate == name]
            status = r.status if not r.ok else self.pre_status.get(name, 'ok')
            rows.append({
                'estimator': name,
                'mse': r.min_mse,
                'pre': self.pres.get(name),
                'bias': r.bias,
                'constants': format_constants(r.optimum_constants),
                'conditions': ';'.join(holds),
                'status': status,
            })
        return pd.DataFrame(rows, columns=ANALYSIS_COLUMNS)

    def conditions_table(self) -> pd.DataFrame:
        rows = [{
            'condition': c.label,
            'candidate': c.candidate,
            'baseline': c.baseline,
            'relation': c.relation,
            'lhs': c.lhs,
            'holds': c.holds,
            'boundary': c.boundary,
            'mse_candidate': c.mse_candidate,
            'mse_baseline': c.mse_baseline,
            'mse_difference': c.mse_difference,
            'consistent': c.consistent,
            'status': c.status,
        } for c in self.conditions]
        return pd.DataFrame(rows, columns=CONDITION_COLUMNS)

    def to_dict(self) -> dict[str, Any]:
        estimators = []
        for name in ESTIMATOR_ORDER:
            d = self.results[name].to_dict()
            d['pre'] = self.pres.get(name)
            estimators.append(d)
        return {
            'params': self.params.to_dict(),
            'design_constants': self.constants.to_dict(),
            'estimators': estimators,
            'conditions': [c.to_dict() for c in self.conditions],
        }


def analyze(params: PopulationParams, yp_member: str = 'yp1', wider_member: int = 3) -> Analysis:
    dc = derive_constants(params)
    results = analyze_estimators(params, wider_member=wider_member)
    conditions = efficiency_conditions(dc, params, results, yp_member=yp_member)

    base = var_mean(dc, params)
    pres: dict[str, Optional[float]] = {}
    pre_status: dict[str, str] = {}
    for name, r in results.items():
        if not r.ok:
            pres[name] = None
            continue
        try:
            pres[name] = pre(base, r.min_mse)
        except NonPositiveMSEError as e:
            pres[name] = None
            pre_status[name] = f'{type(e).__name__}: {e}'

    return Analysis(params=params, constants=dc, results=results, conditions=conditions, pres=pres, pre_status=pre_status)


def reproduce_report(presets: tuple[str, ...] = ('pop1', 'pop1-corrected', 'pop2'), flag_threshold: float = 0.05) -> pd.DataFrame:
    """
    Computed MSE and PRE per preset next to the published values, with relative differences.
    A row is flagged when either relative difference exceeds flag_threshold or the row failed.
    """
    rows = []
    for preset in presets:
        reference = REFERENCE_COLUMN[preset]
        a = analyze(get_population(preset))
        for name in ESTIMATOR_ORDER:
            reference_pre, reference_mse = REFERENCE_TABLE[reference][name]
            r = a.results[name]
            mse = r.min_mse if r.ok else None
            pre_value = a.pres.get(name)
            mse_diff = rel_diff(mse, reference_mse)
            pre_diff = rel_diff(pre_value, reference_pre)
            failed = mse_diff is None or pre_diff is None
            rows.append({
                'population': preset,
                'reference': reference,
                'estimator': name,
                'mse': mse,
                'reference_mse': reference_mse,
                'mse_rel_diff': mse_diff,
                'pre': pre_value,
                'reference_pre': reference_pre,
                'pre_rel_diff': pre_diff,
                'flagged': failed or mse_diff > flag_threshold or pre_diff > flag_threshold,
                'status': r.status if not r.ok else a.pre_status.get(name, 'ok'),
            })
    return pd.DataFrame(rows, columns=REPRODUCE_COLUMNS)


def verification_table(params: PopulationParams) -> pd.DataFrame:
    checks = verify_optima(params)
    return pd.DataFrame([c.to_dict() for c in checks])


def _json_value(value: Any) -> Any:
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def frame_records(df: pd.DataFrame) -> list[dict[str, Any]]:
    """Rows as dicts with NaN and numpy scalars converted for JSON."""
    return [{k: _json_value(v) for k, v in row.items()} for row in df.astype(object).to_dict('records')]


def to_json_safe(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: to_json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_json_safe(v) for v in value]
    return _json_value(value)


def write_csv(df: pd.DataFrame, path: Path, run_id: str) -> Path:
    out = df.copy()
    out.insert(0, 'run_id', run_id)
    out.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, na_rep='', lineterminator='\n')
    return path


def write_json(document: dict[str, Any], path: Path, run_id: str) -> Path:
    with open(path, 'w', newline='\n') as f:
        json.dump(to_json_safe({'run_id': run_id, **document}), f, indent=2)
        f.write('\n')
    return path


def write_table(df: pd.DataFrame, stem: Path, fmt: str, run_id: str, extra: Optional[dict[str, Any]] = None) -> list[Path]:
    """
    Write `<stem>.csv` and/or `<stem>.json` for fmt in {csv, json, both}.
    The JSON mirror holds the rows plus any `extra` keys.
    """
    paths = []
    if fmt in ('csv', 'both'):
        paths.append(write_csv(df, stem.parent / f'{stem.name}.csv', run_id))
    if fmt in ('json', 'both'):
        document = {'rows': frame_records(df), **(extra or {})}
        paths.append(write_json(document, stem.parent / f'{stem.name}.json', run_id))
    return paths
