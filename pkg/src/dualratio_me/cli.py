"""
Command line front end.

Exit codes: 0 success, 1 unexpected error, 2 configuration error,
3 numerical singularity, 4 Monte Carlo failure rate exceeded.
"""
import argparse
from dataclasses import replace
import json
import logging
from pathlib import Path
import sys
import time
from typing import Any, Optional

import pandas as pd

from . import __version__
from .config import Config
from .design import PopulationParams
from .errors import ConfigError, MonteCarloFailureError, NumericalSingularityError
from .estimators import YP_MEMBERS
from .presets import POPULATIONS, SYNTHETIC, get_population, get_synthetic
from .run_log import RunLog, RunManifest
from .simulation.monte_carlo import (
    MonteCarloConfig,
    compare_with_analytic,
    ordering_disagreements,
    resolve_estimators,
    run_monte_carlo,
    sampling_params,
)
from .analysis.mse import analyze_estimators
from .simulation.population import SyntheticPopulationSpec, generate_population
from .tables import analyze, reproduce_report, verification_table, write_json, write_table

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_SINGULAR = 3
EXIT_MONTE_CARLO = 4


def load_json(path: Path) -> Any:
    """@throws ConfigError for a missing file or invalid JSON"""
    path = Path(path)
    try:
        with open(path, 'r') as f:
            return json.load(f)
    except FileNotFoundError:
        raise ConfigError(f'file not found: {path}') from None
    except json.JSONDecodeError as e:
        raise ConfigError(f'{path}: invalid JSON, {e}') from e


def load_params(args: argparse.Namespace) -> tuple[PopulationParams, str, dict[str, Any]]:
    """
    PopulationParams from --params, else --preset.
    @returns params, output label, manifest inputs
    """
    if args.params:
        path = Path(args.params)
        params = PopulationParams.from_dict(load_json(path))
        label = path.stem
        inputs = {'params_path': str(path), 'params': params.to_dict()}
    else:
        params = get_population(args.preset)
        label = args.preset
        inputs = {'preset': args.preset, 'params': params.to_dict()}

    if args.n is not None:
        params = params.with_sample_size(args.n)
        inputs['params'] = params.to_dict()
    return params, label, inputs


def load_spec(args: argparse.Namespace) -> tuple[SyntheticPopulationSpec, str, dict[str, Any]]:
    if args.spec:
        path = Path(args.spec)
        spec = SyntheticPopulationSpec.from_dict(load_json(path))
        label = path.stem
        inputs: dict[str, Any] = {'spec_path': str(path)}
    else:
        spec = get_synthetic(args.preset)
        label = args.preset
        inputs = {'preset': args.preset}

    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    if args.n is not None:
        spec = replace(spec, n=args.n)
    inputs['spec'] = spec.to_dict()
    return spec, label, inputs


def print_frame(df: pd.DataFrame):
    print(df.to_string(index=False, float_format=lambda v: f'{v:.6g}'))


class Runner:
    """Shared state of one command invocation: config, output dir and manifest bookkeeping."""

    def __init__(self, args: argparse.Namespace, config: Config) -> None:
        self.args = args
        self.config = config
        self.out_dir = config.resolve_output_dir(args.out)
        self.fmt = args.format
        self.started = time.perf_counter()

    def finish(self, manifest: RunManifest, stem: str):
        manifest.duration_s = round(time.perf_counter() - self.started, 3)
        path = manifest.write(self.out_dir / f'{stem}.manifest.json')
        logging.info(f'wrote {", ".join(manifest.outputs)} and {path.name} to {self.out_dir}')

        if self.config.run_log_file:
            run_log = RunLog(self.config.run_log_file)
            try:
                run_log.log(manifest)
            finally:
                run_log.close()

    def write(self, manifest: RunManifest, df: pd.DataFrame, stem: str, extra: Optional[dict[str, Any]] = None):
        paths = write_table(df, self.out_dir / stem, self.fmt, manifest.run_id, extra)
        manifest.outputs.extend(p.name for p in paths)


def cmd_analyze(runner: Runner) -> int:
    args = runner.args
    params, label, inputs = load_params(args)
    member = args.member or runner.config.yp_member
    inputs['yp_member'] = member

    a = analyze(params, yp_member=member)
    manifest = RunManifest(command='analyze', inputs=inputs, seed=None)
    stem = f'analyze_{label}'

    df = a.table()
    runner.write(manifest, df, stem, extra=a.to_dict())
    print_frame(df)

    if args.verify:
        checks = verification_table(params)
        runner.write(manifest, checks, f'{stem}_verify')
        print()
        print_frame(checks)

    runner.finish(manifest, stem)
    return EXIT_OK


def cmd_reproduce(runner: Runner) -> int:
    threshold = runner.config.flag_threshold
    df = reproduce_report(flag_threshold=threshold)
    manifest = RunManifest(command='reproduce', inputs={'flag_threshold': threshold, 'presets': ['pop1', 'pop1-corrected', 'pop2']}, seed=None)
    stem = 'reproduce'
    runner.write(manifest, df, stem)
    print_frame(df)

    flagged = df[df['flagged']]
    if len(flagged):
        logging.warning(f'{len(flagged)} of {len(df)} cells differ from the published values by more than {threshold:.0%}')

    runner.finish(manifest, stem)
    return EXIT_OK


def cmd_check_conditions(runner: Runner) -> int:
    args = runner.args
    params, label, inputs = load_params(args)
    member = args.member or runner.config.yp_member
    inputs['yp_member'] = member

    a = analyze(params, yp_member=member)
    manifest = RunManifest(command='check-conditions', inputs=inputs, seed=None)
    stem = f'conditions_{label}'
    df = a.conditions_table()
    runner.write(manifest, df, stem)
    print_frame(df)

    runner.finish(manifest, stem)
    return EXIT_OK


def cmd_gen_pop(runner: Runner) -> int:
    args = runner.args
    spec, label, inputs = load_spec(args)
    pop = generate_population(spec)

    manifest = RunManifest(command='gen-pop', inputs=inputs, seed=spec.seed)
    stem = f'population_{label}'
    csv_path = runner.out_dir / f'{stem}.csv'
    try:
        sidecar = pop.save(csv_path)
    except OSError as e:
        raise OSError(e.errno, f'cannot write population: {e.strerror}', str(csv_path)) from e
    manifest.outputs.extend([csv_path.name, sidecar.name])

    for k, v in pop.moments().items():
        print(f'{k}: {v}')

    runner.finish(manifest, stem)
    return EXIT_OK


def mc_config(args: argparse.Namespace, config: Config) -> MonteCarloConfig:
    """MonteCarloConfig from --mc-config or the [monte_carlo] defaults, then flag overrides."""
    if args.mc_config:
        cfg = MonteCarloConfig.from_dict(load_json(Path(args.mc_config)))
    else:
        cfg = MonteCarloConfig(
            replications=config.mc_replications,
            n=config.mc_sample_size,
            master_seed=config.mc_seed,
            workers=config.mc_workers,
            max_flagged_fraction=config.mc_max_flagged_fraction,
        )

    overrides: dict[str, Any] = {}
    if args.reps is not None:
        overrides['replications'] = args.reps
    if args.n is not None:
        overrides['n'] = args.n
    if args.seed is not None:
        overrides['master_seed'] = args.seed
    if args.workers is not None:
        overrides['workers'] = args.workers
    if args.error_means_zeroed is not None:
        overrides['error_means_zeroed'] = args.error_means_zeroed
    return replace(cfg, **overrides) if overrides else cfg


def cmd_mc(runner: Runner) -> int:
    args = runner.args
    # --seed, --n apply to the replications, not the population generator
    spec_args = argparse.Namespace(**{**vars(args), 'seed': None, 'n': None})
    spec, label, inputs = load_spec(spec_args)
    cfg = mc_config(args, runner.config)
    spec = replace(spec, n=cfg.n)
    inputs['spec'] = spec.to_dict()
    inputs['config'] = cfg.to_dict()

    pop = generate_population(spec)
    params = sampling_params(pop, cfg.n)
    analytic = analyze_estimators(params)
    specs = resolve_estimators(cfg, params, analytic)

    manifest = RunManifest(command='mc', inputs=inputs, seed=cfg.master_seed)
    stem = f'mc_{label}'

    exit_code = EXIT_OK
    try:
        result = run_monte_carlo(pop, cfg, specs)
    except MonteCarloFailureError as e:
        logging.error(str(e))
        result = e.result
        exit_code = EXIT_MONTE_CARLO
        if result is None:
            return exit_code

    comparison = compare_with_analytic(result, analytic)
    # pairs are only ordered among estimators whose first-order MSE holds up empirically
    in_band = comparison.loc[comparison['within_band'].eq(True), 'estimator'].tolist()
    out_of_band = comparison.loc[comparison['within_band'].eq(False), 'estimator'].tolist()
    disagreements = ordering_disagreements(result, analytic, estimators=in_band)
    for a, b in disagreements:
        logging.warning(f'empirical ordering of {a} and {b} contradicts the analytic ordering')

    runner.write(manifest, result.to_frame(), f'{stem}_results', extra=result.to_dict())
    runner.write(manifest, comparison, f'{stem}_comparison', extra={
        'sampling_params': params.to_dict(),
        'ordering_disagreements': [list(p) for p in disagreements],
        'outside_first_order_band': out_of_band,
    })
    print_frame(comparison)

    runner.finish(manifest, stem)
    return exit_code


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', type=Path, help='config.toml path (default ./config.toml if present)')
    common.add_argument('--out', type=Path, help='output directory')
    common.add_argument('--format', choices=('csv', 'json', 'both'), default='both')
    common.add_argument('-v', '--verbose', action='store_true', help='debug logging')

    params_args = argparse.ArgumentParser(add_help=False)
    params_args.add_argument('--params', type=Path, help='PopulationParams JSON file, overrides --preset')
    params_args.add_argument('--preset', choices=sorted(POPULATIONS), default='pop1')
    params_args.add_argument('--n', type=int, help='override the sample size')
    params_args.add_argument('--member', choices=YP_MEMBERS, help='diff_cum_dual member used by the yp predicates')

    spec_args = argparse.ArgumentParser(add_help=False)
    spec_args.add_argument('--spec', type=Path, help='SyntheticPopulationSpec JSON file, overrides --preset')
    spec_args.add_argument('--preset', choices=sorted(SYNTHETIC) + ['pop1-corrected'], default='pop1')
    spec_args.add_argument('--seed', type=int, help='override the seed')
    spec_args.add_argument('--n', type=int, help='override the sample size')

    parser = argparse.ArgumentParser(prog='dualratio-me', description='Dual-to-ratio estimators under measurement error.')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('analyze', parents=[common, params_args], help='analytic MSE/PRE table')
    p.add_argument('--verify', action='store_true', help='check closed-form optima against numeric minimizers')
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser('reproduce', parents=[common], help='computed vs published values for the embedded presets')
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser('check-conditions', parents=[common, params_args], help='efficiency predicate report')
    p.set_defaults(func=cmd_check_conditions)

    p = sub.add_parser('gen-pop', parents=[common, spec_args], help='generate a synthetic population')
    p.set_defaults(func=cmd_gen_pop)

    p = sub.add_parser('mc', parents=[common, spec_args], help='Monte Carlo validation')
    p.add_argument('--mc-config', type=Path, help='MonteCarloConfig JSON file')
    p.add_argument('--reps', type=int, help='number of replications')
    p.add_argument('--workers', type=int, help='worker threads')
    mode = p.add_mutually_exclusive_group()
    mode.add_argument('--theory-conformant', dest='error_means_zeroed', action='store_const', const=True,
                      help='zero-mean measurement errors (default)')
    mode.add_argument('--literal', dest='error_means_zeroed', action='store_const', const=False,
                      help='use the error means of the population spec')
    p.set_defaults(func=cmd_mc, error_means_zeroed=None)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)

    try:
        config = Config(args.config)
        config.setup_logging(args.verbose)
        return args.func(Runner(args, config))

    except ConfigError as e:
        logging.error(f'configuration error: {e}')
        return EXIT_CONFIG
    except NumericalSingularityError as e:
        logging.error(f'numerical singularity: {type(e).__name__}: {e}')
        return EXIT_SINGULAR
    except MonteCarloFailureError as e:
        logging.error(str(e))
        return EXIT_MONTE_CARLO
    except OSError as e:
        logging.error(f'{e.filename}: {e.strerror}' if e.filename else str(e))
        return EXIT_ERROR
    except Exception:
        logging.exception('unexpected error')
        return EXIT_ERROR


if __name__ == '__main__':
    sys.exit(main())
