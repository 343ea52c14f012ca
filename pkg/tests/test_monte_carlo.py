import json
import unittest
from dataclasses import replace
from pathlib import Path

import numpy as np
import pandas as pd

from dualratio_me.analysis.coefficients import Kind, coeffs
from dualratio_me.analysis.mse import analyze_estimators, diff_cum_dual_mse, optimum_specs
from dualratio_me.design import derive_constants
from dualratio_me.errors import InvalidParameterError, MonteCarloFailureError
from dualratio_me.estimators import YP_MEMBERS, evaluate_means, yp_member_spec
from dualratio_me.presets import SYNTHETIC
from dualratio_me.simulation.monte_carlo import (
    MonteCarloConfig,
    compare_with_analytic,
    draw_sample_means,
    ordering_disagreements,
    resolve_estimators,
    run_monte_carlo,
    sampling_params,
)
from dualratio_me.simulation.population import SyntheticPopulationSpec, generate_population


class TestMonteCarloConfig(unittest.TestCase):

    def setUp(self):
        self.data_dir = Path(__file__).parent / "data"
        self.assertTrue(self.data_dir.is_dir())

    def test_from_dict(self):
        with open(self.data_dir / 'small_mc.json', 'r') as f:
            cfg = MonteCarloConfig.from_dict(json.load(f))
        self.assertEqual(cfg.replications, 200)
        self.assertEqual(cfg.estimators, ('mean', 'dual_ratio', 'wider', 'yp7'))
        self.assertTrue(cfg.error_means_zeroed)
        self.assertEqual(cfg.to_dict()['estimators'], ['mean', 'dual_ratio', 'wider', 'yp7'])

    def test_invalid(self):
        with self.assertRaises(InvalidParameterError) as ctx:
            MonteCarloConfig.from_dict({'replications': 10, 'master_seed': 1})
        self.assertEqual(ctx.exception.field, 'n')
        with self.assertRaises(InvalidParameterError) as ctx:
            MonteCarloConfig.from_dict({'replications': 10, 'n': 5, 'master_seed': 1, 'reps': 3})
        self.assertEqual(ctx.exception.field, 'reps')
        with self.assertRaises(InvalidParameterError):
            MonteCarloConfig(replications=0, n=5, master_seed=1)
        with self.assertRaises(InvalidParameterError):
            MonteCarloConfig(replications=10, n=5, master_seed=1, workers=0)
        with self.assertRaises(InvalidParameterError):
            MonteCarloConfig(replications=10, n=5, master_seed=1, estimators=())

    def test_unknown_estimator(self):
        pop = generate_population(self._small_spec())
        cfg = MonteCarloConfig(replications=10, n=40, master_seed=1, estimators=('mean', 'ratio'))
        with self.assertRaises(InvalidParameterError):
            resolve_estimators(cfg, sampling_params(pop, 40))

    def test_duplicate_estimators(self):
        with self.assertRaises(InvalidParameterError) as ctx:
            MonteCarloConfig.from_dict({'replications': 10, 'n': 5, 'master_seed': 1, 'estimators': ['mean', 'yp7', 'mean']})
        self.assertEqual(ctx.exception.field, 'estimators')
        with self.assertRaises(InvalidParameterError):
            MonteCarloConfig(replications=10, n=5, master_seed=1,
                             estimators=({'family': 'mean', 'name': 'm'}, {'family': 'dual_ratio', 'name': 'm'}))

        # an unnamed dict resolves to the family name
        pop = generate_population(self._small_spec())
        cfg = MonteCarloConfig(replications=10, n=40, master_seed=1, estimators=('mean', {'family': 'mean'}))
        with self.assertRaises(InvalidParameterError):
            run_monte_carlo(pop, cfg)

    def _small_spec(self) -> SyntheticPopulationSpec:
        with open(self.data_dir / 'small_spec.json', 'r') as f:
            return SyntheticPopulationSpec.from_dict(json.load(f))


class TestRunMonteCarlo(unittest.TestCase):

    def setUp(self):
        self.data_dir = Path(__file__).parent / "data"
        with open(self.data_dir / 'small_spec.json', 'r') as f:
            self.spec = SyntheticPopulationSpec.from_dict(json.load(f))
        self.pop = generate_population(self.spec)

    def test_workers_do_not_change_results(self):
        cfg = MonteCarloConfig(replications=1200, n=40, master_seed=42, estimators=('mean', 'dual_ratio', 'yp7'))
        serial = run_monte_carlo(self.pop, cfg)
        threaded = run_monte_carlo(self.pop, replace(cfg, workers=3))
        for name in cfg.estimators:
            self.assertEqual(serial.stats[name].empirical_mse, threaded.stats[name].empirical_mse, name)
            self.assertEqual(serial.stats[name].empirical_bias, threaded.stats[name].empirical_bias, name)

    def test_seed_changes_results(self):
        cfg = MonteCarloConfig(replications=100, n=40, master_seed=1, estimators=('mean',))
        a = run_monte_carlo(self.pop, cfg)
        b = run_monte_carlo(self.pop, replace(cfg, master_seed=2))
        self.assertNotEqual(a.stats['mean'].empirical_mse, b.stats['mean'].empirical_mse)

    def test_single_replication(self):
        cfg = MonteCarloConfig(replications=1, n=40, master_seed=8, estimators=('mean', 'dual_ratio'))
        a = run_monte_carlo(self.pop, cfg)
        b = run_monte_carlo(self.pop, cfg)
        self.assertEqual(a.stats['dual_ratio'].empirical_mse, b.stats['dual_ratio'].empirical_mse)
        self.assertIsNone(a.stats['mean'].monte_carlo_se)
        self.assertEqual(a.stats['mean'].replications_used, 1)

    def test_result_shapes(self):
        cfg = MonteCarloConfig(replications=200, n=40, master_seed=3, estimators=('mean', 'wider'))
        result = run_monte_carlo(self.pop, cfg)
        self.assertEqual(result.master_seed, 3)
        self.assertEqual(result.flagged_fraction(), 0.0)

        df = result.to_frame()
        self.assertEqual(list(df['estimator']), ['mean', 'wider'])
        self.assertTrue((df['replications_used'] == 200).all())

        d = result.to_dict()
        self.assertEqual(d['config']['replications'], 200)
        self.assertEqual(d['population_spec']['seed'], 7)
        self.assertEqual([e['name'] for e in d['estimators']], ['mean', 'wider'])

    def test_literal_error_means(self):
        cfg = MonteCarloConfig(replications=200, n=40, master_seed=5, estimators=('mean',), error_means_zeroed=False)
        result = run_monte_carlo(self.pop, cfg)
        # ȳ picks up the error mean of 1
        self.assertAlmostEqual(result.stats['mean'].empirical_bias, self.spec.err_y_mean, delta=0.5)

    def test_sample_size_must_be_below_population(self):
        cfg = MonteCarloConfig(replications=10, n=400, master_seed=1, estimators=('mean',))
        with self.assertRaises(InvalidParameterError):
            run_monte_carlo(self.pop, cfg)

    def test_flagged_replications(self):
        # mu_x far below the sample means drives u** negative, which a fractional power cannot take
        pop = generate_population(replace(self.spec, x_mean=50.0))
        bad = {'family': 'wider', 'name': 'bad', 'mu_x': 0.1, 'constants': {'member': 2, 'epsilon': 0.5}}
        cfg = MonteCarloConfig(replications=50, n=40, master_seed=1, estimators=('mean', bad))
        with self.assertLogs(level='WARNING'):
            with self.assertRaises(MonteCarloFailureError) as ctx:
                run_monte_carlo(pop, cfg)

        result = ctx.exception.result
        self.assertIsNotNone(result)
        self.assertEqual(result.stats['bad'].flagged, 50)
        self.assertIsNone(result.stats['bad'].empirical_mse)
        self.assertGreater(result.stats['bad'].expansion_violations, 0)
        self.assertEqual(result.stats['mean'].flagged, 0)
        self.assertEqual(result.flagged_fraction(), 1.0)


class TestAgainstAnalytic(unittest.TestCase):
    """Empirical MSEs of the synthetic populations against the first-order values."""

    replications = 20000
    # fixed (d1, d2) of the diff_cum_dual members, away from the optimum
    fixed_constants = ((1.0, 0.0), (0.0, 1.0), (0.5, 0.5))

    @classmethod
    def setUpClass(cls):
        cls.runs = {}
        for name in ('pop1', 'pop2'):
            spec = SYNTHETIC[name]
            pop = generate_population(spec)
            params = sampling_params(pop, spec.n)
            analytic = analyze_estimators(params)

            specs = optimum_specs(params, analytic)
            for member in YP_MEMBERS:
                for d1, d2 in cls.fixed_constants:
                    specs.append(yp_member_spec(member, params, d1=d1, d2=d2).with_constants(name=f'{member}@{d1},{d2}'))

            cfg = MonteCarloConfig(replications=cls.replications, n=spec.n, master_seed=12345, workers=2)
            result = run_monte_carlo(pop, cfg, specs)
            comparison = compare_with_analytic(result, analytic)
            cls.runs[name] = (result, analytic, params, comparison)

    def _ratio(self, population: str, estimator: str) -> float:
        result, analytic, _, _ = self.runs[population]
        return result.stats[estimator].empirical_mse / analytic[estimator].min_mse

    def test_mean_within_standard_errors(self):
        for population in ('pop1', 'pop2'):
            result, analytic, _, _ = self.runs[population]
            s = result.stats['mean']
            self.assertLessEqual(abs(s.empirical_mse - analytic['mean'].min_mse), 4 * s.monte_carlo_se, population)

    def test_first_order_optima(self):
        for population in ('pop1', 'pop2'):
            for estimator in ('dual_ratio', 'yp1'):
                self.assertAlmostEqual(self._ratio(population, estimator), 1.0, delta=0.1, msg=f'{population} {estimator}')
        for estimator in ('wider', 'modified_difference'):
            self.assertAlmostEqual(self._ratio('pop2', estimator), 1.0, delta=0.1, msg=estimator)
            # the dropped ȳ kappa_X product term adds close to a tenth of the first-order minimum on pop1
            self.assertAlmostEqual(self._ratio('pop1', estimator), 1.0, delta=0.15, msg=estimator)

    def test_fixed_constants_match_first_order(self):
        for population in ('pop1', 'pop2'):
            result, _, params, _ = self.runs[population]
            dc = derive_constants(params)
            for member in YP_MEMBERS:
                spec = yp_member_spec(member, params)
                for d1, d2 in self.fixed_constants:
                    expected = diff_cum_dual_mse(dc, params, spec.tau, spec.c3, spec.beta, d1, d2)
                    empirical = result.stats[f'{member}@{d1},{d2}'].empirical_mse
                    self.assertAlmostEqual(empirical / expected, 1.0, delta=0.1, msg=f'{population} {member} ({d1}, {d2})')

    def test_diff_cum_dual_optima_outside_band(self):
        # the optimum (d1, d2) of yp2..yp7 lie far from 1, where the terms the first-order MSE drops
        # are multiplied up; the empirical MSE then sits well above the first-order minimum
        for population in ('pop1', 'pop2'):
            _, _, _, comparison = self.runs[population]
            rows = comparison.set_index('estimator')
            for member in YP_MEMBERS[1:]:
                self.assertGreater(rows.loc[member, 'first_order_ratio'], 1.1, f'{population} {member}')
                self.assertFalse(rows.loc[member, 'within_band'], f'{population} {member}')
            for estimator in ('mean', 'dual_ratio', 'yp1'):
                self.assertTrue(rows.loc[estimator, 'within_band'], f'{population} {estimator}')

    def test_comparison_table(self):
        result, analytic, _, comparison = self.runs['pop2']
        self.assertEqual(list(comparison['estimator']), list(result.stats))
        row = comparison[comparison['estimator'] == 'mean'].iloc[0]
        self.assertAlmostEqual(row['first_order_ratio'], row['empirical_mse'] / row['analytic_mse'])
        self.assertEqual(row['analytic_bias'], 0.0)
        # fixed-constant specs have no analytic optimum to compare with
        row = comparison[comparison['estimator'] == 'yp7@0.5,0.5'].iloc[0]
        self.assertTrue(pd.isna(row['analytic_mse']))

    def test_ordering(self):
        for population in ('pop1', 'pop2'):
            result, analytic, _, comparison = self.runs[population]
            in_band = comparison.loc[comparison['within_band'].eq(True), 'estimator'].tolist()
            self.assertEqual(ordering_disagreements(result, analytic, estimators=in_band), [], population)

        result = self.runs['pop2'][0]
        empirical = {k: s.empirical_mse for k, s in result.stats.items()}
        self.assertLess(empirical['wider'], empirical['dual_ratio'])
        self.assertLess(empirical['dual_ratio'], empirical['mean'])

    def test_perturbed_constants(self):
        # every replication scores the optimum and its perturbations on the same sample
        spec = SYNTHETIC['pop2']
        pop = generate_population(spec)
        optimal = {s.name: s for s in optimum_specs(sampling_params(pop, spec.n))}

        specs = []
        for name, constants in (('wider', ('epsilon',)), ('modified_difference', ('J',)), ('yp1', ('d1', 'd2'))):
            base = optimal[name]
            specs.append(base)
            for factor in (0.8, 1.2):
                changed = {k: getattr(base, k) * factor for k in constants}
                specs.append(base.with_constants(name=f'{name}@{factor}', **changed))

        cfg = MonteCarloConfig(replications=2000, n=spec.n, master_seed=77)
        result = run_monte_carlo(pop, cfg, specs)
        for name in ('wider', 'modified_difference', 'yp1'):
            best = result.stats[name].empirical_mse
            for factor in (0.8, 1.2):
                self.assertLess(best, result.stats[f'{name}@{factor}'].empirical_mse, f'{name} x{factor}')


class TestDiffCumDualMoments(unittest.TestCase):
    """The D coefficients against the second moments of the two blended components."""

    replications = 20000

    @classmethod
    def setUpClass(cls):
        spec = SYNTHETIC['pop2']
        cls.pop = generate_population(spec)
        cls.params = sampling_params(cls.pop, spec.n)
        cfg = MonteCarloConfig(replications=cls.replications, n=spec.n, master_seed=31, workers=2)
        cls.xbars, cls.ybars = draw_sample_means(cls.pop, cfg)

    def test_d_set(self):
        p = self.params
        dc = derive_constants(p)
        Y = float(np.mean(self.pop.true_y))
        N, n = self.pop.N, p.n

        for member in YP_MEMBERS:
            spec = yp_member_spec(member, p)
            cs = coeffs(Kind.D, dc, p, {'tau': spec.tau, 'c3': spec.c3, 'beta': spec.beta})
            c1, c2, c3, c4, c5 = cs.centered
            self.assertEqual(c3, 0.0)

            a = evaluate_means(spec.with_constants(d1=1.0, d2=0.0), self.xbars, self.ybars, N, n) - Y
            b = evaluate_means(spec.with_constants(d1=0.0, d2=1.0), self.xbars, self.ybars, N, n) - Y

            # E[(a - Ȳ)^2] = D1 - Ȳ^2, E[(b - Ȳ)^2] = D2 - 2 D4 + Ȳ^2, E[(a - Ȳ)(b - Ȳ)] = D5 - D4
            self.assertAlmostEqual(np.mean(a ** 2) / c1, 1.0, delta=0.05, msg=member)
            self.assertAlmostEqual(np.mean(b ** 2) / (c2 - 2 * c4), 1.0, delta=0.05, msg=member)
            self.assertAlmostEqual(np.mean(a * b) / (c5 - c4), 1.0, delta=0.05, msg=member)

            # Ȳ E[a] = D3 and Ȳ E[b] = D4
            se = Y * np.std(b, ddof=1) / np.sqrt(len(b))
            self.assertLessEqual(abs(Y * np.mean(b) - c4), 5 * se, member)
            se = np.std(a, ddof=1) / np.sqrt(len(a))
            self.assertLessEqual(abs(np.mean(a)), 5 * se, member)


if __name__ == '__main__':
    unittest.main()
