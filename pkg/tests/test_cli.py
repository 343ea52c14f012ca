import contextlib
import io
import json
import unittest
from pathlib import Path
from tempfile import TemporaryDirectory

import pandas as pd

from dualratio_me.cli import EXIT_CONFIG, EXIT_MONTE_CARLO, EXIT_OK, EXIT_SINGULAR, build_parser, main


class TestCli(unittest.TestCase):

    def setUp(self):
        self.data_dir = Path(__file__).parent / "data"
        self.assertTrue(self.data_dir.is_dir())

        tmp = TemporaryDirectory()
        self.addCleanup(tmp.cleanup)
        self.out = Path(tmp.name)

    def _run(self, *argv: str) -> int:
        command, *rest = argv
        args = [command, '--config', str(self.data_dir / 'config_test.toml'), '--out', str(self.out), *rest]
        with contextlib.redirect_stdout(io.StringIO()):
            return main(args)

    def _outputs(self) -> set[str]:
        return {p.name for p in self.out.iterdir()}

    def test_analyze(self):
        self.assertEqual(self._run('analyze', '--preset', 'pop2'), EXIT_OK)
        self.assertEqual(self._outputs(), {'analyze_pop2.csv', 'analyze_pop2.json', 'analyze_pop2.manifest.json'})

        df = pd.read_csv(self.out / 'analyze_pop2.csv')
        self.assertEqual(len(df), 12)
        self.assertEqual(df['run_id'].nunique(), 1)

        with open(self.out / 'analyze_pop2.manifest.json', 'r') as f:
            manifest = json.load(f)
        self.assertEqual(manifest['command'], 'analyze')
        self.assertEqual(manifest['run_id'], df['run_id'][0])
        # member from config_test.toml
        self.assertEqual(manifest['inputs']['yp_member'], 'yp7')
        self.assertEqual(sorted(manifest['outputs']), ['analyze_pop2.csv', 'analyze_pop2.json'])

    def test_analyze_is_reproducible(self):
        self._run('analyze', '--preset', 'pop2', '--format', 'csv')
        first = (self.out / 'analyze_pop2.csv').read_text()
        self._run('analyze', '--preset', 'pop2', '--format', 'csv')
        self.assertEqual((self.out / 'analyze_pop2.csv').read_text(), first)

    def test_analyze_verify(self):
        self.assertEqual(self._run('analyze', '--preset', 'pop2', '--verify', '--format', 'csv'), EXIT_OK)
        self.assertIn('analyze_pop2_verify.csv', self._outputs())
        df = pd.read_csv(self.out / 'analyze_pop2_verify.csv')
        self.assertTrue((df['mse_rel_diff'] <= 1e-10).all())

    def test_params_file(self):
        self.assertEqual(self._run('analyze', '--params', str(self.data_dir / 'pop1_corrected.json'), '--format', 'csv'), EXIT_OK)
        self.assertEqual(self._outputs(), {'analyze_pop1_corrected.csv', 'analyze_pop1_corrected.manifest.json'})

    def test_sample_size_override(self):
        self.assertEqual(self._run('analyze', '--preset', 'pop2', '--n', '1000', '--format', 'json'), EXIT_OK)
        with open(self.out / 'analyze_pop2.json', 'r') as f:
            doc = json.load(f)
        self.assertEqual(doc['params']['n'], 1000)

    def test_reproduce(self):
        self.assertEqual(self._run('reproduce'), EXIT_OK)
        df = pd.read_csv(self.out / 'reproduce.csv')
        self.assertEqual(len(df), 36)
        self.assertIn('reference_mse', df.columns)

    def test_check_conditions(self):
        self.assertEqual(self._run('check-conditions', '--preset', 'pop2', '--member', 'yp2', '--format', 'csv'), EXIT_OK)
        df = pd.read_csv(self.out / 'conditions_pop2.csv')
        self.assertEqual(len(df), 7)
        self.assertEqual(df['candidate'].iloc[-1], 'yp2')

    def test_gen_pop(self):
        self.assertEqual(self._run('gen-pop', '--spec', str(self.data_dir / 'small_spec.json')), EXIT_OK)
        self.assertEqual(self._outputs(), {'population_small_spec.csv', 'population_small_spec.json', 'population_small_spec.manifest.json'})
        df = pd.read_csv(self.out / 'population_small_spec.csv')
        self.assertEqual(len(df), 400)

        first = (self.out / 'population_small_spec.csv').read_bytes()
        self._run('gen-pop', '--spec', str(self.data_dir / 'small_spec.json'))
        self.assertEqual((self.out / 'population_small_spec.csv').read_bytes(), first)

    def test_mc(self):
        code = self._run('mc', '--spec', str(self.data_dir / 'small_spec.json'), '--mc-config', str(self.data_dir / 'small_mc.json'),
                         '--reps', '60', '--workers', '2')
        self.assertEqual(code, EXIT_OK)
        self.assertTrue({'mc_small_spec_results.csv', 'mc_small_spec_comparison.json', 'mc_small_spec.manifest.json'} <= self._outputs())

        with open(self.out / 'mc_small_spec.manifest.json', 'r') as f:
            manifest = json.load(f)
        self.assertEqual(manifest['seed'], 99)
        self.assertEqual(manifest['inputs']['config']['replications'], 60)
        self.assertEqual(manifest['inputs']['spec']['seed'], 7)

        results = pd.read_csv(self.out / 'mc_small_spec_results.csv')
        self.assertEqual(list(results['estimator']), ['mean', 'dual_ratio', 'wider', 'yp7'])

    def test_mc_output_independent_of_workers(self):
        args = ('mc', '--spec', str(self.data_dir / 'small_spec.json'), '--mc-config', str(self.data_dir / 'small_mc.json'), '--reps', '1200')
        names = ('mc_small_spec_results.csv', 'mc_small_spec_results.json', 'mc_small_spec_comparison.csv', 'mc_small_spec_comparison.json')

        self.assertEqual(self._run(*args, '--workers', '1'), EXIT_OK)
        serial = {name: (self.out / name).read_bytes() for name in names}
        self.assertEqual(self._run(*args, '--workers', '4'), EXIT_OK)
        for name in names:
            self.assertEqual((self.out / name).read_bytes(), serial[name], name)

        with open(self.out / 'mc_small_spec.manifest.json', 'r') as f:
            manifest = json.load(f)
        self.assertNotIn('workers', manifest['inputs']['config'])


    def test_mc_failure_rate(self):
        spec = json.loads((self.data_dir / 'small_spec.json').read_text())
        spec['x_mean'] = 50.0
        spec_path = self.out / 'far_spec.json'
        spec_path.write_text(json.dumps(spec))

        mc_path = self.out / 'bad_mc.json'
        mc_path.write_text(json.dumps({
            'replications': 20,
            'n': 40,
            'master_seed': 1,
            'estimators': ['mean', {'family': 'wider', 'name': 'bad', 'mu_x': 0.1, 'constants': {'member': 2, 'epsilon': 0.5}}],
        }))

        self.assertEqual(self._run('mc', '--spec', str(spec_path), '--mc-config', str(mc_path), '--format', 'csv'), EXIT_MONTE_CARLO)
        # results are still written for inspection
        self.assertIn('mc_far_spec_results.csv', self._outputs())

    def test_config_errors(self):
        for name in ('params_bad_rho.json', 'params_degenerate.json', 'params_malformed.json', 'no_such_params.json'):
            self.assertEqual(self._run('analyze', '--params', str(self.data_dir / name)), EXIT_CONFIG, name)

        with contextlib.redirect_stdout(io.StringIO()):
            code = main(['analyze', '--config', str(self.data_dir / 'config_bad_type.toml'), '--out', str(self.out)])
        self.assertEqual(code, EXIT_CONFIG)

    def test_zero_mean(self):
        self.assertEqual(self._run('analyze', '--params', str(self.data_dir / 'params_zero_mean.json')), EXIT_SINGULAR)

    def test_parser(self):
        args = build_parser().parse_args(['mc', '--literal'])
        self.assertFalse(args.error_means_zeroed)
        args = build_parser().parse_args(['mc'])
        self.assertIsNone(args.error_means_zeroed)
        with contextlib.redirect_stderr(io.StringIO()):
            with self.assertRaises(SystemExit):
                build_parser().parse_args(['mc', '--literal', '--theory-conformant'])


if __name__ == '__main__':
    unittest.main()
