import itertools
import unittest
from dataclasses import replace

import numpy as np
from hypothesis import given, settings, strategies as st
from scipy import stats

from dualratio_me.errors import InvalidParameterError
from dualratio_me.presets import SYNTHETIC
from dualratio_me.simulation.population import generate_population
from dualratio_me.simulation.sampling import draw_srswor, error_draws, observe_with_error


class TestSrswor(unittest.TestCase):

    def setUp(self):
        self.pop = generate_population(replace(SYNTHETIC['pop1'], N=200, n=20))

    @settings(max_examples=50)
    @given(n=st.integers(min_value=0, max_value=200), seed=st.integers(min_value=0, max_value=2 ** 32))
    def test_distinct_indices(self, n, seed):
        idx = draw_srswor(self.pop, n, np.random.default_rng(seed))
        self.assertEqual(len(idx), n)
        self.assertEqual(len(set(idx.tolist())), n)
        if n:
            self.assertGreaterEqual(idx.min(), 0)
            self.assertLess(idx.max(), 200)

    def test_census_is_permutation(self):
        idx = draw_srswor(self.pop, 200, np.random.default_rng(1))
        self.assertEqual(sorted(idx.tolist()), list(range(200)))

    def test_too_large(self):
        with self.assertRaises(InvalidParameterError):
            draw_srswor(self.pop, 201, np.random.default_rng(1))

    def test_subsets_equally_likely(self):
        pop = generate_population(replace(SYNTHETIC['pop1'], N=5, n=2))
        rng = np.random.default_rng(20240101)
        subsets = {s: 0 for s in itertools.combinations(range(5), 2)}
        for _ in range(10000):
            subsets[tuple(sorted(draw_srswor(pop, 2, rng).tolist()))] += 1

        self.assertEqual(sum(subsets.values()), 10000)
        result = stats.chisquare(list(subsets.values()))
        self.assertGreater(result.pvalue, 1e-4)


class TestObserveWithError(unittest.TestCase):

    def setUp(self):
        self.spec = replace(SYNTHETIC['pop2'], N=1000, n=100)
        self.pop = generate_population(self.spec)

    def test_error_means(self):
        ey, ex = error_draws(20000, self.spec, np.random.default_rng(3), error_means_zeroed=True)
        self.assertAlmostEqual(float(np.mean(ey)), 0.0, delta=0.15)
        self.assertAlmostEqual(float(np.std(ex)), self.spec.err_x_sd, delta=0.15)

        ey, ex = error_draws(20000, self.spec, np.random.default_rng(3), error_means_zeroed=False)
        self.assertAlmostEqual(float(np.mean(ey)), self.spec.err_y_mean, delta=0.15)
        self.assertAlmostEqual(float(np.mean(ex)), self.spec.err_x_mean, delta=0.15)

    def test_observed_sample(self):
        rng = np.random.default_rng(11)
        idx = draw_srswor(self.pop, 100, rng)
        s = observe_with_error(self.pop, idx, self.spec, rng)
        self.assertEqual(s.n, 100)
        self.assertEqual(s.N, 1000)
        # errors are added, not substituted
        self.assertFalse(np.array_equal(s.ys, self.pop.true_y[idx]))
        self.assertLess(float(np.max(np.abs(s.xs - self.pop.true_x[idx]))), 8 * self.spec.err_x_sd)

    def test_same_stream_same_sample(self):
        a = observe_with_error(self.pop, np.arange(50), self.spec, np.random.default_rng(5))
        b = observe_with_error(self.pop, np.arange(50), self.spec, np.random.default_rng(5))
        np.testing.assert_array_equal(a.xs, b.xs)
        np.testing.assert_array_equal(a.ys, b.ys)


if __name__ == '__main__':
    unittest.main()
