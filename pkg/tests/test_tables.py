import json
import unittest
from pathlib import Path
from tempfile import TemporaryDirectory

import numpy as np
import pandas as pd

from dualratio_me.analysis.mse import ESTIMATOR_ORDER
from dualratio_me.presets import POP2, UNCORRELATED
from dualratio_me.tables import (
    ANALYSIS_COLUMNS,
    REPRODUCE_COLUMNS,
    analyze,
    format_constants,
    frame_records,
    reproduce_report,
    verification_table,
    write_table,
)


class TestAnalysisTable(unittest.TestCase):

    def test_pop2(self):
        a = analyze(POP2)
        df = a.table()
        self.assertEqual(list(df.columns), ANALYSIS_COLUMNS)
        self.assertEqual(list(df['estimator']), list(ESTIMATOR_ORDER))
        mean = df[df['estimator'] == 'mean'].iloc[0]
        self.assertAlmostEqual(mean['pre'], 100.0)
        self.assertTrue((df['status'] == 'ok').all())
        self.assertIn('wider<mean=true', df[df['estimator'] == 'wider'].iloc[0]['conditions'])

    def test_failed_rows_keep_their_place(self):
        a = analyze(UNCORRELATED)
        df = a.table()
        row = df[df['estimator'] == 'yp1'].iloc[0]
        self.assertTrue(pd.isna(row['mse']))
        self.assertTrue(row['status'].startswith('SingularNormalEquationsError'))
        self.assertIsNone(a.pres['yp1'])

    def test_to_dict(self):
        d = analyze(POP2, yp_member='yp7').to_dict()
        self.assertEqual(d['params'], POP2.to_dict())
        self.assertIn('lambda', d['design_constants'])
        self.assertEqual(len(d['estimators']), len(ESTIMATOR_ORDER))
        self.assertEqual(len(d['conditions']), 7)
        self.assertEqual(d['conditions'][-1]['candidate'], 'yp7')

    def test_format_constants(self):
        self.assertEqual(format_constants({'J': 7.2345678, 'member': 3}), 'J=7.23457;member=3')


class TestReproduce(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.df = reproduce_report()

    def _row(self, population: str, estimator: str) -> pd.Series:
        df = self.df
        return df[(df['population'] == population) & (df['estimator'] == estimator)].iloc[0]

    def test_layout(self):
        self.assertEqual(list(self.df.columns), REPRODUCE_COLUMNS)
        self.assertEqual(len(self.df), 3 * len(ESTIMATOR_ORDER))
        self.assertEqual(set(self.df['reference']), {'pop1', 'pop2'})

    def test_reproduced_cells(self):
        for population in ('pop1-corrected', 'pop2'):
            for estimator in ('mean', 'dual_ratio', 'wider'):
                row = self._row(population, estimator)
                self.assertFalse(row['flagged'], f'{population} {estimator}: {row.to_dict()}')

    def test_pop1_as_printed_is_flagged(self):
        # the printed S_dX^2 of population 1 does not reproduce its own rows
        self.assertTrue(self._row('pop1', 'wider')['flagged'])
        self.assertFalse(self._row('pop1', 'mean')['flagged'])

    def test_threshold(self):
        loose = reproduce_report(presets=('pop2',), flag_threshold=10.0)
        self.assertFalse(loose['flagged'].any())


class TestVerification(unittest.TestCase):

    def test_table(self):
        df = verification_table(POP2)
        self.assertIn('agrees', df.columns)
        self.assertIn('wider', set(df['estimator']))


class TestWriters(unittest.TestCase):

    def test_frame_records(self):
        df = pd.DataFrame({'a': [1.0, np.nan], 'b': [np.int64(3), np.int64(4)]})
        records = frame_records(df)
        self.assertEqual(records, [{'a': 1.0, 'b': 3}, {'a': None, 'b': 4}])
        json.dumps(records)

    def test_write_both(self):
        df = analyze(POP2).table()
        with TemporaryDirectory() as tmp:
            paths = write_table(df, Path(tmp) / 'analyze_pop2', 'both', 'abc123', extra={'note': 'x'})
            self.assertEqual([p.name for p in paths], ['analyze_pop2.csv', 'analyze_pop2.json'])

            csv = pd.read_csv(paths[0])
            self.assertEqual(list(csv.columns), ['run_id'] + ANALYSIS_COLUMNS)
            self.assertTrue((csv['run_id'] == 'abc123').all())
            with open(paths[0], 'rb') as f:
                self.assertNotIn(b'\r\n', f.read())

            with open(paths[1], 'r') as f:
                doc = json.load(f)
            self.assertEqual(doc['run_id'], 'abc123')
            self.assertEqual(doc['note'], 'x')
            self.assertEqual(len(doc['rows']), len(ESTIMATOR_ORDER))

    def test_write_csv_only(self):
        with TemporaryDirectory() as tmp:
            paths = write_table(pd.DataFrame({'x': [1.5]}), Path(tmp) / 'run.v1', 'csv', 'id')
            self.assertEqual([p.name for p in paths], ['run.v1.csv'])


if __name__ == '__main__':
    unittest.main()
