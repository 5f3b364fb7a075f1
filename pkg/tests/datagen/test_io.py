"""
Tests of the dataset CSV layout, the JSON writer and the run manifests.
"""

import json
import os
import tempfile
import unittest

import numpy as np
from numpy.testing import assert_array_equal

from confoundverse import exceptions as ex
from confoundverse import io
from confoundverse.datagen import ScenarioConfig, generate


class TestDatasetCsv(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.tmp.cleanup()

    def path(self, name):
        return os.path.join(self.tmp.name, name)

    def write(self, name, text):
        with open(self.path(name), 'w') as handle:
            handle.write(text)
        return self.path(name)

    def test_header_layout(self):
        dataset = generate(ScenarioConfig('multi_env', N=20, d_x=2, d_u=2, seed=1))
        path = io.write_dataset_csv(dataset, self.path('data.csv'), include_hidden=True)
        with open(path) as handle:
            header = handle.readline().strip()
        self.assertEqual(header, 'y,t,x1,x2,env,u1,u2')

    def test_written_values_read_back_exactly(self):
        """
        17 significant digits reproduce every float bit for bit.
        """
        dataset = generate(ScenarioConfig(rho=1.0, N=50, seed=2))
        path = io.write_dataset_csv(dataset, self.path('data.csv'))
        observed = io.read_dataset_csv(path)
        assert_array_equal(observed.X, dataset.X)
        assert_array_equal(observed.T, dataset.T)
        assert_array_equal(observed.Y, dataset.Y)
        self.assertIsNone(observed.env_labels)

    def test_same_config_same_bytes(self):
        config = ScenarioConfig(N=100, seed=1)
        first = io.write_dataset_csv(generate(config), self.path('a.csv'))
        second = io.write_dataset_csv(generate(config), self.path('b.csv'))
        with open(first, 'rb') as a, open(second, 'rb') as b:
            self.assertEqual(a.read(), b.read())

    def test_x_columns_in_numeric_order(self):
        path = self.write('data.csv', 'x10,y,x2,t,x1\n10,0,2,0,1\n20,1,4,1,2\n')
        observed = io.read_dataset_csv(path)
        assert_array_equal(observed.X, [[1, 2, 10], [2, 4, 20]])

    def test_hidden_columns_ignored_with_warning(self):
        path = self.write('data.csv', 'y,t,x1,u1\n1,2,3,4\n5,6,7,8\n')
        with self.assertLogs('confoundverse.io', level='WARNING'):
            observed = io.read_dataset_csv(path)
        self.assertEqual(observed.X.shape, (2, 1))

    def test_missing_columns(self):
        path = self.write('data.csv', 'y,x1\n1,2\n')
        with self.assertRaises(ex.ErrorMissingColumns) as caught:
            io.read_dataset_csv(path)
        self.assertEqual(caught.exception.columns, ['t'])

        path = self.write('data2.csv', 'y,t\n1,2\n')
        with self.assertRaises(ex.ErrorMissingColumns):
            io.read_dataset_csv(path)

    def test_non_numeric_values(self):
        path = self.write('data.csv', 'y,t,x1\n1,2,abc\n1,2,3\n')
        with self.assertRaises(ex.ErrorNonFinite):
            io.read_dataset_csv(path)

    def test_unreadable_file(self):
        with self.assertRaises(ex.ErrorUnreadableInput):
            io.read_dataset_csv(self.path('missing.csv'))
        with self.assertRaises(ex.ErrorUnreadableInput):
            io.read_dataset_csv(self.write('empty.csv', ''))

    def test_env_column(self):
        path = self.write('data.csv', 'y,t,x1,env\n1,2,3,0\n1,2,3,1\n')
        assert_array_equal(io.read_dataset_csv(path).env_labels, [0, 1])


class TestManifest(unittest.TestCase):

    def test_manifest_next_to_output(self):
        with tempfile.TemporaryDirectory() as tmp:
            output = os.path.join(tmp, 'result.json')
            io.write_json({'b': 1, 'a': [1.5]}, output)
            manifest = io.RunManifest(command='detect', config={'P': 40}, seed=3, outputs=[output])
            path = io.write_manifest(manifest, output)

            self.assertEqual(path, output + '.manifest.json')
            with open(path) as handle:
                document = json.load(handle)
            self.assertEqual(document['command'], 'detect')
            self.assertEqual(document['seed'], 3)
            self.assertEqual(document['format_version'], '1')
            self.assertEqual(document['output_sha256'][output], io.file_digest(output))
            self.assertIsNotNone(document['finished_at'])
            self.assertEqual(document['volatile_fields'], [])

    def test_json_is_sorted(self):
        self.assertEqual(io.dumps_json({'b': 1, 'a': 2}), '{\n  "a": 2,\n  "b": 1\n}\n')
