"""
Tests of the command line: outputs, manifests and the exit-status contract.
"""

import json
import os
import tempfile
import unittest

from click.testing import CliRunner

from confoundverse import __version__
from confoundverse import cli
from confoundverse.config import settings


class CliTestCase(unittest.TestCase):

    def setUp(self):
        self.runner = CliRunner()
        self.tmp = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.tmp.cleanup()

    def path(self, name):
        return os.path.join(self.tmp.name, name)

    def invoke(self, *args):
        return self.runner.invoke(cli.main, ['--no-color', *args])

    def simulate(self, name='data.csv', *args):
        out = self.path(name)
        result = self.invoke('simulate', '--out', out, *args)
        self.assertEqual(result.exit_code, cli.EXIT_SUPPORT, result.output)
        return out


class TestMain(CliTestCase):

    def test_version(self):
        result = self.invoke('--version')
        self.assertEqual(result.exit_code, 0)
        self.assertEqual(result.stdout.strip(), f'ConfoundVerse {__version__} (format 1)')

    def test_unknown_option_is_usage_error(self):
        result = self.invoke('detect', '--no-such-option')
        self.assertEqual(result.exit_code, cli.EXIT_USAGE)

    def test_thread_cap(self):
        previous = settings.threads()
        self.addCleanup(settings.define_threads, previous)
        result = self.invoke('--threads', '2', 'simulate', '--n', '20', '--out', self.path('data.csv'))
        self.assertEqual(result.exit_code, cli.EXIT_SUPPORT, result.output)
        self.assertEqual(settings.threads(), 2)

    def test_zero_threads_is_usage_error(self):
        result = self.invoke('--threads', '0', 'simulate', '--out', self.path('data.csv'))
        self.assertEqual(result.exit_code, cli.EXIT_USAGE)


class TestSimulate(CliTestCase):

    def test_same_seed_same_bytes(self):
        first = self.simulate('a.csv', '--rho', '1', '--n', '200', '--seed', '3')
        second = self.simulate('b.csv', '--rho', '1', '--n', '200', '--seed', '3')
        with open(first, 'rb') as a, open(second, 'rb') as b:
            self.assertEqual(a.read(), b.read())

    def test_manifest(self):
        out = self.simulate('data.csv', '--n', '50', '--seed', '4', '--include-hidden')
        with open(out + '.manifest.json') as handle:
            manifest = json.load(handle)
        self.assertEqual(manifest['command'], 'simulate')
        self.assertEqual(manifest['seed'], 4)
        self.assertEqual(manifest['config']['N'], 50)
        self.assertTrue(manifest['config']['include_hidden'])
        self.assertIn(out, manifest['output_sha256'])

    def test_header(self):
        out = self.simulate('data.csv', '--scenario', 'multi_env', '--n', '30', '--envs', '3')
        with open(out) as handle:
            self.assertEqual(handle.readline().strip(), 'y,t,x1,x2,x3,env')

    def test_single_environment_is_usage_error(self):
        result = self.invoke('simulate', '--scenario', 'multi_env', '--envs', '1',
                             '--out', self.path('data.csv'))
        self.assertEqual(result.exit_code, cli.EXIT_USAGE)
        self.assertFalse(os.path.exists(self.path('data.csv')))

    def test_negative_rho_is_usage_error(self):
        result = self.invoke('simulate', '--rho', '-1', '--out', self.path('data.csv'))
        self.assertEqual(result.exit_code, cli.EXIT_USAGE)


class TestDetect(CliTestCase):

    def test_result_json_on_stdout(self):
        data = self.simulate('data.csv', '--rho', '2', '--n', '300', '--seed', '7')
        result = self.invoke('detect', '--input', data, '--p-dim', '20', '--lambda', '1e-4')

        self.assertIn(result.exit_code, (cli.EXIT_SUPPORT, cli.EXIT_REJECT))
        document = json.loads(result.stdout)
        self.assertEqual(document['P'], 20)
        self.assertEqual(document['N'], 300)
        self.assertEqual(len(document['z_scores']), 20)
        expected = cli.EXIT_REJECT if document['verdict'] == 'reject_null' else cli.EXIT_SUPPORT
        self.assertEqual(result.exit_code, expected)

    def test_result_file_and_manifest(self):
        data = self.simulate('data.csv', '--n', '100', '--seed', '1')
        out = self.path('result.json')
        result = self.invoke('detect', '--input', data, '--p-dim', '10', '--out', out)

        self.assertIn(result.exit_code, (cli.EXIT_SUPPORT, cli.EXIT_REJECT))
        with open(out) as handle:
            self.assertEqual(json.load(handle), json.loads(result.stdout))
        with open(out + '.manifest.json') as handle:
            manifest = json.load(handle)
        self.assertEqual(manifest['inputs'], [data])
        self.assertEqual(manifest['config']['P'], 10)

    def test_rerun_differs_only_in_timing(self):
        data = self.simulate('data.csv', '--n', '100', '--seed', '5')
        documents = []
        for name in ('first.json', 'second.json'):
            out = self.path(name)
            result = self.invoke('detect', '--input', data, '--p-dim', '10', '--out', out)
            self.assertIn(result.exit_code, (cli.EXIT_SUPPORT, cli.EXIT_REJECT))
            with open(out + '.manifest.json') as handle:
                volatile = json.load(handle)['volatile_fields']
            self.assertEqual(volatile, ['wall_time_ms'])
            with open(out) as handle:
                document = json.load(handle)
            for key in volatile:
                document.pop(key)
            documents.append(document)
        self.assertEqual(documents[0], documents[1])

    def test_basis_larger_than_sample_is_usage_error(self):
        data = self.simulate('data.csv', '--n', '500')
        result = self.invoke('detect', '--input', data, '--p-dim', '1000')
        self.assertEqual(result.exit_code, cli.EXIT_USAGE)
        self.assertEqual(result.stdout, '')

    def test_hidden_columns_are_reported_as_warning(self):
        data = self.simulate('data.csv', '--n', '100', '--seed', '2', '--include-hidden')
        result = self.invoke('detect', '--input', data, '--p-dim', '10')
        self.assertIn(result.exit_code, (cli.EXIT_SUPPORT, cli.EXIT_REJECT))
        self.assertIn('warning: ignoring hidden confounder columns', result.stderr)
        self.assertNotIn('warning', result.stdout)

    def test_missing_columns_is_input_error(self):
        data = self.path('data.csv')
        with open(data, 'w') as handle:
            handle.write('y,x1\n1,2\n3,4\n')
        result = self.invoke('detect', '--input', data)
        self.assertEqual(result.exit_code, cli.EXIT_FAILURE)

    def test_missing_file_is_input_error(self):
        result = self.invoke('detect', '--input', self.path('missing.csv'))
        self.assertEqual(result.exit_code, cli.EXIT_FAILURE)

    def test_bad_bandwidth_is_usage_error(self):
        data = self.simulate('data.csv', '--n', '50')
        result = self.invoke('detect', '--input', data, '--kernel', 'gaussian',
                             '--bandwidth', 'wide')
        self.assertEqual(result.exit_code, cli.EXIT_USAGE)


class TestBenchmark(CliTestCase):

    def test_detection_sweep_outputs(self):
        prefix = self.path('bench')
        result = self.invoke('benchmark', '--sweep', 'detection', '--rho', '0,2', '--n', '60',
                             '--p', '5', '--repeats', '2', '--out', prefix)
        self.assertEqual(result.exit_code, cli.EXIT_SUPPORT, result.output)

        with open(prefix + '.json') as handle:
            document = json.load(handle)
        self.assertEqual(set(document['detection_rate']), {'0.0', '2.0'})
        with open(prefix + '.csv') as handle:
            lines = handle.read().splitlines()
        self.assertEqual(lines[0], 'rho,lambda,repeat,seed,verdict,score,wall_ms')
        self.assertEqual(len(lines), 1 + 4)
        for path in (prefix + '.json', prefix + '.csv'):
            self.assertTrue(os.path.isfile(path + '.manifest.json'))

    def test_auc_sweep_needs_null_runs(self):
        result = self.invoke('benchmark', '--sweep', 'auc', '--rho', '1,2', '--n', '60',
                             '--p', '5', '--repeats', '2', '--out', self.path('bench'))
        self.assertEqual(result.exit_code, cli.EXIT_USAGE)

    def test_bad_list_is_usage_error(self):
        result = self.invoke('benchmark', '--sweep', 'detection', '--rho', 'a,b',
                             '--out', self.path('bench'))
        self.assertEqual(result.exit_code, cli.EXIT_USAGE)


class TestValidate(CliTestCase):

    def test_injected_fault_fails(self):
        result = self.invoke('validate', '--inject-lambda', '-1', '--instances', '1')
        self.assertEqual(result.exit_code, cli.EXIT_FAILURE)
        document = json.loads(result.stdout)
        self.assertFalse(document['passed'])
        self.assertIn('error', document)

    def test_agreement_covers_small_lambdas(self):
        result = self.invoke('validate', '--instances', '1', '--repeats', '100', '--n', '60')
        self.assertIn(result.exit_code, (cli.EXIT_SUPPORT, cli.EXIT_FAILURE))
        document = json.loads(result.stdout)
        self.assertEqual(document['agreement']['lambdas'], [1e-8, 1e-4, 1.0])
        self.assertTrue(document['checks']['converged'])
        self.assertTrue(document['checks']['max_coord_error'])
