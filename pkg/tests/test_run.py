import json
import math
import os
import tempfile
import unittest

import numpy.testing as npt

from src import __version__
from src.ontology import report
from src.run import EXIT_FAIL, EXIT_PASS, EXIT_USAGE, ExperimentConfig, main, run, validate


def _config(subcommand, **parameters):
    return ExperimentConfig(subcommand=subcommand, parameters=parameters, seed=42)


class TestValidate(unittest.TestCase):
    """Validazione pura della configurazione"""

    def test_missing_required_parameter(self):
        errors = validate(_config('cogwheel'))
        self.assertEqual(len(errors), 1)
        self.assertTrue(errors[0].startswith('n:'))

    def test_spectrum_needs_n_or_universe(self):
        errors = validate(_config('spectrum'))
        self.assertTrue(any(error.startswith('n:') for error in errors))
        self.assertTrue(any(error.startswith('n:') for error in validate(_config('spectrum', n=3, universe='u.json'))))

    def test_grid_below_minimum(self):
        errors = validate(_config('bell', a=0.0, b=22.5, aprime=45.0, bprime=67.5, grid=4))
        self.assertEqual(len(errors), 1)
        self.assertTrue(errors[0].startswith('grid:'))

    def test_valid_config(self):
        self.assertEqual(validate(_config('bell', a=0.0, b=22.5, aprime=45.0, bprime=67.5)), [])
        self.assertEqual(validate(_config('conserve')), [])

    def test_collects_every_error(self):
        config = ExperimentConfig(subcommand='bell', parameters={'a': 'zero', 'grid': 2, 'colour': 1},
                                  seed=-1, output_format='xml')
        errors = validate(config)
        keys = {error.split(':')[0] for error in errors}
        self.assertTrue({'seed', 'output_format', 'colour', 'a', 'b', 'aprime', 'bprime', 'grid'} <= keys)

    def test_unknown_subcommand(self):
        self.assertTrue(validate(_config('teleport'))[0].startswith('subcommand:'))

    def test_cross_field_checks(self):
        self.assertTrue(validate(_config('cogwheel', n=3, index=3))[0].startswith('index:'))
        self.assertTrue(validate(_config('beables', universe='random', size=6, ops='xz'))[0].startswith('size:'))

    def test_size_limits(self):
        self.assertTrue(validate(_config('lightcone', sites=1))[0].startswith('sites:'))
        self.assertEqual(validate(_config('lightcone', sites=2)), [])
        self.assertEqual(validate(_config('lightcone', sites=12, max_dt=1)), [])
        self.assertTrue(validate(_config('lightcone', sites=13))[0].startswith('sites:'))
        self.assertTrue(validate(_config('beables', universe='bitshift', size=12, ops='xz'))[0].startswith('size:'))
        self.assertEqual(validate(_config('beables', universe='bitshift', size=7, ops='xz')), [])
        self.assertTrue(validate(_config('beables', universe='random', size=4096))[0].startswith('size:'))

    def test_validate_has_no_side_effects(self):
        config = _config('conserve', dim=8)
        validate(config)
        self.assertEqual(config.parameters, {'dim': 8})


class TestRun(unittest.TestCase):
    """Esecuzione degli esperimenti"""

    def test_spectrum_of_twelve_state_cogwheel(self):
        exit_code, outcome = run(_config('spectrum', n=12, dt=1.0, branch='zero2pi'))
        self.assertEqual(exit_code, EXIT_PASS)
        artifact = outcome['artifact']
        npt.assert_allclose(artifact['eigenphases'], [2 * math.pi * k / 12 for k in range(12)], atol=1e-9)
        self.assertEqual(artifact['verdict'], 'pass')

    def test_artifact_field_order(self):
        _, outcome = run(_config('cogwheel', n=5, steps=7, index=2))
        keys = list(outcome['artifact'])
        self.assertEqual(keys[:4], ['tool_version', 'subcommand', 'config_echo', 'seed'])
        self.assertEqual(keys[-2:], ['verdict', 'meta'])
        self.assertEqual(outcome['artifact']['tool_version'], __version__)
        self.assertEqual(outcome['artifact']['expected_index'], 4)
        self.assertEqual(outcome['artifact']['config_echo']['parameters'], {'n': 5, 'steps': 7, 'index': 2})

    def test_conserve(self):
        exit_code, outcome = run(_config('conserve', dim=32, steps=100, trials=50, negative_trials=50))
        self.assertEqual(exit_code, EXIT_PASS)
        self.assertLessEqual(outcome['artifact']['deviation'], 1e-12)
        self.assertIn('conservation_time', outcome['artifact']['meta'])
        self.assertNotIn('execution_time', outcome['artifact']['conservation'])

    def test_beables_verdicts(self):
        exit_code, _ = run(_config('beables', universe='bitshift', size=3, ops='diagonal'))
        self.assertEqual(exit_code, EXIT_PASS)
        exit_code, outcome = run(_config('beables', universe='bitshift', size=3, ops='xz'))
        self.assertEqual(exit_code, EXIT_FAIL)
        self.assertEqual(outcome['artifact']['beable_check']['times'], [0, 0])

    def test_lightcone(self):
        exit_code, outcome = run(_config('lightcone', sites=3))
        self.assertEqual(exit_code, EXIT_PASS)
        self.assertEqual(outcome['artifact']['max_dt'], 3)
        self.assertEqual(len(outcome['table']), outcome['artifact']['meta']['rows'])

    def test_lightcone_two_sites_runs(self):
        exit_code, outcome = run(_config('lightcone', sites=2, max_dt=1))
        self.assertEqual(exit_code, EXIT_PASS)
        self.assertEqual(outcome['artifact']['meta']['rows'], 4 ** 2 * 3)

    def test_bell_quadrature(self):
        exit_code, outcome = run(_config('bell', a=0.0, b=22.5, aprime=45.0, bprime=67.5, method='quad', grid=4096))
        self.assertEqual(exit_code, EXIT_PASS)
        artifact = outcome['artifact']
        self.assertEqual(list(artifact['E']), ['ab', 'abp', 'apb', 'apbp'])
        for key in ('S', 'std_error', 'quantum_reference_S', 'classical_bound', 'tsirelson_bound'):
            self.assertIn(key, artifact)

    def test_bell_monte_carlo(self):
        exit_code, outcome = run(_config('bell', a=0.0, b=22.5, aprime=45.0, bprime=67.5, method='mc', samples=200000))
        self.assertEqual(exit_code, EXIT_PASS)
        self.assertIn('quadrature_reference_S', outcome['artifact'])

    def test_invalid_config_is_usage_error(self):
        exit_code, outcome = run(_config('bell', a=0.0))
        self.assertEqual(exit_code, EXIT_USAGE)
        self.assertIsNone(outcome)

    def test_reproducible_json(self):
        config = _config('bell', a=0.0, b=22.5, aprime=45.0, bprime=67.5, method='mc', samples=50000)
        _, first = run(config)
        _, second = run(config)
        self.assertEqual(report.render_json(report.stable_body(first['artifact'])),
                         report.render_json(report.stable_body(second['artifact'])))


class TestMain(unittest.TestCase):
    """Interfaccia a riga di comando"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def _path(self, name):
        return os.path.join(self.tmp.name, name)

    def _read_json(self, path):
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)

    def test_json_is_byte_stable_without_meta(self):
        # stesso percorso: output_path fa parte di config_echo
        output = self._path('conserve.json')
        outputs = []
        for _ in range(2):
            exit_code = main(['conserve', '--dim', '16', '--steps', '20', '--trials', '25',
                              '--seed', '7', '--output', output])
            self.assertEqual(exit_code, EXIT_PASS)
            artifact = self._read_json(output)
            outputs.append(json.dumps(report.stable_body(artifact), indent=2))
        self.assertEqual(outputs[0], outputs[1])

    def test_config_file_with_flag_override(self):
        config_path = self._path('experiment.json')
        with open(config_path, 'w', encoding='utf-8') as f:
            json.dump({'subcommand': 'cogwheel', 'parameters': {'n': 4, 'steps': 1}, 'seed': 3}, f)
        output = self._path('out.json')
        exit_code = main(['--config', config_path, 'cogwheel', '--steps', '2', '--output', output])
        self.assertEqual(exit_code, EXIT_PASS)
        artifact = self._read_json(output)
        self.assertEqual(artifact['config_echo']['parameters'], {'n': 4, 'steps': 2, 'index': 0})
        self.assertEqual(artifact['seed'], 3)

    def test_config_file_alone(self):
        config_path = self._path('experiment.json')
        with open(config_path, 'w', encoding='utf-8') as f:
            json.dump({'subcommand': 'lightcone', 'parameters': {'sites': 3, 'max_dt': 2},
                       'output_format': 'csv', 'output_path': self._path('cone.csv')}, f)
        self.assertEqual(main(['--config', config_path]), EXIT_PASS)
        with open(self._path('cone.csv'), 'r', encoding='utf-8') as f:
            lines = f.read().splitlines()
        comments = [line for line in lines if line.startswith('#')]
        self.assertEqual(len(comments), 6)
        self.assertEqual(lines[len(comments)], 'x,x_prime,t,t_prime,probe_a,probe_b,separation,commutator_norm,directed')

    def test_unknown_config_key(self):
        config_path = self._path('bad.json')
        with open(config_path, 'w', encoding='utf-8') as f:
            json.dump({'subcommand': 'cogwheel', 'parameters': {'n': 3}, 'colour': 'red'}, f)
        self.assertEqual(main(['--config', config_path]), EXIT_USAGE)

    def test_usage_errors(self):
        self.assertEqual(main(['spectrum', '--branch', 'sideways']), EXIT_USAGE)
        self.assertEqual(main(['cogwheel', '--steps', '3']), EXIT_USAGE)
        self.assertEqual(main(['bell', '--a', '0', '--b', '0', '--aprime', '0', '--bprime', '0', '--grid', '4']), EXIT_USAGE)

    def test_csv_key_value_output(self):
        output = self._path('cog.csv')
        self.assertEqual(main(['cogwheel', '--n', '3', '--steps', '1', '--out', 'csv', '--output', output]), EXIT_PASS)
        with open(output, 'r', encoding='utf-8') as f:
            lines = f.read().splitlines()
        self.assertIn('key,value', lines)
        self.assertIn('expected_index,1', lines)
        self.assertIn('final_class.kind,ontological', lines)


if __name__ == '__main__':
    unittest.main()
