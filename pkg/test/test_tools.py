import unittest

import sys
import io
import os
import tempfile
from contextlib import redirect_stderr, redirect_stdout
from pathlib import Path
# Add the qubo_testgen directory to the path
sys.path.insert(0, str(Path(__file__).parent.parent))

from qubo_testgen.errors import ConfigurationError
from qubo_testgen.fileio import load_metrics, load_selections, load_suite, read_document
from qubo_testgen.tools.qtestgen import build_parser, main, parse_range

SIGNAL_YAML = """signal:
  name: pedal
  r_min: 0.0
  r_max: 1.0
  max_rate: 1.0
  duration: 2.0
"""

CAMPAIGN_YAML = SIGNAL_YAML + """suite_size: 4
control_points: 4
diversity_radius: 10
weights: {d_min: 0.5}
decomposition: {m: 2, n: 8, coverage: 0.1}
heuristics: [random]
random: {draws: 20}
mutation: {window_radius: 10, smoothing_radius: 20, cap: 8}
repeats: 1
faults_per_operator: 2
seed: 5
"""


class TestParseRange(unittest.TestCase):

    def test_stepped(self):
        self.assertEqual(parse_range('5..20:5'), [5, 10, 15, 20])

    def test_unit_step(self):
        self.assertEqual(parse_range('1..4'), [1, 2, 3, 4])

    def test_list(self):
        self.assertEqual(parse_range('5,10, 40'), [5, 10, 40])

    def test_invalid(self):
        with self.assertRaises(ConfigurationError):
            parse_range('five..ten')


class TestCommandLine(unittest.TestCase):

    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmpdir = self._tmp.name
        self.spec = self.path('pedal.yaml')
        with open(self.spec, 'w') as f:
            f.write(SIGNAL_YAML)

    def tearDown(self):
        self._tmp.cleanup()

    def path(self, name):
        return os.path.join(self.tmpdir, name)

    def run_main(self, *argv):
        out = io.StringIO()
        with redirect_stdout(out):
            main(list(argv))
        return out.getvalue()

    def test_parser_requires_command(self):
        with redirect_stderr(io.StringIO()), self.assertRaises(SystemExit):
            build_parser().parse_args([])

    def test_generate(self):
        output = self.run_main('generate', '--spec', self.spec, '--size', '3', '--points', '4',
                               '--seed', '1', '--out', self.path('suite.json'))
        self.assertIn('3 cases of 201 samples', output)
        self.assertEqual(len(load_suite(self.path('suite.json'))), 3)

    def test_pipeline(self):
        self.run_main('generate', '--spec', self.spec, '--size', '4', '--points', '4',
                      '--seed', '2', '--out', self.path('suite.json'))
        self.run_main('metrics', '--suite', self.path('suite.json'), '--model', 'engine_map',
                      '--radius', '10', '--csv-dir', self.path('csv'), '--out', self.path('metrics.json'))
        self.assertEqual(len(load_metrics(self.path('metrics.json'))), 4)
        self.assertTrue(os.path.exists(self.path(os.path.join('csv', 'case-000.csv'))))

        with open(self.path('weights.yaml'), 'w') as f:
            f.write('d_min: 0.5\n')
        self.run_main('select', '--metrics', self.path('metrics.json'), '--heuristic', 'sa',
                      '--m', '2', '--n', '8', '--coverage', '0.1', '--reads', '10', '--sweeps', '20',
                      '--weights', self.path('weights.yaml'), '--seed', '1',
                      '--plans', self.path('plans.json'), '--out', self.path('selection.json'))
        selections = load_selections(self.path('selection.json'))
        self.assertEqual(sorted(selections), ['case-000', 'case-001', 'case-002', 'case-003'])
        self.assertTrue(all(len(sel) == 201 for sel in selections.values()))
        doc = read_document(self.path('selection.json'), 'selection')
        self.assertEqual(doc['heuristic'], 'sa')

        output = self.run_main('mutate', '--suite', self.path('suite.json'),
                               '--selection', self.path('selection.json'),
                               '--metrics', self.path('metrics.json'),
                               '--weights', self.path('weights.yaml'),
                               '--window-radius', '10', '--smoothing-radius', '20',
                               '--plans', self.path('mutation-plans.json'),
                               '--out', self.path('mutated.json'))
        mutated = load_suite(self.path('mutated.json'))
        self.assertGreaterEqual(len(mutated), 4)
        self.assertIn('Wrote 4 seed', output)
        self.assertTrue(all(case.parent in (None, 'case-000', 'case-001', 'case-002', 'case-003')
                            for case in mutated))

    def test_campaign(self):
        config = self.path('campaign.yaml')
        with open(config, 'w') as f:
            f.write(CAMPAIGN_YAML)
        output = self.run_main('campaign', '--config', config, '--out', self.path('report'))
        self.assertIn('random', output)
        with open(self.path(os.path.join('report', 'summary.txt'))) as f:
            self.assertEqual(f.read(), output.split('Report written')[0])

    def test_embed_study(self):
        output = self.run_main('embed-study', '--sizes', '4..16:4', '--out', self.path('qubits.csv'))
        self.assertIn('quadratic', output)
        with open(self.path('qubits.csv')) as f:
            lines = f.read().splitlines()
        self.assertEqual(len(lines), 5)
        self.assertTrue(lines[1].startswith('4,8,2'))

    def test_error_exit(self):
        err = io.StringIO()
        with redirect_stderr(err), self.assertRaises(SystemExit) as cm:
            self.run_main('generate', '--spec', self.path('missing.yaml'), '--out', self.path('x.json'))
        self.assertEqual(cm.exception.code, 1)
        self.assertIn('Error:', err.getvalue())


if __name__ == '__main__':
    unittest.main()
