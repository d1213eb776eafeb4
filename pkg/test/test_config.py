import unittest

import sys
import os
import tempfile
from pathlib import Path
# Add the qubo_testgen directory to the path
sys.path.insert(0, str(Path(__file__).parent.parent))

import numpy as np
import yaml

from qubo_testgen.config import (CampaignConfig, RemoteConfig, campaign_config_from_dict,
                                 dump_campaign_config, heuristic_list, load_campaign_config,
                                 load_signal_spec, load_weights)
from qubo_testgen.errors import ConfigurationError
from qubo_testgen.fileio import (load_fault_manifest, load_metrics, load_mutation_plans,
                                 load_selections, load_suite, read_document,
                                 save_fault_manifest, save_metrics, save_mutation_plans,
                                 save_selections, save_suite, write_document)
from qubo_testgen.metrics import MetricSeries
from qubo_testgen.mutate import MutationPlan, MutationPoint
from qubo_testgen.qubo import Selection, Weights
from qubo_testgen.sut import PlantModel, generate_fault_corpus
from qubo_testgen.trajectory import SignalSpec, TestSuite, generate_suite

CAMPAIGN_YAML = """
signal:
  name: pedal
  r_min: 0
  r_max: 1
  max_rate: 1
  duration: 5
model:
  kind: first_order_tracker
  params: {tau: 0.25, gain: 2}
suite_size: 20
weights: {w_ef: 0.5, d_min: 1.0}
decomposition: {m: 4, n: 20, coverage: 0.25}
heuristics: [sa, evo, random]
anneal: {num_reads: 50, sweeps: 300}
evolutionary: {population: 16}
random: {draws: 400}
mutation: {window_radius: 25, cap: 30}
repeats: 3
epsilon: 0.05
seed: 42
"""


class TempDirTest(unittest.TestCase):

    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmpdir = self._tmp.name

    def tearDown(self):
        self._tmp.cleanup()

    def write(self, name, text):
        path = os.path.join(self.tmpdir, name)
        with open(path, 'w') as f:
            f.write(text)
        return path


class TestCampaignConfig(TempDirTest):

    def test_defaults(self):
        cfg = CampaignConfig()
        self.assertEqual(cfg.suite_size, 50)
        self.assertEqual(cfg.repeats, 10)
        self.assertEqual((cfg.decomposition.m, cfg.decomposition.n), (8, 40))
        self.assertEqual(cfg.heuristics, ('simulated_annealing', 'random'))
        self.assertEqual(cfg.epsilon, 0.1)

    def test_load_yaml(self):
        cfg = load_campaign_config(self.write('campaign.yaml', CAMPAIGN_YAML))
        self.assertEqual(cfg.signal.duration, 5.0)
        self.assertEqual(cfg.model.params['tau'], 0.25)
        self.assertEqual(cfg.heuristics, ('simulated_annealing', 'evolutionary', 'random'))
        self.assertEqual(cfg.weights.w_ef, 0.5)
        self.assertEqual(cfg.decomposition.coverage, 0.25)
        self.assertEqual(cfg.anneal.sweeps, 300)
        self.assertEqual((cfg.population, cfg.generations, cfg.draws), (16, 100, 400))
        self.assertEqual(cfg.mutation.window_radius, 25)
        self.assertEqual(cfg.mutation.d_min, 1.0)
        self.assertEqual((cfg.repeats, cfg.seed, cfg.epsilon), (3, 42, 0.05))

    def test_dump_reloads(self):
        cfg = load_campaign_config(self.write('campaign.yaml', CAMPAIGN_YAML))
        self.assertEqual(campaign_config_from_dict(yaml.safe_load(dump_campaign_config(cfg))), cfg)

    def test_empty_document(self):
        self.assertEqual(load_campaign_config(self.write('empty.yaml', '')), CampaignConfig())

    def test_unknown_top_level_key(self):
        with self.assertRaises(ConfigurationError) as cm:
            campaign_config_from_dict({'sweeps': 10})
        self.assertIn('sweeps', str(cm.exception))

    def test_unknown_section_key(self):
        with self.assertRaises(ConfigurationError):
            campaign_config_from_dict({'anneal': {'temperature': 1.0}})

    def test_bad_value(self):
        with self.assertRaises(ConfigurationError):
            campaign_config_from_dict({'repeats': 'many'})

    def test_invalid_yaml(self):
        with self.assertRaises(ConfigurationError):
            load_campaign_config(self.write('bad.yaml', 'signal: [unclosed'))

    def test_missing_file(self):
        with self.assertRaises(ConfigurationError):
            load_campaign_config(os.path.join(self.tmpdir, 'nowhere.yaml'))

    def test_invariants(self):
        with self.assertRaises(ConfigurationError):
            CampaignConfig(heuristics=())
        with self.assertRaises(ConfigurationError):
            CampaignConfig(heuristics=('sa', 'simulated_annealing'))
        with self.assertRaises(ConfigurationError):
            CampaignConfig(repeats=0)
        with self.assertRaises(ConfigurationError):
            CampaignConfig(heuristics=('remote',))

    def test_remote_with_endpoint(self):
        cfg = CampaignConfig(heuristics=('remote',), remote=RemoteConfig(endpoint='http://localhost:1/sample'))
        self.assertEqual(cfg.heuristics, ('quantum_remote',))

    def test_heuristic_list(self):
        self.assertEqual(heuristic_list('sa, random'), ('simulated_annealing', 'random'))
        self.assertEqual(heuristic_list(['evo']), ('evolutionary',))


class TestSmallFiles(TempDirTest):

    def test_weights(self):
        path = self.write('weights.yaml', 'w_ef: 1.0\nw_num: 0.1\npenalty: 500\n')
        self.assertEqual(load_weights(path), Weights(w_ef=1.0, w_num=0.1, penalty=500.0))

    def test_weights_unknown_key(self):
        with self.assertRaises(ConfigurationError):
            load_weights(self.write('weights.yaml', 'w_x: 1\n'))

    def test_signal_spec(self):
        flat = self.write('signal.yaml', 'name: s\nr_min: 0\nr_max: 2\nmax_rate: 1\nduration: 1\n')
        nested = self.write('nested.yaml', 'signal: {name: s, r_min: 0, r_max: 2, max_rate: 1, duration: 1}\n')
        self.assertEqual(load_signal_spec(flat), load_signal_spec(nested))
        self.assertEqual(load_signal_spec(flat).r_max, 2.0)


class TestDocuments(TempDirTest):

    def path(self, name):
        return os.path.join(self.tmpdir, name)

    def test_format_mismatch(self):
        write_document(self.path('doc.json'), 'metrics', {'cases': []})
        with self.assertRaises(ConfigurationError) as cm:
            read_document(self.path('doc.json'), 'test-suite')
        self.assertIn("'metrics'", str(cm.exception))

    def test_newer_version(self):
        with open(self.path('doc.json'), 'w') as f:
            f.write('{"format": "selection", "version": 99, "cases": []}')
        with self.assertRaises(ConfigurationError):
            read_document(self.path('doc.json'), 'selection')

    def test_not_json(self):
        with open(self.path('doc.json'), 'w') as f:
            f.write('case-000,0.1\n')
        with self.assertRaises(ConfigurationError):
            load_suite(self.path('doc.json'))

    def test_suite(self):
        spec = SignalSpec('pedal', 0.0, 1.0, 1.0, 1.0)
        suite = generate_suite(spec, 3, n_points=3, rng=1)
        child = suite[0].with_input(suite[1].input, case_id='case-000-m', notes=['pulled'])
        suite = TestSuite(list(suite) + [child])
        save_suite(suite, self.path('suite.json'))
        self.assertEqual(load_suite(self.path('suite.json')), suite)

    def test_metrics(self):
        series = [MetricSeries('a', [0.1, 0.2], [0.0, 1.0], [0.5, 0.5])]
        save_metrics(series, self.path('metrics.json'), SignalSpec('fuel', 0.0, 5.0, 5.0, 0.01))
        loaded = load_metrics(self.path('metrics.json'))
        self.assertEqual(loaded[0].case_id, 'a')
        np.testing.assert_array_equal(loaded[0].input_diversity, [0.0, 1.0])

    def test_selections(self):
        selections = {'a': Selection.from_indices(10, [2, 7]), 'b': Selection(np.zeros(10))}
        save_selections(selections, self.path('sel.json'), heuristic='random')
        self.assertEqual(load_selections(self.path('sel.json')), selections)

    def test_mutation_plans(self):
        plans = [MutationPlan('a', (MutationPoint(4, 0.5, 0.9, 0.6),), 10)]
        save_mutation_plans(plans, self.path('plans.json'), notes={'a': ['pulled']})
        self.assertEqual(load_mutation_plans(self.path('plans.json')), plans)
        doc = read_document(self.path('plans.json'), 'mutation-plans')
        self.assertEqual(doc['plans'][0]['adjustments'], ['pulled'])

    def test_fault_manifest(self):
        model = PlantModel('engine_map')
        faults = generate_fault_corpus(model, SignalSpec('pedal', 0.0, 1.0, 1.0, 1.0), 2, seed=3)
        save_fault_manifest(model, faults, self.path('faults.json'), seed=3)
        self.assertEqual(load_fault_manifest(self.path('faults.json')), (model, faults))


if __name__ == '__main__':
    unittest.main()
