import unittest

import sys
import itertools
from pathlib import Path
# Add the qubo_testgen directory to the path
sys.path.insert(0, str(Path(__file__).parent.parent))

import numpy as np

from qubo_testgen.errors import ConfigurationError, ShapeError
from qubo_testgen.qubo import (Qubo, Selection, Weights, assemble, build_count_objective,
                               build_metric_objective, build_proximity_constraint,
                               build_selection_qubo, energy)
from qubo_testgen.solvers import solve_exact

# Effectiveness of two candidate points with a hand-checked optimum
TWO_POINT = [0.31, 0.32]


class TestQubo(unittest.TestCase):

    def test_lower_keys_are_folded(self):
        q = Qubo(3, [0, 0, 0], {(2, 0): 1.5, (0, 2): 0.5})
        self.assertEqual(q.quadratic, {(0, 2): 2.0})

    def test_invalid_keys(self):
        with self.assertRaises(ShapeError):
            Qubo(2, None, {(1, 1): 1.0})
        with self.assertRaises(ShapeError):
            Qubo(2, None, {(0, 2): 1.0})

    def test_linear_shape(self):
        with self.assertRaises(ShapeError):
            Qubo(3, [1.0, 2.0])

    def test_non_finite(self):
        with self.assertRaises(ShapeError):
            Qubo(1, [float('nan')])

    def test_document_round_trip(self):
        q = Qubo(3, [1.0, -2.0, 0.5], {(0, 1): 3.0, (1, 2): -1.0}, offset=0.25)
        self.assertEqual(Qubo.from_document(q.to_document()), q)

    def test_malformed_document(self):
        with self.assertRaises(ShapeError):
            Qubo.from_document({'linear': [1.0]})
        with self.assertRaises(ShapeError):
            Qubo.from_document({'n': 2, 'linear': [0, 0], 'quadratic': [[0, 1]]})

    def test_all_zero_selection_gives_offset(self):
        q = Qubo(4, [1, 2, 3, 4], {(0, 3): 5.0}, offset=-1.5)
        self.assertEqual(energy(q, [0, 0, 0, 0]), -1.5)

    def test_energy_length_mismatch(self):
        with self.assertRaises(ShapeError):
            energy(Qubo(2), [1, 0, 1])


class TestSelection(unittest.TestCase):

    def test_indices(self):
        sel = Selection.from_indices(5, [4, 1])
        self.assertEqual(sel.indices, [1, 4])
        self.assertEqual(list(sel.bits), [0, 1, 0, 0, 1])

    def test_rejects_non_binary(self):
        with self.assertRaises(ShapeError):
            Selection([0, 2])

    def test_equality(self):
        self.assertEqual(Selection([1, 0]), Selection.from_indices(2, [0]))
        self.assertNotEqual(Selection([1, 0]), Selection([0, 1]))


class TestMetricObjective(unittest.TestCase):

    def test_two_point_coefficients(self):
        q = build_metric_objective(TWO_POINT, 0.63)
        np.testing.assert_allclose(q.linear, [-0.2945, -0.3008])
        self.assertEqual(set(q.quadratic), {(0, 1)})
        self.assertAlmostEqual(q.quadratic[(0, 1)], 0.1984)

    def test_zero_values(self):
        q = build_metric_objective([0.0, 0.0, 0.0], 0.0)
        self.assertEqual(q.max_abs_coefficient(), 0.0)

    def test_all_ones_identity(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            v = rng.uniform(0, 1, size=rng.integers(1, 12))
            q = build_metric_objective(v, float(v.sum()))
            self.assertAlmostEqual(energy(q, np.ones(len(v), dtype=int)), -v.sum() ** 2)

    def test_energy_is_shifted_square_on_random_selections(self):
        rng = np.random.default_rng(10)
        for _ in range(1000):
            n = int(rng.integers(1, 17))
            v = rng.uniform(0, 1, size=n)
            target = float(rng.uniform(0, n))
            q = build_metric_objective(v, target)
            X = rng.integers(0, 2, size=(100, n))
            np.testing.assert_allclose(q.energies(X) + target ** 2, (X @ v - target) ** 2,
                                       rtol=0, atol=1e-9)

    def test_matches_expanded_square(self):
        rng = np.random.default_rng(9)
        v = rng.uniform(0, 1, size=6)
        target = 1.3
        q = build_metric_objective(v, target)
        for bits in itertools.product((0, 1), repeat=6):
            x = np.array(bits)
            self.assertAlmostEqual(energy(q, x), (v @ x - target) ** 2 - target ** 2)

    def test_non_finite(self):
        with self.assertRaises(ShapeError):
            build_metric_objective([0.1, float('inf')], 0.0)


class TestCountObjective(unittest.TestCase):

    def test_single(self):
        self.assertEqual(energy(build_count_objective(1), [1]), 1.0)

    def test_three(self):
        q = build_count_objective(3)
        self.assertEqual(energy(q, [1, 1, 1]), 9.0)
        self.assertEqual(energy(q, [0, 0, 0]), 0.0)
        self.assertEqual(energy(q, [1, 0, 1]), 4.0)

    def test_empty(self):
        with self.assertRaises(ShapeError):
            build_count_objective(0)


class TestProximityConstraint(unittest.TestCase):

    def test_far_apart(self):
        self.assertEqual(build_proximity_constraint([0.0, 5.0], 2.0, 1000.0).quadratic, {})

    def test_close_pair(self):
        q = build_proximity_constraint([1.0, 2.5], 2.0, 1000.0)
        self.assertEqual(q.quadratic, {(0, 1): 1000.0})

    def test_exact_distance_not_penalised(self):
        q = build_proximity_constraint([0.0, 1.0, 2.0], 2.0, 1000.0)
        self.assertEqual(set(q.quadratic), {(0, 1), (1, 2)})

    def test_no_linear_terms(self):
        q = build_proximity_constraint([0.0, 0.1, 0.2], 2.0, 10.0)
        np.testing.assert_array_equal(q.linear, 0.0)


class TestAssemble(unittest.TestCase):

    def test_identity(self):
        q = build_metric_objective(TWO_POINT, 0.63)
        self.assertEqual(assemble([(1.0, q)]), q)

    def test_zero_weights(self):
        q = build_metric_objective(TWO_POINT, 0.63)
        total = assemble([(0.0, q), (0.0, build_count_objective(2))])
        self.assertEqual(total.max_abs_coefficient(), 0.0)

    def test_scaling_is_linear(self):
        ef = build_metric_objective(TWO_POINT, 0.63)
        scaled = assemble([(0.25, ef)])
        for bits in itertools.product((0, 1), repeat=2):
            self.assertAlmostEqual(4 * energy(scaled, bits), energy(ef, bits))

    def test_empty(self):
        with self.assertRaises(ShapeError):
            assemble([])

    def test_mismatch(self):
        with self.assertRaises(ShapeError):
            assemble([(1.0, Qubo(2)), (1.0, Qubo(3))])


class TestTwoPointEnergies(unittest.TestCase):

    def setUp(self):
        self.q = build_metric_objective(TWO_POINT, sum(TWO_POINT))

    def test_both_points(self):
        # -0.398 as printed; the coefficients above give -0.3969 exactly
        self.assertAlmostEqual(energy(self.q, [1, 1]), -0.3969)
        self.assertAlmostEqual(energy(self.q, [1, 1]), -0.398, delta=2e-3)

    def test_single_points(self):
        self.assertAlmostEqual(energy(self.q, [1, 0]), -0.294, delta=1e-3)
        self.assertAlmostEqual(energy(self.q, [0, 1]), -0.3, delta=1e-3)
        self.assertEqual(energy(self.q, [0, 0]), 0.0)

    def test_both_points_optimal(self):
        self.assertEqual(list(solve_exact(self.q).best().bits), [1, 1])


class TestWeights(unittest.TestCase):

    def test_defaults(self):
        w = Weights()
        self.assertEqual((w.w_ef, w.w_id, w.w_od, w.w_num), (0.25, 0.125, 0.125, 0.5))
        self.assertEqual(w.d_min, 2.0)

    def test_from_dict(self):
        self.assertEqual(Weights.from_dict({'w_ef': 1, 'd_min': 0.5}), Weights(w_ef=1.0, d_min=0.5))

    def test_unknown_key(self):
        with self.assertRaises(ConfigurationError):
            Weights.from_dict({'w_effectiveness': 1})

    def test_invalid_values(self):
        with self.assertRaises(ConfigurationError):
            Weights(w_ef=-1.0)
        with self.assertRaises(ConfigurationError):
            Weights(penalty=0.0)


class TestSelectionQubo(unittest.TestCase):

    def random_problem(self, rng, n):
        ef = rng.uniform(0, 1, n)
        id_ = rng.uniform(0, 1, n)
        od = rng.uniform(0, 1, n)
        times = np.sort(rng.choice(np.arange(0, 1001), size=n, replace=False)) * 0.01
        return ef, id_, od, times

    def test_length_mismatch(self):
        with self.assertRaises(ShapeError):
            build_selection_qubo([0.1, 0.2], [0.1], [0.1, 0.2], [0.0, 1.0], Weights())

    def test_empty(self):
        self.assertEqual(build_selection_qubo([], [], [], [], Weights()).n, 0)

    def test_all_zero_metrics_select_nothing(self):
        q = build_selection_qubo(np.zeros(10), np.zeros(10), np.zeros(10),
                                 np.arange(10) * 3.0, Weights())
        self.assertEqual(solve_exact(q).best().indices, [])

    def test_minimisers_respect_distance(self):
        rng = np.random.default_rng(12)
        weights = Weights(penalty=1000.0, d_min=2.0)
        for _ in range(200):
            n = int(rng.integers(2, 15))
            ef, id_, od, times = self.random_problem(rng, n)
            result = solve_exact(build_selection_qubo(ef, id_, od, times, weights))
            minimisers = [sel for sel, e, _ in result.samples if e <= result.lowest_energy + 1e-9]
            for sel in minimisers:
                for a, b in itertools.combinations(sel.indices, 2):
                    self.assertGreaterEqual(abs(times[a] - times[b]), weights.d_min - 1e-9)

    def test_small_penalty_is_reported(self):
        ef = np.full(4, 0.9)
        with self.assertLogs('qubo_testgen.qubo', level='WARNING'):
            build_selection_qubo(ef, ef, ef, [0.0, 0.5, 1.0, 1.5], Weights(penalty=0.01))

    def test_components_add_up(self):
        rng = np.random.default_rng(4)
        ef, id_, od, times = self.random_problem(rng, 6)
        w = Weights(w_ef=0.4, w_id=0.3, w_od=0.2, w_num=0.1, penalty=50.0)
        q = build_selection_qubo(ef, id_, od, times, w)
        parts = [build_metric_objective(ef, ef.sum()), build_metric_objective(id_, 0.0),
                 build_metric_objective(od, 0.0), build_count_objective(6),
                 build_proximity_constraint(times, w.d_min, w.penalty)]
        for bits in itertools.product((0, 1), repeat=6):
            expected = (0.4 * energy(parts[0], bits) + 0.3 * energy(parts[1], bits)
                        + 0.2 * energy(parts[2], bits) + 0.1 * energy(parts[3], bits)
                        + energy(parts[4], bits))
            self.assertAlmostEqual(energy(q, bits), expected)


if __name__ == '__main__':
    unittest.main()
