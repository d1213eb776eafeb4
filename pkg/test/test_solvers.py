import unittest

import sys
import itertools
from pathlib import Path
# Add the qubo_testgen directory to the path
sys.path.insert(0, str(Path(__file__).parent.parent))

import numpy as np

from qubo_testgen.errors import CapacityError, ConfigurationError
from qubo_testgen.qubo import Qubo, Selection, build_metric_objective
from qubo_testgen.solvers import (AnnealParams, EvolutionarySampler, ExactSolver, RandomSampler,
                                  SampleSet, SimulatedAnnealingSampler, canonical_heuristic,
                                  make_sampler, solve_evolutionary, solve_exact, solve_random,
                                  solve_sa)

TWO_POINT = build_metric_objective([0.31, 0.32], 0.63)


def random_qubo(rng, n):
    return Qubo(n, rng.uniform(-1, 1, n), np.triu(rng.uniform(-1, 1, (n, n)), k=1))


def brute_force_minimum(q):
    return min(float(q.energies(np.array(bits))[0])
               for bits in itertools.product((0, 1), repeat=q.n))


class TestSampleSet(unittest.TestCase):

    def test_sorted_by_energy_then_bits(self):
        q = Qubo(2)
        result = SampleSet.from_array(q, [[1, 1], [0, 1], [1, 0], [0, 1]], 'test')
        self.assertEqual([list(s.bits) for s, _, _ in result.samples], [[0, 1], [1, 0], [1, 1]])
        self.assertEqual(result.total_reads, 4)
        self.assertEqual(result.samples[0][2], 2)

    def test_empty(self):
        with self.assertRaises(ConfigurationError):
            SampleSet([], 'test')


class TestExact(unittest.TestCase):

    def test_two_point_problem(self):
        result = solve_exact(TWO_POINT)
        self.assertEqual(list(result.best().bits), [1, 1])
        self.assertAlmostEqual(result.lowest_energy, -0.398, delta=2e-3)

    def test_zero_qubo_tie_break(self):
        result = solve_exact(Qubo(3))
        self.assertEqual(list(result.best().bits), [0, 0, 0])
        self.assertEqual(len(result), 8)
        self.assertTrue(all(e == 0.0 for _, e, _ in result.samples))

    def test_matches_independent_enumeration(self):
        rng = np.random.default_rng(5)
        for _ in range(5):
            q = random_qubo(rng, 12)
            self.assertAlmostEqual(solve_exact(q).lowest_energy, brute_force_minimum(q))

    def test_frontier(self):
        result = solve_exact(random_qubo(np.random.default_rng(0), 12), frontier=10)
        self.assertEqual(len(result), 10)
        energies = [e for _, e, _ in result.samples]
        self.assertEqual(energies, sorted(energies))

    def test_capacity(self):
        with self.assertRaises(CapacityError):
            solve_exact(Qubo(25))

    def test_empty_problem(self):
        result = solve_exact(Qubo(0, offset=2.0))
        self.assertEqual(result.lowest_energy, 2.0)
        self.assertEqual(len(result.best()), 0)


class TestSimulatedAnnealing(unittest.TestCase):

    def test_two_point_problem(self):
        result = solve_sa(TWO_POINT, AnnealParams(num_reads=100, sweeps=200, seed=1))
        self.assertEqual(list(result.best().bits), [1, 1])
        self.assertGreaterEqual(result.samples[0][2], 99)

    def test_single_negative_term(self):
        q = Qubo(5, [0.5, 0.5, -1.0, 0.5, 0.5])
        result = solve_sa(q, AnnealParams(num_reads=20, sweeps=50, seed=2))
        self.assertEqual(result.best().indices, [2])

    def test_finds_optimum_on_random_instances(self):
        rng = np.random.default_rng(16)
        params = AnnealParams(num_reads=1000, sweeps=200, seed=3)
        hits = 0
        for _ in range(100):
            q = random_qubo(rng, 16)
            optimum = solve_exact(q).lowest_energy
            found = solve_sa(q, params).lowest_energy
            self.assertGreaterEqual(found, optimum - 1e-9)
            if abs(found - optimum) < 1e-9:
                hits += 1
        self.assertGreaterEqual(hits, 90)

    def test_no_sampler_beats_exact_minimum(self):
        rng = np.random.default_rng(17)
        for k in range(20):
            q = random_qubo(rng, 12)
            optimum = solve_exact(q).lowest_energy
            for result in (solve_sa(q, AnnealParams(num_reads=50, sweeps=50, seed=k)),
                           solve_random(q, draws=50, rng=k),
                           solve_evolutionary(q, pop=20, generations=20, rng=k)):
                with self.subTest(instance=k, solver=result.solver_name):
                    self.assertGreaterEqual(min(e for _, e, _ in result.samples), optimum - 1e-9)

    def test_seeded_runs_repeat(self):
        q = random_qubo(np.random.default_rng(1), 10)
        params = AnnealParams(num_reads=10, sweeps=20)
        a = solve_sa(q, params, seed=[4, 2])
        b = solve_sa(q, params, seed=[4, 2])
        self.assertEqual([(s, e, c) for s, e, c in a.samples], [(s, e, c) for s, e, c in b.samples])

    def test_invalid_schedule(self):
        with self.assertRaises(ConfigurationError):
            AnnealParams(initial_temperature=0.1, final_temperature=1.0)
        with self.assertRaises(ConfigurationError):
            AnnealParams(num_reads=0)


class TestEvolutionary(unittest.TestCase):

    def test_two_point_problem(self):
        self.assertEqual(list(solve_evolutionary(TWO_POINT, rng=0).best().bits), [1, 1])

    def test_zero_qubo(self):
        self.assertEqual(solve_evolutionary(Qubo(4), rng=0).lowest_energy, 0.0)

    def test_separable_landscape(self):
        q = Qubo(8, -np.linspace(0.1, 1.0, 8))
        self.assertEqual(solve_evolutionary(q, pop=30, generations=80, rng=1).best().indices,
                         list(range(8)))

    def test_population_too_small(self):
        with self.assertRaises(ConfigurationError):
            solve_evolutionary(TWO_POINT, pop=1)


class TestRandom(unittest.TestCase):

    def test_single_variable(self):
        result = solve_random(Qubo(1, [1.0]), draws=100, rng=0)
        self.assertEqual(result.total_reads, 100)
        self.assertGreaterEqual(len(result), 1)

    def test_best_of_draws(self):
        q = random_qubo(np.random.default_rng(2), 3)
        result = solve_random(q, draws=200, rng=0)
        self.assertAlmostEqual(result.lowest_energy, brute_force_minimum(q))

    def test_invalid_draws(self):
        with self.assertRaises(ConfigurationError):
            solve_random(TWO_POINT, draws=0)


class TestSamplers(unittest.TestCase):

    def test_interchangeable(self):
        for sampler in (ExactSolver(), SimulatedAnnealingSampler(AnnealParams(20, 50, seed=0)),
                        EvolutionarySampler(seed=0), RandomSampler(draws=50, seed=0)):
            with self.subTest(sampler=sampler):
                result = sampler.sample(TWO_POINT)
                self.assertEqual(result.solver_name, sampler.name)
                self.assertEqual(result.best(), Selection([1, 1]))

    def test_aliases(self):
        self.assertEqual(canonical_heuristic('sa'), 'simulated_annealing')
        self.assertEqual(canonical_heuristic('remote'), 'quantum_remote')
        with self.assertRaises(ConfigurationError):
            canonical_heuristic('tabu')

    def test_make_sampler(self):
        self.assertIsInstance(make_sampler('exact'), ExactSolver)
        sa = make_sampler('sa', seed=7, anneal=AnnealParams(num_reads=5, sweeps=10))
        self.assertEqual(sa.params.seed, 7)
        self.assertEqual(sa.params.num_reads, 5)
        self.assertEqual(make_sampler('random', draws=3).draws, 3)
        self.assertEqual(make_sampler('evo', pop=6).pop, 6)

    def test_remote_needs_endpoint(self):
        with self.assertRaises(ConfigurationError):
            make_sampler('remote')


if __name__ == '__main__':
    unittest.main()
