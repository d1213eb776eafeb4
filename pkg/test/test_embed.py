import unittest

import sys
import os
import tempfile
from pathlib import Path
# Add the qubo_testgen directory to the path
sys.path.insert(0, str(Path(__file__).parent.parent))

from qubo_testgen.embed import (Embedding, build_chimera, chimera_index, chimera_size_for,
                                complete_graph_qubo, embed_clique, embedding_stats,
                                embedding_study, export_study_csv, growth_fit,
                                verify_embedding)
from qubo_testgen.errors import CapacityError


class TestChimera(unittest.TestCase):

    def test_single_cell(self):
        topo = build_chimera(1)
        self.assertEqual(topo.nodes, 8)
        self.assertEqual(len(topo.adjacency), 16)

    def test_two_by_two(self):
        topo = build_chimera(2)
        self.assertEqual(topo.nodes, 32)
        self.assertEqual(len(topo.adjacency), 4 * 16 + 16)
        # every qubit keeps its 4 in-cell couplers and gains one to a neighbouring cell
        self.assertTrue(all(degree == 5 for _, degree in topo.graph.degree()))

    def test_inter_cell_direction(self):
        topo = build_chimera(2)
        self.assertTrue(topo.graph.has_edge(chimera_index(2, 0, 0, 0, 1), chimera_index(2, 1, 0, 0, 1)))
        self.assertTrue(topo.graph.has_edge(chimera_index(2, 0, 0, 1, 2), chimera_index(2, 0, 1, 1, 2)))
        self.assertFalse(topo.graph.has_edge(chimera_index(2, 0, 0, 0, 1), chimera_index(2, 0, 1, 0, 1)))

    def test_index_layout(self):
        self.assertEqual(chimera_index(2, 0, 1, 1, 2), 14)
        self.assertEqual(chimera_index(3, 2, 1, 0, 3), 8 * 7 + 3)

    def test_indices_match_graph_coordinates(self):
        topo = build_chimera(3)
        for node, data in topo.graph.nodes(data=True):
            self.assertEqual(chimera_index(3, *data['chimera_index']), node)

    def test_invalid_size(self):
        with self.assertRaises(CapacityError):
            build_chimera(0)


class TestCliqueEmbedding(unittest.TestCase):

    def test_four_variables_in_one_cell(self):
        e = embed_clique(4, build_chimera(1))
        qubits, longest, _ = embedding_stats(e)
        self.assertEqual(qubits, 8)
        self.assertEqual(longest, 2)

    def test_twenty_variables(self):
        topo = build_chimera(chimera_size_for(20))
        e = embed_clique(20, topo)
        self.assertEqual(embedding_stats(e), (120, 6, 6.0))
        self.assertTrue(verify_embedding(e, complete_graph_qubo(20), topo).ok)

    def test_forty_variables(self):
        topo = build_chimera(10)
        e = embed_clique(40, topo)
        qubits, longest, _ = embedding_stats(e)
        self.assertEqual((qubits, longest), (440, 11))
        self.assertGreater(qubits / 120, 2)
        self.assertTrue(verify_embedding(e, complete_graph_qubo(40), topo).ok)

    def test_valid_for_ragged_sizes(self):
        for n in (1, 3, 5, 9, 14):
            with self.subTest(n=n):
                topo = build_chimera(chimera_size_for(n))
                self.assertTrue(verify_embedding(embed_clique(n, topo), complete_graph_qubo(n), topo).ok)

    def test_larger_grid_is_fine(self):
        topo = build_chimera(4)
        self.assertTrue(verify_embedding(embed_clique(6, topo), complete_graph_qubo(6), topo).ok)

    def test_capacity(self):
        with self.assertRaises(CapacityError) as cm:
            embed_clique(20, build_chimera(4))
        self.assertIn('m >= 5', str(cm.exception))


class TestStats(unittest.TestCase):

    def test_singletons(self):
        self.assertEqual(embedding_stats(Embedding({0: {3}, 1: {5}, 2: {6}})), (3, 1, 1.0))

    def test_two_chains_of_two(self):
        e = Embedding({0: {0, 4}, 1: {5}, 2: {6}, 3: {1, 7}})
        self.assertEqual(embedding_stats(e), (6, 2, 1.5))

    def test_empty(self):
        self.assertEqual(embedding_stats(Embedding({})), (0, 0, 0.0))


class TestVerify(unittest.TestCase):

    def setUp(self):
        self.topo = build_chimera(2)
        self.embedding = embed_clique(8, self.topo)
        self.logical = complete_graph_qubo(8)

    def with_chain(self, v, chain):
        chains = dict(self.embedding.chains)
        chains[v] = frozenset(chain)
        return Embedding(chains)

    def test_valid(self):
        self.assertEqual(verify_embedding(self.embedding, self.logical, self.topo).violation, None)

    def test_disconnected_chain(self):
        chain = set(self.embedding.chains[4])
        chain.discard(chimera_index(2, 1, 1, 1, 0))
        verdict = verify_embedding(self.with_chain(4, chain), self.logical, self.topo)
        self.assertFalse(verdict.ok)
        self.assertEqual(verdict.violation, 'disconnected-chain')

    def test_overlapping_chains(self):
        chain = set(self.embedding.chains[1]) | {next(iter(self.embedding.chains[0]))}
        verdict = verify_embedding(self.with_chain(1, chain), self.logical, self.topo)
        self.assertEqual(verdict.violation, 'overlapping-chains')

    def test_empty_chain(self):
        verdict = verify_embedding(self.with_chain(2, set()), self.logical, self.topo)
        self.assertEqual(verdict.violation, 'empty-chain')

    def test_unknown_qubit(self):
        verdict = verify_embedding(Embedding({0: {999}}), [], self.topo)
        self.assertEqual(verdict.violation, 'unknown-qubit')

    def test_missing_coupler(self):
        verdict = verify_embedding(Embedding({0: {0}, 1: {1}}), [(0, 1)], self.topo)
        self.assertEqual(verdict.violation, 'missing-coupler')

    def test_missing_variable(self):
        verdict = verify_embedding(Embedding({0: {0}}), [(0, 5)], self.topo)
        self.assertEqual(verdict.violation, 'missing-variable')


class TestStudy(unittest.TestCase):

    def test_growth_is_superlinear(self):
        sizes = list(range(4, 44, 4))
        rows = embedding_study(sizes)
        counts = [row['physical_qubits'] for row in rows]
        self.assertEqual(counts[0], 8)
        self.assertEqual(counts[-1], 440)
        fit = growth_fit(sizes, counts)
        self.assertLess(fit['quadratic'], fit['linear'])

    def test_export(self):
        rows = embedding_study([4, 8], m=2)
        with tempfile.TemporaryDirectory() as tmpdir:
            path = os.path.join(tmpdir, 'study.csv')
            export_study_csv(rows, path)
            with open(path) as f:
                lines = f.read().splitlines()
        self.assertEqual(lines[0], 'size,physical_qubits,max_chain,mean_chain')
        self.assertEqual(lines[2], '8,24,3,3.000000')


if __name__ == '__main__':
    unittest.main()
