"""
qubo_testgen.embed - Minor-embedding onto Chimera hardware graphs

Chimera is an m x m grid of K4,4 unit cells, built and addressed with
dwave_networkx: qubit (row, col, shore, k) is 8 * (col + row * m) + 4 * shore + k.
Shore 0 qubits couple to the same k in the cells above and below, shore 1
qubits to the same k in the cells left and right. Dense selection QUBOs are
embedded with a deterministic clique scheme whose chains hold ceil(n / 4) + 1
qubits each.
"""

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import dwave_networkx as dnx
import networkx as nx
import numpy as np

from .errors import CapacityError
from .qubo import Qubo

logger = logging.getLogger(__name__)

SHORE = 4


def chimera_index(m: int, row: int, col: int, shore: int, k: int) -> int:
    """Linear qubit index of (row, col, shore, k) in an m x m Chimera grid"""
    return dnx.chimera_coordinates(m, m, SHORE).chimera_to_linear((row, col, shore, k))


@dataclass(frozen=True)
class HardwareTopology:
    """Physical qubits and couplers of an annealer"""

    family: str
    m: int
    graph: nx.Graph

    @property
    def nodes(self) -> int:
        return self.graph.number_of_nodes()

    @property
    def adjacency(self) -> FrozenSet[Tuple[int, int]]:
        return frozenset((min(u, v), max(u, v)) for u, v in self.graph.edges())

    def __repr__(self):
        return f"HardwareTopology({self.family}, m={self.m}, nodes={self.nodes})"


def build_chimera(m: int) -> HardwareTopology:
    """m x m Chimera graph with 8 m^2 qubits"""
    if m < 1:
        raise CapacityError(f"Chimera grid size must be >= 1, got {m}")
    g = dnx.chimera_graph(m, m, SHORE)
    return HardwareTopology('chimera', m, g)


@dataclass(frozen=True)
class Embedding:
    """Logical variable -> chain of physical qubits"""

    chains: Mapping[int, FrozenSet[int]]

    def __post_init__(self):
        object.__setattr__(self, 'chains', {int(v): frozenset(c) for v, c in self.chains.items()})


def chimera_size_for(n_vars: int) -> int:
    """Smallest grid that holds the clique embedding of n_vars variables"""
    return max(1, math.ceil(n_vars / SHORE))


def embed_clique(n_vars: int, topo: HardwareTopology) -> Embedding:
    """Deterministic complete-graph embedding

    Variable 4g + k takes shore-1 qubit k in row g, columns 0..g, and shore-0
    qubit k in column g, rows g..c-1, where c = ceil(n_vars / 4). The two
    segments meet in cell (g, g). Variables g < h couple in cell (h, g).
    """
    c = chimera_size_for(n_vars)
    if topo.family != 'chimera' or topo.m < c:
        raise CapacityError(f"Clique of {n_vars} variables needs a Chimera grid of m >= {c}, "
                            f"topology has m = {topo.m}")
    chains = {}
    for v in range(n_vars):
        g, k = divmod(v, SHORE)
        horizontal = {chimera_index(topo.m, g, col, 1, k) for col in range(g + 1)}
        vertical = {chimera_index(topo.m, row, g, 0, k) for row in range(g, c)}
        chains[v] = frozenset(horizontal | vertical)
    return Embedding(chains)


def embedding_stats(e: Embedding) -> Tuple[int, int, float]:
    """(physical qubits, longest chain, mean chain length)"""
    lengths = [len(chain) for chain in e.chains.values()]
    if not lengths:
        return 0, 0, 0.0
    return sum(lengths), max(lengths), sum(lengths) / len(lengths)


@dataclass(frozen=True)
class EmbeddingVerdict:
    ok: bool
    violation: Optional[str] = None
    detail: str = ''


def verify_embedding(e: Embedding, logical: Union[Qubo, Iterable[Tuple[int, int]]],
                     topo: HardwareTopology) -> EmbeddingVerdict:
    """Check chains are disjoint, connected and cover every logical edge"""
    owner: Dict[int, int] = {}
    for v, chain in sorted(e.chains.items()):
        if not chain:
            return EmbeddingVerdict(False, 'empty-chain', f"variable {v} has an empty chain")
        missing = [q for q in chain if q not in topo.graph]
        if missing:
            return EmbeddingVerdict(False, 'unknown-qubit',
                                    f"variable {v} uses qubit {missing[0]} outside the topology")
        for q in chain:
            if q in owner:
                return EmbeddingVerdict(False, 'overlapping-chains',
                                        f"qubit {q} is shared by variables {owner[q]} and {v}")
            owner[q] = v
        if not nx.is_connected(topo.graph.subgraph(chain)):
            return EmbeddingVerdict(False, 'disconnected-chain', f"chain of variable {v} is disconnected")

    edges = logical.edges() if isinstance(logical, Qubo) else logical
    for u, v in edges:
        if u not in e.chains or v not in e.chains:
            return EmbeddingVerdict(False, 'missing-variable', f"edge ({u}, {v}) has an unembedded end")
        if not any(topo.graph.has_edge(a, b) for a in e.chains[u] for b in e.chains[v]):
            return EmbeddingVerdict(False, 'missing-coupler', f"no coupler joins chains of {u} and {v}")
    return EmbeddingVerdict(True)


def complete_graph_qubo(n_vars: int) -> Qubo:
    """Dense Qubo whose logical graph is the complete graph"""
    return Qubo(n_vars, np.zeros(n_vars), np.triu(np.ones((n_vars, n_vars)), k=1))


def embedding_study(sizes: Sequence[int], m: Optional[int] = None) -> List[Dict[str, float]]:
    """Physical qubit usage of the clique embedding for each problem size"""
    topo = build_chimera(m or chimera_size_for(max(sizes)))
    rows = []
    for size in sizes:
        qubits, longest, mean = embedding_stats(embed_clique(size, topo))
        rows.append({'size': size, 'physical_qubits': qubits, 'max_chain': longest,
                     'mean_chain': mean})
    return rows


def growth_fit(sizes: Sequence[int], counts: Sequence[float]) -> Dict[str, float]:
    """Residual sums of squares of linear and quadratic least-squares fits"""
    x, y = np.asarray(sizes, dtype=float), np.asarray(counts, dtype=float)
    result = {}
    for name, degree in (('linear', 1), ('quadratic', 2)):
        coeffs = np.polyfit(x, y, degree)
        result[name] = float(np.sum((np.polyval(coeffs, x) - y) ** 2))
    return result


def export_study_csv(rows: Sequence[Mapping[str, float]], path: Union[str, Path]) -> None:
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(['size', 'physical_qubits', 'max_chain', 'mean_chain'])
        for row in rows:
            writer.writerow([row['size'], row['physical_qubits'], row['max_chain'],
                             f"{row['mean_chain']:.6f}"])
