"""
qubo_testgen.solvers - Interchangeable QUBO samplers

Every sampler takes a Qubo and returns a SampleSet sorted by ascending
energy, ties broken by the lexicographically smallest bit vector. Energies
are always recomputed from the Qubo, so samplers can be compared directly.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import CapacityError, ConfigurationError
from .qubo import Qubo, Selection
from .utils import SeedLike, make_rng

logger = logging.getLogger(__name__)

EXACT_MAX_VARIABLES = 24
EXACT_FRONTIER = 1000
_EXACT_CHUNK = 1 << 16


@dataclass
class SampleSet:
    """Distinct samples with energy and occurrence count, best first"""

    samples: List[Tuple[Selection, float, int]]
    solver_name: str
    wall_time: float = 0.0
    solver_time: float = 0.0
    info: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not self.samples:
            raise ConfigurationError(f"Sampler '{self.solver_name}' returned no samples")
        self.samples = sorted(self.samples, key=lambda s: (s[1], tuple(s[0].bits)))

    def __len__(self) -> int:
        return len(self.samples)

    def best(self) -> Selection:
        return self.samples[0][0]

    @property
    def lowest_energy(self) -> float:
        return self.samples[0][1]

    @property
    def total_reads(self) -> int:
        return sum(count for _, _, count in self.samples)

    @classmethod
    def from_array(cls, q: Qubo, X: np.ndarray, solver_name: str, **kwargs) -> 'SampleSet':
        """Aggregate raw reads (one per row) into a SampleSet"""
        X = np.asarray(X, dtype=np.int8).reshape(-1, q.n)
        rows, counts = np.unique(X, axis=0, return_counts=True)
        energies = q.energies(rows)
        samples = [(Selection(row), float(e), int(c)) for row, e, c in zip(rows, energies, counts)]
        return cls(samples, solver_name, **kwargs)


@dataclass(frozen=True)
class AnnealParams:
    """Simulated annealing schedule"""

    num_reads: int = 100
    sweeps: int = 1000
    initial_temperature: float = 10.0
    final_temperature: float = 0.05
    seed: SeedLike = None

    def __post_init__(self):
        if self.num_reads < 1 or self.sweeps < 1:
            raise ConfigurationError("num_reads and sweeps must be >= 1")
        if not 0 < self.final_temperature < self.initial_temperature:
            raise ConfigurationError(
                "Temperatures must satisfy 0 < final_temperature < initial_temperature")


def _bits_of(indices: np.ndarray, n: int) -> np.ndarray:
    # Variable 0 is the most significant bit, so integer order is lexicographic order
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((indices[:, np.newaxis] >> shifts) & 1).astype(np.int8)


def solve_exact(q: Qubo, frontier: int = EXACT_FRONTIER) -> SampleSet:
    """Enumerate all 2^n selections; the global minimum comes first"""
    if q.n > EXACT_MAX_VARIABLES:
        raise CapacityError(
            f"Exact solver handles at most {EXACT_MAX_VARIABLES} variables, got {q.n}")
    start = time.perf_counter()
    n = q.n
    total = 1 << n
    best_idx = np.empty(0, dtype=np.int64)
    best_e = np.empty(0)
    for lo in range(0, total, _EXACT_CHUNK):
        idx = np.arange(lo, min(total, lo + _EXACT_CHUNK), dtype=np.int64)
        e = q.energies(_bits_of(idx, n)) if n else np.full(1, q.offset)
        idx = np.concatenate([best_idx, idx])
        e = np.concatenate([best_e, e])
        order = np.lexsort((idx, e))[:frontier]
        best_idx, best_e = idx[order], e[order]
    bits = _bits_of(best_idx, n)
    samples = [(Selection(b), float(en), 1) for b, en in zip(bits, best_e)]
    elapsed = time.perf_counter() - start
    return SampleSet(samples, 'exact', wall_time=elapsed, solver_time=elapsed,
                     info={'enumerated': total})


def solve_sa(q: Qubo, params: AnnealParams = AnnealParams(), seed: SeedLike = None) -> SampleSet:
    """Single-bit Metropolis annealing with a geometric temperature schedule

    All reads run side by side. Coefficients are divided by the largest
    absolute coefficient so temperatures are instance independent. A final
    zero-temperature sweep settles each read into a local minimum.
    """
    start = time.perf_counter()
    rng = make_rng(params.seed if seed is None else seed)
    n, reads = q.n, params.num_reads
    if n == 0:
        return SampleSet.from_array(q, np.zeros((1, 0)), 'simulated_annealing')

    scale = q.max_abs_coefficient() or 1.0
    lin = q.linear / scale
    J = q.symmetric() / scale
    X = rng.integers(0, 2, size=(reads, n)).astype(float)
    local = X @ J

    temperatures = np.geomspace(params.initial_temperature, params.final_temperature, params.sweeps)
    for T in list(temperatures) + [0.0]:
        for i in range(n):
            xi = X[:, i]
            delta = (1.0 - 2.0 * xi) * (lin[i] + local[:, i])
            if T > 0:
                accept = (delta <= 0) | (rng.random(reads) < np.exp(-np.maximum(delta, 0.0) / T))
            else:
                accept = delta < 0
            if not accept.any():
                continue
            change = np.where(accept, 1.0 - 2.0 * xi, 0.0)
            X[:, i] = xi + change
            local += np.outer(change, J[i])

    elapsed = time.perf_counter() - start
    return SampleSet.from_array(q, X, 'simulated_annealing', wall_time=elapsed,
                                solver_time=elapsed,
                                info={'num_reads': reads, 'sweeps': params.sweeps})


def solve_evolutionary(q: Qubo, pop: int = 40, generations: int = 100,
                       rng: SeedLike = None) -> SampleSet:
    """Genetic search over bit strings minimising energy

    Binary tournament selection, uniform crossover, per-bit mutation 1/n and
    one elite carried over. Individuals start with log-uniform densities so
    sparse and dense selections are both represented.
    """
    if pop < 2:
        raise ConfigurationError(f"Population must be >= 2, got {pop}")
    start = time.perf_counter()
    rng = make_rng(rng)
    n = q.n
    if n == 0:
        return SampleSet.from_array(q, np.zeros((1, 0)), 'evolutionary')

    density = 10.0 ** rng.uniform(np.log10(1.0 / n), 0.0, size=(pop, 1))
    X = (rng.random((pop, n)) < density).astype(np.int8)
    E = q.energies(X)
    for _ in range(generations):
        elite = X[np.argmin(E)].copy()
        a, b = rng.integers(0, pop, size=(2, pop, 2))
        pa = np.where(E[a[:, 0]] <= E[a[:, 1]], a[:, 0], a[:, 1])
        pb = np.where(E[b[:, 0]] <= E[b[:, 1]], b[:, 0], b[:, 1])
        mask = rng.random((pop, n)) < 0.5
        children = np.where(mask, X[pa], X[pb])
        flips = rng.random((pop, n)) < 1.0 / n
        children = np.where(flips, 1 - children, children).astype(np.int8)
        children[0] = elite
        X, E = children, q.energies(children)

    elapsed = time.perf_counter() - start
    return SampleSet.from_array(q, X, 'evolutionary', wall_time=elapsed, solver_time=elapsed,
                                info={'population': pop, 'generations': generations})


def solve_random(q: Qubo, draws: int = 100, rng: SeedLike = None) -> SampleSet:
    """Uniformly random selections, best first"""
    if draws < 1:
        raise ConfigurationError(f"draws must be >= 1, got {draws}")
    start = time.perf_counter()
    rng = make_rng(rng)
    X = rng.integers(0, 2, size=(draws, q.n))
    elapsed = time.perf_counter() - start
    return SampleSet.from_array(q, X, 'random', wall_time=elapsed, solver_time=elapsed,
                                info={'draws': draws})


class Sampler:
    """Common interface of the samplers used by the pipeline

    Samplers are safe to call from several threads unless exclusive is set,
    in which case callers serialise their calls.
    """

    name = 'sampler'
    exclusive = False

    def __init__(self, seed: SeedLike = None):
        self.seed = seed

    def sample(self, q: Qubo, seed: SeedLike = None) -> SampleSet:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}(seed={self.seed})"


class ExactSolver(Sampler):
    name = 'exact'

    def sample(self, q: Qubo, seed: SeedLike = None) -> SampleSet:
        return solve_exact(q)


class SimulatedAnnealingSampler(Sampler):
    name = 'simulated_annealing'

    def __init__(self, params: AnnealParams = AnnealParams()):
        super().__init__(params.seed)
        self.params = params

    def sample(self, q: Qubo, seed: SeedLike = None) -> SampleSet:
        return solve_sa(q, self.params, seed=seed)


class EvolutionarySampler(Sampler):
    name = 'evolutionary'

    def __init__(self, pop: int = 40, generations: int = 100, seed: SeedLike = None):
        super().__init__(seed)
        self.pop = pop
        self.generations = generations

    def sample(self, q: Qubo, seed: SeedLike = None) -> SampleSet:
        return solve_evolutionary(q, self.pop, self.generations,
                                  make_rng(self.seed if seed is None else seed))


class RandomSampler(Sampler):
    name = 'random'

    def __init__(self, draws: int = 100, seed: SeedLike = None):
        super().__init__(seed)
        self.draws = draws

    def sample(self, q: Qubo, seed: SeedLike = None) -> SampleSet:
        return solve_random(q, self.draws, make_rng(self.seed if seed is None else seed))


# Heuristic names accepted on the command line and in campaign configs
HEURISTIC_ALIASES = {
    'exact': 'exact',
    'sa': 'simulated_annealing',
    'simulated_annealing': 'simulated_annealing',
    'evo': 'evolutionary',
    'evolutionary': 'evolutionary',
    'random': 'random',
    'remote': 'quantum_remote',
    'quantum_remote': 'quantum_remote',
}


def canonical_heuristic(name: str) -> str:
    try:
        return HEURISTIC_ALIASES[name]
    except KeyError:
        raise ConfigurationError(
            f"Unknown heuristic '{name}', expected one of {sorted(HEURISTIC_ALIASES)}") from None


def make_sampler(name: str, seed: SeedLike = None, anneal: Optional[AnnealParams] = None,
                 pop: int = 40, generations: int = 100, draws: int = 100,
                 endpoint: Optional[str] = None, timeout: float = 30.0,
                 num_reads: int = 100, max_retries: int = 0) -> Sampler:
    """Build the sampler for a heuristic name"""
    kind = canonical_heuristic(name)
    if kind == 'exact':
        return ExactSolver(seed)
    if kind == 'simulated_annealing':
        params = anneal or AnnealParams()
        if seed is not None:
            params = AnnealParams(params.num_reads, params.sweeps, params.initial_temperature,
                                  params.final_temperature, seed)
        return SimulatedAnnealingSampler(params)
    if kind == 'evolutionary':
        return EvolutionarySampler(pop, generations, seed)
    if kind == 'random':
        return RandomSampler(draws, seed)
    if not endpoint:
        raise ConfigurationError("The remote heuristic needs an endpoint")
    from .remote import RemoteSampler
    return RemoteSampler(endpoint, num_reads=num_reads, timeout=timeout, max_retries=max_retries)
