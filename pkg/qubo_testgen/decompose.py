"""
qubo_testgen.decompose - Sub-problem decomposition and merging

A trajectory is tiled into m equal windows. From each window n points are
sampled, repeatedly, until the requested fraction of the window has been
seen. Each sample becomes one selection QUBO small enough for a limited
solver; the points chosen by all sub-problems are then merged by one more
selection round over their union.
"""

import logging
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigurationError, QTestGenError, SolverError
from .metrics import MetricSeries
from .qubo import Qubo, Selection, Weights, build_selection_qubo
from .solvers import SampleSet, Sampler
from .utils import SeedLike, make_rng

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SubProblemPlan:
    """Window [lo, hi) of a trajectory and the indices sampled from it"""

    slice_index: int
    window: Tuple[int, int]
    sampled_indices: Tuple[int, ...]
    round: int = 0

    def __post_init__(self):
        lo, hi = self.window
        idx = tuple(int(i) for i in self.sampled_indices)
        if list(idx) != sorted(set(idx)):
            raise ConfigurationError(f"Plan {self.slice_index}: sampled indices must be sorted and unique")
        if idx and (idx[0] < lo or idx[-1] >= hi):
            raise ConfigurationError(f"Plan {self.slice_index}: sampled indices leave window {self.window}")
        object.__setattr__(self, 'sampled_indices', idx)

    def __len__(self) -> int:
        return len(self.sampled_indices)

    def to_dict(self) -> Dict[str, object]:
        return {'slice_index': self.slice_index, 'round': self.round,
                'window': list(self.window), 'sampled_indices': list(self.sampled_indices)}


@dataclass(frozen=True)
class DecompositionConfig:
    """Number of windows m, sub-problem size n and per-window coverage"""

    m: int = 8
    n: int = 40
    coverage: float = 0.5
    seed: Optional[int] = None
    final_capacity: Optional[int] = None  # defaults to n
    workers: int = 1

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ConfigurationError("Decomposition needs m >= 1 and n >= 1")
        if not 0 < self.coverage <= 1:
            raise ConfigurationError(f"coverage must be in (0, 1], got {self.coverage}")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")

    @property
    def capacity(self) -> int:
        return self.final_capacity or self.n

    def to_dict(self) -> Dict[str, object]:
        return {'m': self.m, 'n': self.n, 'coverage': self.coverage, 'seed': self.seed,
                'final_capacity': self.final_capacity, 'workers': self.workers}


class SolveStats:
    """Running totals of solver calls and their timings"""

    def __init__(self):
        self.calls = 0
        self.solve_seconds = 0.0
        self.access_seconds = 0.0
        self.embed_seconds = 0.0
        self.physical_qubits: List[int] = []
        self.energies: List[float] = []
        self._lock = threading.Lock()

    def record(self, result: SampleSet) -> None:
        with self._lock:
            self.calls += 1
            self.solve_seconds += result.wall_time
            self.energies.append(result.lowest_energy)
            if result.solver_name == 'quantum_remote':
                self.access_seconds += result.solver_time
            self.embed_seconds += float(result.info.get('embed_seconds', 0.0))
            if 'physical_qubits' in result.info:
                self.physical_qubits.append(int(result.info['physical_qubits']))

    def __repr__(self):
        return f"SolveStats(calls={self.calls}, solve={self.solve_seconds:.3f}s)"


def plan_subproblems(traj_len: int, cfg: DecompositionConfig) -> List[SubProblemPlan]:
    """Tile [0, traj_len) into m windows and sample each until covered"""
    if cfg.n > traj_len:
        raise ConfigurationError(f"Sub-problem size {cfg.n} exceeds trajectory length {traj_len}")
    if cfg.m > traj_len:
        raise ConfigurationError(f"Cannot split {traj_len} samples into {cfg.m} windows")
    rng = make_rng(cfg.seed)
    plans = []
    for w, chunk in enumerate(np.array_split(np.arange(traj_len), cfg.m)):
        lo, hi = int(chunk[0]), int(chunk[-1]) + 1
        size = min(cfg.n, len(chunk))
        need = math.ceil(cfg.coverage * len(chunk) - 1e-9)
        covered = set()
        rnd = 0
        while len(covered) < need:
            picked = np.sort(rng.choice(chunk, size=size, replace=False))
            plans.append(SubProblemPlan(w, (lo, hi), tuple(int(i) for i in picked), rnd))
            covered.update(int(i) for i in picked)
            rnd += 1
    logger.debug("Planned %d sub-problems over %d windows", len(plans), cfg.m)
    return plans


def dump_plans(plans: Sequence[SubProblemPlan], seed: Optional[int]) -> Dict[str, object]:
    """Plan dump document for reproducing a decomposition"""
    return {'format': 'subproblem-plans', 'version': 1, 'seed': seed,
            'plans': [p.to_dict() for p in plans]}


def _problem_for(indices: Sequence[int], metric: MetricSeries, weights: Weights,
                 times: np.ndarray) -> Qubo:
    idx = np.asarray(indices, dtype=int)
    return build_selection_qubo(metric.effectiveness[idx], metric.input_diversity[idx],
                                metric.output_diversity[idx], times[idx], weights)


def _plan_seed(seed: SeedLike, k: int) -> SeedLike:
    if seed is None:
        return None
    return [int(s) for s in np.atleast_1d(seed)] + [k]


def solve_subproblems(plans: Sequence[SubProblemPlan], metric: MetricSeries, weights: Weights,
                      times: Sequence[float], solver: Sampler, seed: SeedLike = None,
                      workers: int = 1, stats: Optional[SolveStats] = None) -> List[Selection]:
    """Solve one selection QUBO per plan; selections are local to each plan"""
    times = np.asarray(times, dtype=float)

    def solve(item) -> Selection:
        k, plan = item
        try:
            result = solver.sample(_problem_for(plan.sampled_indices, metric, weights, times),
                                   seed=_plan_seed(seed, k))
        except QTestGenError as e:
            raise SolverError(f"Sub-problem {plan.slice_index} (round {plan.round}) failed: {e}",
                              plan=plan) from e
        if stats is not None:
            stats.record(result)
        return result.best()

    items = list(enumerate(plans))
    if workers > 1 and not solver.exclusive and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(solve, items))
    return [solve(item) for item in items]


def _thin(indices: List[int], metric: MetricSeries, times: np.ndarray, d_min: float) -> List[int]:
    # Greedy by effectiveness, keeping only points at least d_min apart
    order = sorted(indices, key=lambda i: (-metric.effectiveness[i], i))
    kept: List[int] = []
    for i in order:
        if all(abs(times[i] - times[j]) >= d_min - 1e-9 for j in kept):
            kept.append(i)
    return sorted(kept)


def merge_subsolutions(selections: Sequence[Selection], plans: Sequence[SubProblemPlan],
                       metric: MetricSeries, weights: Weights, times: Sequence[float],
                       solver: Sampler, capacity: Optional[int] = None, seed: SeedLike = None,
                       workers: int = 1, stats: Optional[SolveStats] = None) -> Selection:
    """Final selection round over the union of all sub-solutions

    A single sub-solution is returned as it is. Unions larger than the
    capacity are decomposed again.
    """
    if not selections:
        raise ConfigurationError("merge_subsolutions needs at least one sub-solution")
    times = np.asarray(times, dtype=float)
    n_global = len(metric)
    union = sorted({plan.sampled_indices[j] for sel, plan in zip(selections, plans)
                    for j in sel.indices})
    if len(plans) == 1 or not union:
        return Selection.from_indices(n_global, union)

    cap = capacity or max(len(p) for p in plans)
    if len(union) <= cap:
        try:
            result = solver.sample(_problem_for(union, metric, weights, times),
                                   seed=_plan_seed(seed, len(plans)))
        except QTestGenError as e:
            raise SolverError(f"Final merge round failed: {e}") from e
        if stats is not None:
            stats.record(result)
        return Selection.from_indices(n_global, [union[j] for j in result.best().indices])

    cfg = DecompositionConfig(m=math.ceil(len(union) / cap), n=cap, coverage=1.0)
    sub_plans = []
    for p in plan_subproblems(len(union), cfg):
        lo, hi = p.window
        sub_plans.append(SubProblemPlan(p.slice_index, (union[lo], union[hi - 1] + 1),
                                        tuple(union[i] for i in p.sampled_indices), p.round))
    sub_seed = _plan_seed(seed, len(plans) + 1)
    sub_selections = solve_subproblems(sub_plans, metric, weights, times, solver,
                                       seed=sub_seed, workers=workers, stats=stats)
    sub_union = {plan.sampled_indices[j] for sel, plan in zip(sub_selections, sub_plans)
                 for j in sel.indices}
    if len(sub_union) >= len(union):
        logger.warning("Merge round kept all %d points; thinning greedily under d_min", len(union))
        return Selection.from_indices(n_global, _thin(union, metric, times, weights.d_min))
    return merge_subsolutions(sub_selections, sub_plans, metric, weights, times, solver,
                              capacity=cap, seed=sub_seed, workers=workers, stats=stats)


def select_points(metric: MetricSeries, weights: Weights, times: Sequence[float],
                  solver: Sampler, cfg: DecompositionConfig = DecompositionConfig(),
                  whole: bool = False, seed: SeedLike = None,
                  stats: Optional[SolveStats] = None) -> Selection:
    """Choose the data points of one case to mutate

    With whole set, one QUBO over the full trajectory is solved directly.
    """
    times = np.asarray(times, dtype=float)
    if whole:
        result = solver.sample(_problem_for(range(len(metric)), metric, weights, times),
                               seed=_plan_seed(seed, 0))
        if stats is not None:
            stats.record(result)
        return result.best()
    plans = plan_subproblems(len(metric), cfg)
    selections = solve_subproblems(plans, metric, weights, times, solver, seed=seed,
                                   workers=cfg.workers, stats=stats)
    return merge_subsolutions(selections, plans, metric, weights, times, solver,
                              capacity=cfg.capacity, seed=seed, workers=cfg.workers, stats=stats)
