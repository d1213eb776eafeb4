"""
qubo_testgen.experiment - Campaign harness

A campaign repeats the three phases for every configured heuristic:

  1. generate a seeded suite and collect its metrics against the reference
  2. select data points per case (decomposed or whole-trajectory)
  3. mutate the selected points and enrich the suite

and then runs every resulting suite against every faulty variant of the
reference model. The report keeps the deterministic results apart from the
wall-clock timings so that two campaigns with the same seeds produce the
same summary, byte for byte.
"""

import csv
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.stats import mannwhitneyu

from .config import CampaignConfig, dump_campaign_config
from .decompose import SolveStats, select_points
from .embed import build_chimera, chimera_size_for, embed_clique, embedding_stats
from .errors import ConfigurationError, InsufficientDataError, QTestGenError
from .fileio import save_fault_manifest, save_json
from .metrics import MetricSeries, compute_suite_metrics, effectiveness_series
from .mutate import enrich_suite, mutate_suite
from .qubo import Qubo, Selection
from .solvers import SampleSet, Sampler, make_sampler
from .sut import (AnyModel, FaultSpec, FaultyModel, PlantModel, apply_fault, conformance,
                  fault_variants, generate_fault_corpus, output_spec, simulate)
from .trajectory import SignalSpec, TestSuite, generate_suite, sample_times
from .utils import fmt

logger = logging.getLogger(__name__)

# Fixed positions keep per-heuristic seeds stable when heuristics are added
HEURISTIC_ORDER = ('exact', 'simulated_annealing', 'evolutionary', 'random', 'quantum_remote')

TIMING_KEYS = ('metrics', 'solve', 'mutate', 'embed_simulation', 'remote_access')


class EmbeddingSampler(Sampler):
    """Embeds every problem onto Chimera before handing it to a sampler

    Stands in for the hardware embedding step of a remote annealer: the
    embedding time and physical qubit count are added to the sample info.
    """

    def __init__(self, inner: Sampler):
        super().__init__(inner.seed)
        self.inner = inner
        self.name = inner.name
        self.exclusive = inner.exclusive

    def sample(self, q: Qubo, seed=None) -> SampleSet:
        start = time.perf_counter()
        embedding = embed_clique(q.n, build_chimera(chimera_size_for(q.n)))
        embed_seconds = time.perf_counter() - start
        result = self.inner.sample(q, seed=seed)
        result.info['embed_seconds'] = embed_seconds
        result.info['physical_qubits'] = embedding_stats(embedding)[0]
        return result

    def __repr__(self):
        return f"EmbeddingSampler({self.inner!r})"


# Oracle

def detections(suite: TestSuite, variants: Sequence[AnyModel], reference: PlantModel,
               epsilon: float, cache: Optional[Dict[Tuple[int, str], bool]] = None) -> List[bool]:
    """For every variant, whether some case of the suite fails the oracle"""
    if not variants:
        raise ConfigurationError("Fault corpus is empty")
    if not len(suite):
        raise ConfigurationError("Cannot evaluate an empty suite")
    expected = {case.id: simulate(reference, case) for case in suite}
    found = []
    for v, variant in enumerate(variants):
        detected = False
        for case in suite:
            key = (v, case.id)
            if cache is not None and key in cache and case.parent is None:
                failed = cache[key]
            else:
                failed = not conformance(simulate(variant, case), expected[case.id], epsilon).passed
                if cache is not None and case.parent is None:
                    cache[key] = failed
            if failed:
                detected = True
                break
        found.append(detected)
    return found


def pfd(suite: TestSuite, variants: Sequence[AnyModel], reference: PlantModel,
        epsilon: float) -> float:
    """Percentage of faulty variants detected by at least one failing case"""
    found = detections(suite, variants, reference, epsilon)
    return 100.0 * sum(found) / len(found)


def rank_sum_test(a: Sequence[float], b: Sequence[float]) -> float:
    """Two-sided Mann-Whitney U p-value, normal approximation with tie correction"""
    x, y = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if x.size < 3 or y.size < 3:
        raise InsufficientDataError(f"Rank-sum test needs samples of at least 3, got {x.size} and {y.size}")
    if np.ptp(np.concatenate([x, y])) == 0:
        return 1.0
    p = float(mannwhitneyu(x, y, alternative='two-sided', method='asymptotic').pvalue)
    return 1.0 if np.isnan(p) else min(p, 1.0)


# Cells

@dataclass
class RepeatContext:
    """Seed suite and metrics shared by every heuristic of one repeat"""

    repeat: int
    suite: TestSuite
    metrics: List[MetricSeries]
    times: np.ndarray
    out_spec: SignalSpec
    metrics_seconds: float
    seed_pfd: float = 0.0
    seed_effectiveness: float = 0.0
    fail_cache: Dict[Tuple[int, str], bool] = field(default_factory=dict)


@dataclass
class CellResult:
    """Outcome of one (heuristic, repeat) cell"""

    heuristic: str
    repeat: int
    pfd: Optional[float] = None
    detected: Tuple[bool, ...] = ()
    selected_points: int = 0
    mutants: int = 0
    suite_size: int = 0
    median_max_effectiveness: Optional[float] = None
    fitness: Optional[float] = None
    physical_qubits: int = 0
    solver_calls: int = 0
    error: Optional[str] = None
    timings: Dict[str, float] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def generation_time(self) -> float:
        return sum(self.timings.get(k, 0.0) for k in TIMING_KEYS)

    def to_dict(self) -> Dict[str, object]:
        return {'heuristic': self.heuristic, 'repeat': self.repeat, 'pfd': self.pfd,
                'detected': list(self.detected), 'selected_points': self.selected_points,
                'mutants': self.mutants, 'suite_size': self.suite_size,
                'median_max_effectiveness': self.median_max_effectiveness,
                'fitness': self.fitness, 'physical_qubits': self.physical_qubits,
                'solver_calls': self.solver_calls, 'error': self.error}


def _seed(cfg: CampaignConfig, *parts: int) -> List[int]:
    return [int(cfg.seed)] + [int(p) for p in parts]


def _int_seed(parts: Sequence[int]) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def _median_max_effectiveness(suite: TestSuite, implementation: AnyModel, reference: PlantModel,
                              out_spec: SignalSpec) -> float:
    peaks = [float(effectiveness_series(simulate(implementation, c), simulate(reference, c),
                                        out_spec).max()) for c in suite]
    return float(np.median(peaks))


def prepare_repeat(cfg: CampaignConfig, repeat: int, reference: PlantModel,
                   implementation: FaultyModel, variants: Sequence[FaultyModel]) -> RepeatContext:
    """Seed suite, executions and metrics of one repeat"""
    suite = generate_suite(cfg.signal, cfg.suite_size, cfg.control_points,
                           rng=np.random.default_rng(_seed(cfg, repeat)))
    start = time.perf_counter()
    out_spec = output_spec(reference, cfg.signal)
    expected = [simulate(reference, case) for case in suite]
    observed = [simulate(implementation, case) for case in suite]
    metrics = compute_suite_metrics(suite, observed, expected, out_spec, cfg.diversity_radius)
    ctx = RepeatContext(repeat, suite, metrics, sample_times(cfg.signal), out_spec,
                        time.perf_counter() - start)
    found = detections(suite, variants, reference, cfg.epsilon, ctx.fail_cache)
    ctx.seed_pfd = 100.0 * sum(found) / len(found)
    ctx.seed_effectiveness = _median_max_effectiveness(suite, implementation, reference, out_spec)
    return ctx


def build_sampler(cfg: CampaignConfig, heuristic: str) -> Sampler:
    sampler = make_sampler(heuristic, anneal=cfg.anneal, pop=cfg.population,
                           generations=cfg.generations, draws=cfg.draws,
                           endpoint=cfg.remote.endpoint, timeout=cfg.remote.timeout,
                           num_reads=cfg.remote.num_reads, max_retries=cfg.remote.max_retries)
    if heuristic == 'quantum_remote':
        return EmbeddingSampler(sampler)
    return sampler


def run_cell(cfg: CampaignConfig, ctx: RepeatContext, heuristic: str, reference: PlantModel,
             implementation: FaultyModel, variants: Sequence[FaultyModel]) -> CellResult:
    """Selection and mutation for one heuristic, then the fault evaluation"""
    cell = CellResult(heuristic, ctx.repeat)
    h = HEURISTIC_ORDER.index(heuristic)
    whole = heuristic not in cfg.decomposed_heuristics
    logger.info("Cell %s / repeat %d: selecting (%s)", heuristic, ctx.repeat,
                'whole trajectory' if whole else 'decomposed')
    try:
        sampler = build_sampler(cfg, heuristic)
        stats = SolveStats()
        start = time.perf_counter()
        selections: List[Selection] = []
        for i, series in enumerate(ctx.metrics):
            decomposition = replace(cfg.decomposition, seed=_int_seed(_seed(cfg, ctx.repeat, i)),
                                    workers=cfg.workers)
            selections.append(select_points(series, cfg.weights, ctx.times, sampler, decomposition,
                                            whole=whole, seed=_seed(cfg, ctx.repeat, h, i),
                                            stats=stats))
        select_seconds = time.perf_counter() - start

        start = time.perf_counter()
        mutants, _ = mutate_suite(ctx.suite, selections, ctx.metrics, cfg.mutation)
        scores = {s.case_id: float(s.effectiveness.sum()) for s in ctx.metrics}
        for mutant in mutants:
            scores[mutant.id] = float(effectiveness_series(
                simulate(implementation, mutant), simulate(reference, mutant), ctx.out_spec).sum())
        enriched = enrich_suite(ctx.suite, mutants, scores, cfg.mutation.cap)
        mutate_seconds = time.perf_counter() - start

        found = detections(enriched, variants, reference, cfg.epsilon, ctx.fail_cache)
    except QTestGenError as e:
        logger.error("Cell %s / repeat %d failed: %s", heuristic, ctx.repeat, e)
        cell.error = str(e)
        return cell

    cell.detected = tuple(found)
    cell.pfd = 100.0 * sum(found) / len(found)
    cell.selected_points = sum(len(s.indices) for s in selections)
    cell.mutants = len(mutants)
    cell.suite_size = len(enriched)
    cell.median_max_effectiveness = _median_max_effectiveness(enriched, implementation, reference,
                                                              ctx.out_spec)
    cell.fitness = float(np.mean(stats.energies)) if stats.energies else None
    cell.physical_qubits = max(stats.physical_qubits, default=0)
    cell.solver_calls = stats.calls
    embed, access = stats.embed_seconds, stats.access_seconds
    cell.timings = {
        'metrics': ctx.metrics_seconds,
        'solve': max(select_seconds - embed - access, 0.0),
        'mutate': mutate_seconds,
        'embed_simulation': embed,
        'remote_access': access,
    }
    logger.info("Cell %s / repeat %d: pfd %.1f%%, %d mutants", heuristic, ctx.repeat,
                cell.pfd, cell.mutants)
    return cell


# Report

def _quartiles(values: Sequence[float]) -> Tuple[Optional[float], Optional[float], Optional[float]]:
    if not values:
        return None, None, None
    q1, med, q3 = np.percentile(np.asarray(values, dtype=float), [25, 50, 75])
    return float(med), float(q1), float(q3)


@dataclass
class ExperimentReport:
    """Per-cell results of a campaign plus their aggregates"""

    config: CampaignConfig
    faults: List[FaultSpec]
    cells: List[CellResult]
    seed_pfd: List[float] = field(default_factory=list)
    seed_effectiveness: List[float] = field(default_factory=list)

    @property
    def heuristics(self) -> Tuple[str, ...]:
        return self.config.heuristics

    def cells_for(self, heuristic: str) -> List[CellResult]:
        return [c for c in self.cells if c.heuristic == heuristic]

    def pfd_values(self, heuristic: str) -> List[float]:
        return [c.pfd for c in self.cells_for(heuristic) if c.ok]

    def summary(self) -> List[Dict[str, object]]:
        """Median and interquartile range of PFD per heuristic"""
        rows = []
        for h in self.heuristics:
            cells = self.cells_for(h)
            med, q1, q3 = _quartiles(self.pfd_values(h))
            eff = [c.median_max_effectiveness for c in cells if c.ok]
            rows.append({'heuristic': h, 'runs': sum(c.ok for c in cells),
                         'errors': sum(not c.ok for c in cells),
                         'median_pfd': med, 'q1_pfd': q1, 'q3_pfd': q3,
                         'median_max_effectiveness': float(np.median(eff)) if eff else None})
        return rows

    def detection_matrix(self) -> np.ndarray:
        """Faults x heuristics fraction of successful repeats that detected each fault"""
        matrix = np.zeros((len(self.faults), len(self.heuristics)))
        for j, h in enumerate(self.heuristics):
            done = [c for c in self.cells_for(h) if c.ok]
            if done:
                matrix[:, j] = np.mean([c.detected for c in done], axis=0)
        return matrix

    def p_values(self) -> Dict[Tuple[str, str], Optional[float]]:
        """Pairwise rank-sum p-values; None where a heuristic has fewer than 3 runs"""
        result = {}
        for i, a in enumerate(self.heuristics):
            for b in self.heuristics[i + 1:]:
                try:
                    result[(a, b)] = rank_sum_test(self.pfd_values(a), self.pfd_values(b))
                except InsufficientDataError:
                    result[(a, b)] = None
        return result

    def timing_summary(self) -> List[Dict[str, object]]:
        rows = []
        for h in self.heuristics:
            done = [c for c in self.cells_for(h) if c.ok]
            row: Dict[str, object] = {'heuristic': h}
            for key in TIMING_KEYS:
                row[key] = float(np.mean([c.timings[key] for c in done])) if done else None
            row['total'] = float(np.mean([c.generation_time for c in done])) if done else None
            rows.append(row)
        return rows

    def render_summary(self) -> str:
        """Deterministic summary table"""
        lines = [f"{'heuristic':<20} {'runs':>4} {'errors':>6} {'median_pfd':>12} "
                 f"{'q1_pfd':>12} {'q3_pfd':>12} {'max_eff':>10}"]
        for row in self.summary():
            lines.append(f"{row['heuristic']:<20} {row['runs']:>4} {row['errors']:>6} "
                         f"{fmt(row['median_pfd']):>12} {fmt(row['q1_pfd']):>12} "
                         f"{fmt(row['q3_pfd']):>12} {fmt(row['median_max_effectiveness']):>10}")
        if self.seed_pfd:
            med, q1, q3 = _quartiles(self.seed_pfd)
            lines.append(f"{'seed suites':<20} {len(self.seed_pfd):>4} {0:>6} {fmt(med):>12} "
                         f"{fmt(q1):>12} {fmt(q3):>12} "
                         f"{fmt(float(np.median(self.seed_effectiveness))):>10}")
        pairs = self.p_values()
        if pairs:
            lines.append('')
            for (a, b), p in pairs.items():
                lines.append(f"rank-sum {a} vs {b}: p = {fmt(p) if p is not None else 'n/a'}")
        return '\n'.join(lines) + '\n'

    def render_timings(self) -> str:
        header = ['heuristic'] + list(TIMING_KEYS) + ['total']
        lines = [' '.join(f"{h:>16}" for h in header)]
        for row in self.timing_summary():
            lines.append(' '.join([f"{row['heuristic']:>16}"]
                                  + [f"{fmt(row[k]):>16}" for k in header[1:]]))
        return '\n'.join(lines) + '\n'

    def write(self, report_dir: Union[str, Path]) -> Path:
        """Summary tables, per-cell details, detection matrix and the inputs needed to rerun"""
        out = Path(report_dir)
        (out / 'cells').mkdir(parents=True, exist_ok=True)
        (out / 'summary.txt').write_text(self.render_summary())
        (out / 'timings.txt').write_text(self.render_timings())
        (out / 'config.yaml').write_text(dump_campaign_config(self.config))
        save_fault_manifest(self.config.model, self.faults, out / 'faults.json', seed=self.config.seed)

        with open(out / 'summary.csv', 'w', newline='') as f:
            writer = csv.writer(f)
            writer.writerow(['heuristic', 'runs', 'errors', 'median_pfd', 'q1_pfd', 'q3_pfd',
                             'median_max_effectiveness'])
            for row in self.summary():
                writer.writerow([row['heuristic'], row['runs'], row['errors'], fmt(row['median_pfd']),
                                 fmt(row['q1_pfd']), fmt(row['q3_pfd']),
                                 fmt(row['median_max_effectiveness'])])
        with open(out / 'cells.csv', 'w', newline='') as f:
            writer = csv.writer(f)
            writer.writerow(['heuristic', 'repeat', 'pfd', 'selected_points', 'mutants',
                             'suite_size', 'median_max_effectiveness', 'error'])
            for c in self.cells:
                writer.writerow([c.heuristic, c.repeat, fmt(c.pfd), c.selected_points, c.mutants,
                                 c.suite_size, fmt(c.median_max_effectiveness), c.error or ''])
        with open(out / 'detection.csv', 'w', newline='') as f:
            writer = csv.writer(f)
            writer.writerow(['fault'] + list(self.heuristics))
            for fault, row in zip(self.faults, self.detection_matrix()):
                writer.writerow([fault.describe()] + [fmt(v) for v in row])
        with open(out / 'timings.csv', 'w', newline='') as f:
            writer = csv.writer(f)
            writer.writerow(['heuristic', 'repeat'] + list(TIMING_KEYS) + ['total'])
            for c in self.cells:
                if c.ok:
                    writer.writerow([c.heuristic, c.repeat] + [fmt(c.timings[k]) for k in TIMING_KEYS]
                                    + [fmt(c.generation_time)])
        for c in self.cells:
            save_json(c.to_dict(), out / 'cells' / f"{c.heuristic}-r{c.repeat:02d}.json")
        logger.info("Wrote campaign report to %s", out)
        return out


def _campaign_models(cfg: CampaignConfig) -> Tuple[PlantModel, FaultyModel, List[FaultSpec], List[FaultyModel]]:
    reference = cfg.model
    implementation = apply_fault(reference, cfg.implementation_fault)
    faults = generate_fault_corpus(reference, cfg.signal, cfg.faults_per_operator, seed=cfg.seed)
    return reference, implementation, faults, fault_variants(reference, faults)


def run_campaign(cfg: CampaignConfig, report_dir: Optional[Union[str, Path]] = None) -> ExperimentReport:
    """Run every (heuristic, repeat) cell of a campaign

    A failing cell is recorded with its error message and the campaign
    carries on with the next one. When a repeat cannot even be prepared
    all of its cells carry that error.
    """
    reference, implementation, faults, variants = _campaign_models(cfg)
    logger.info("Campaign: %d faults, heuristics %s, %d repeats", len(faults),
                ', '.join(cfg.heuristics), cfg.repeats)
    cells: List[CellResult] = []
    seed_pfd, seed_eff = [], []
    for repeat in range(cfg.repeats):
        try:
            ctx = prepare_repeat(cfg, repeat, reference, implementation, variants)
        except QTestGenError as e:
            logger.error("Repeat %d could not be prepared: %s", repeat, e)
            cells.extend(CellResult(h, repeat, error=f"Seed suite preparation failed: {e}")
                         for h in cfg.heuristics)
            continue
        seed_pfd.append(ctx.seed_pfd)
        seed_eff.append(ctx.seed_effectiveness)

        def cell_for(heuristic: str) -> CellResult:
            return run_cell(cfg, ctx, heuristic, reference, implementation, variants)

        if cfg.workers > 1 and len(cfg.heuristics) > 1:
            with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
                cells.extend(pool.map(cell_for, cfg.heuristics))
        else:
            cells.extend(cell_for(h) for h in cfg.heuristics)

    report = ExperimentReport(cfg, faults, cells, seed_pfd, seed_eff)
    if report_dir is not None:
        report.write(report_dir)
    return report


# Sweeps over the decomposition parameters

def _single_cell(cfg: CampaignConfig, heuristic: str, repeat: int = 0) -> CellResult:
    reference, implementation, _, variants = _campaign_models(cfg)
    ctx = prepare_repeat(cfg, repeat, reference, implementation, variants)
    return run_cell(cfg, ctx, heuristic, reference, implementation, variants)


def problem_size_sweep(cfg: CampaignConfig, sizes: Sequence[int],
                       heuristic: Optional[str] = None) -> List[Dict[str, object]]:
    """Physical qubits, fitness, PFD and time per sub-problem size n"""
    heuristic = heuristic or cfg.heuristics[0]
    rows = []
    for size in sizes:
        swept = replace(cfg, decomposition=replace(cfg.decomposition, n=int(size)))
        cell = _single_cell(swept, heuristic)
        qubits = embedding_stats(embed_clique(int(size), build_chimera(chimera_size_for(int(size)))))[0]
        rows.append({'size': int(size), 'physical_qubits': qubits, 'fitness': cell.fitness,
                     'pfd': cell.pfd, 'seconds': cell.generation_time, 'error': cell.error})
        logger.info("Problem size %d: pfd %s", size, cell.pfd)
    return rows


def subproblem_sweep(cfg: CampaignConfig, counts: Sequence[int],
                     heuristic: Optional[str] = None) -> List[Dict[str, object]]:
    """PFD and time per number of sub-problems m at fixed n"""
    heuristic = heuristic or cfg.heuristics[0]
    rows = []
    for m in counts:
        swept = replace(cfg, decomposition=replace(cfg.decomposition, m=int(m)))
        cell = _single_cell(swept, heuristic)
        rows.append({'m': int(m), 'pfd': cell.pfd, 'solver_calls': cell.solver_calls,
                     'seconds': cell.generation_time, 'error': cell.error})
    return rows


def export_sweep_csv(rows: Sequence[Mapping[str, object]], path: Union[str, Path]) -> None:
    if not rows:
        return
    keys = list(rows[0])
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(keys)
        for row in rows:
            writer.writerow([fmt(v) if isinstance(v, float) else ('' if v is None else v)
                             for v in (row[k] for k in keys)])
