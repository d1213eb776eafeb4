"""
qubo_testgen.mutate - Mutation of selected data points

For every selected sample the correlation between input values and
effectiveness over a surrounding window decides the direction of the
mutation: positive correlation pushes the value towards r_max, negative
towards r_min. The mutated value is then embedded into the trajectory by
re-fitting a smoothing region around it, so the result stays within bounds
and rate limits.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ConfigurationError, InsufficientDataError, ShapeError, SpecificationError
from .metrics import DEFAULT_DIVERSITY_RADIUS, MetricSeries
from .qubo import Selection
from .trajectory import TOLERANCE, SignalSpec, TestCase, TestSuite, Trajectory, fit_segment
from .utils import window_bounds

logger = logging.getLogger(__name__)

DEFAULT_SMOOTHING_RADIUS = 100
MUTANT_SUFFIX = '-m'


@dataclass(frozen=True)
class MutationConfig:
    """Correlation window, smoothing region and suite cap of the mutation step"""

    window_radius: int = DEFAULT_DIVERSITY_RADIUS
    smoothing_radius: int = DEFAULT_SMOOTHING_RADIUS
    d_min: float = 2.0
    cap: int = 50

    def __post_init__(self):
        if self.window_radius < 1:
            raise ConfigurationError(f"window_radius must be >= 1, got {self.window_radius}")
        if self.smoothing_radius < 0:
            raise ConfigurationError(f"smoothing_radius must be >= 0, got {self.smoothing_radius}")
        if self.d_min < 0:
            raise ConfigurationError(f"d_min must be >= 0, got {self.d_min}")
        if self.cap < 1:
            raise ConfigurationError(f"cap must be >= 1, got {self.cap}")

    def to_dict(self) -> Dict[str, object]:
        return {'window_radius': self.window_radius, 'smoothing_radius': self.smoothing_radius,
                'd_min': self.d_min, 'cap': self.cap}


@dataclass(frozen=True)
class MutationPoint:
    index: int
    correlation: float
    mutated_value: float
    original_value: float


@dataclass(frozen=True)
class MutationPlan:
    """Planned mutations of one case, sorted by sample index"""

    case_id: str
    points: Tuple[MutationPoint, ...]
    smoothing_radius: int = DEFAULT_SMOOTHING_RADIUS

    def __post_init__(self):
        points = tuple(self.points)
        indices = [p.index for p in points]
        if indices != sorted(set(indices)):
            raise ConfigurationError(f"Mutation plan of '{self.case_id}': indices must be sorted and unique")
        for p in points:
            if not -1.0 <= p.correlation <= 1.0:
                raise ConfigurationError(
                    f"Mutation plan of '{self.case_id}': correlation {p.correlation} at index {p.index}")
        if self.smoothing_radius < 0:
            raise ConfigurationError("smoothing_radius must be >= 0")
        object.__setattr__(self, 'points', points)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def indices(self) -> List[int]:
        return [p.index for p in self.points]

    def to_dict(self) -> Dict[str, object]:
        return {
            'case_id': self.case_id,
            'smoothing_radius': self.smoothing_radius,
            'points': [{'index': p.index, 'correlation': p.correlation,
                        'original_value': p.original_value, 'mutated_value': p.mutated_value}
                       for p in self.points],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, object]) -> 'MutationPlan':
        try:
            points = tuple(MutationPoint(int(p['index']), float(p['correlation']),
                                         float(p['mutated_value']), float(p['original_value']))
                           for p in data['points'])
            return cls(str(data['case_id']), points, int(data.get('smoothing_radius',
                                                                  DEFAULT_SMOOTHING_RADIUS)))
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, ConfigurationError):
                raise
            raise ConfigurationError(f"Malformed mutation plan: {e}") from e


def correlation(window_values: Sequence[float], window_effectiveness: Sequence[float]) -> float:
    """Pearson correlation, 0 when either series is constant"""
    x = np.asarray(window_values, dtype=float)
    y = np.asarray(window_effectiveness, dtype=float)
    if x.shape != y.shape:
        raise ShapeError(f"Correlation windows of length {x.size} and {y.size} differ")
    if x.size < 2:
        raise InsufficientDataError("Correlation needs windows of at least two samples")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        return 0.0
    c = float(np.corrcoef(x, y)[0, 1])
    return float(np.clip(c, -1.0, 1.0)) if np.isfinite(c) else 0.0


def mutate_point(value: float, c: float, spec: SignalSpec) -> float:
    """Bias a value towards r_max (c > 0) or r_min (c < 0)

    u = (value - r_min) / (r_max - r_min) is raised to the power 1 - c and
    rescaled. 0 ** 0 is taken as 1.
    """
    if value < spec.r_min - TOLERANCE or value > spec.r_max + TOLERANCE:
        raise SpecificationError(f"Value {value} outside [{spec.r_min}, {spec.r_max}]")
    if not -1.0 - TOLERANCE <= c <= 1.0 + TOLERANCE:
        raise SpecificationError(f"Correlation {c} outside [-1, 1]")
    u = min(max((value - spec.r_min) / spec.span, 0.0), 1.0)
    exponent = 1.0 - min(max(c, -1.0), 1.0)
    scaled = 1.0 if exponent == 0.0 else u ** exponent
    return float(min(max(scaled * spec.span + spec.r_min, spec.r_min), spec.r_max))


def _selected_indices(selection: Union[Selection, Sequence[int]]) -> List[int]:
    if isinstance(selection, Selection):
        return selection.indices
    return sorted({int(i) for i in selection})


def plan_mutations(case: TestCase, selection: Union[Selection, Sequence[int]],
                   metrics: MetricSeries, window_radius: int = DEFAULT_DIVERSITY_RADIUS,
                   spec: Optional[SignalSpec] = None, d_min: float = 0.0,
                   smoothing_radius: int = DEFAULT_SMOOTHING_RADIUS) -> MutationPlan:
    """Correlation and mutated value for every selected index of a case

    Indices closer than d_min seconds to an earlier kept index are dropped.
    """
    spec = spec or case.input.spec
    values = case.input.values
    n = len(values)
    if len(metrics) != n:
        raise ShapeError(f"Metrics of '{metrics.case_id}' have {len(metrics)} samples, "
                         f"case '{case.id}' has {n}")
    indices = _selected_indices(selection)
    for i in indices:
        if not 0 <= i < n:
            raise ShapeError(f"Selected index {i} outside case '{case.id}' of {n} samples")

    kept: List[int] = []
    for i in indices:
        if kept and (i - kept[-1]) * spec.sample_period < d_min - 1e-9:
            continue
        kept.append(i)
    if len(kept) < len(indices):
        logger.warning("Case '%s': dropped %d selected points closer than d_min %g s",
                       case.id, len(indices) - len(kept), d_min)

    points = []
    for i in kept:
        lo, hi = window_bounds(n, i, window_radius)
        c = correlation(values[lo:hi + 1], metrics.effectiveness[lo:hi + 1])
        points.append(MutationPoint(i, c, mutate_point(float(values[i]), c, spec), float(values[i])))
    return MutationPlan(case.id, tuple(points), smoothing_radius)


def _reach(anchor: Optional[Tuple[int, float]], index: int, step: float) -> Tuple[float, float]:
    if anchor is None:
        return -np.inf, np.inf
    k, v = anchor
    return v - step * abs(index - k), v + step * abs(index - k)


def apply_mutations(case: TestCase, plan: MutationPlan, case_id: Optional[str] = None) -> TestCase:
    """Embed the planned values into the case's input trajectory

    Each region [index - radius, index + radius] is re-fitted between the
    samples just outside it, or between the previously mutated index and the
    sample after it. Without an anchor on one side the region is held at the
    mutated value up to the trajectory edge.
    Planned values outside the signal range are rejected.
    """
    if not plan.points:
        return case
    spec = case.input.spec
    values = np.array(case.input.values, dtype=float)
    n = len(values)
    step = spec.step_limit
    radius = plan.smoothing_radius
    notes = []
    previous = None
    for p in plan.points:
        i = p.index
        if not 0 <= i < n:
            raise ShapeError(f"Mutation index {i} outside case '{case.id}' of {n} samples")
        if not spec.r_min - TOLERANCE <= p.mutated_value <= spec.r_max + TOLERANCE:
            raise SpecificationError(f"Case '{case.id}': planned value {p.mutated_value} at index {i} "
                                     f"outside [{spec.r_min}, {spec.r_max}]")
        a = i - radius - 1
        if previous is not None:
            a = max(a, previous)
        b = i + radius + 1
        left = (a, float(values[a])) if a >= 0 else None
        right = (b, float(values[b])) if b < n else None

        lo, hi = spec.r_min, spec.r_max
        for anchor in (left, right):
            r_lo, r_hi = _reach(anchor, i, step)
            lo, hi = max(lo, r_lo), min(hi, r_hi)
        target = min(max(p.mutated_value, lo), hi)
        if abs(target - p.mutated_value) > TOLERANCE:
            note = (f"mutation at index {i}: value {p.mutated_value:.6f} pulled to "
                    f"{target:.6f} to respect max_rate {spec.max_rate:g}")
            logger.warning("Case '%s': %s", case.id, note)
            notes.append(note)

        knots = [k for k in (left, (i, target), right) if k is not None]
        segment = fit_segment(spec, knots)
        start, stop = knots[0][0], knots[-1][0]
        values[start:stop + 1] = segment
        if left is None:
            values[:i] = target
        if right is None:
            values[i + 1:] = target
        values[i] = target
        previous = i

    trajectory = Trajectory(spec, values)
    return case.with_input(trajectory, case_id=case_id or f"{case.id}{MUTANT_SUFFIX}", notes=notes)


def mutate_suite(suite: TestSuite, selections: Sequence[Union[Selection, Sequence[int]]],
                 metrics: Sequence[MetricSeries],
                 cfg: MutationConfig = MutationConfig()) -> Tuple[List[TestCase], List[MutationPlan]]:
    """Mutants and plans for every case that has at least one selected point"""
    if not (len(suite) == len(selections) == len(metrics)):
        raise ShapeError("Suite, selections and metrics differ in length")
    mutants, plans = [], []
    for case, selection, series in zip(suite, selections, metrics):
        plan = plan_mutations(case, selection, series, cfg.window_radius, suite.spec,
                              cfg.d_min, cfg.smoothing_radius)
        plans.append(plan)
        if not plan.points:
            logger.debug("Case '%s' has no selected points, no mutant", case.id)
            continue
        mutants.append(apply_mutations(case, plan))
    return mutants, plans


def enrich_suite(seed: TestSuite, mutants: Sequence[TestCase], scores: Mapping[str, float],
                 cap: int) -> TestSuite:
    """Append mutants and keep the cap cases with the highest score

    Ties keep seed cases before mutants and earlier cases before later ones;
    the survivors keep their original order.
    """
    cases = list(seed) + list(mutants)
    if len(cases) <= cap:
        return TestSuite(cases)
    try:
        ranked = sorted(range(len(cases)), key=lambda k: (-float(scores[cases[k].id]), k))
    except KeyError as e:
        raise ConfigurationError(f"No score for case {e}") from e
    keep = sorted(ranked[:cap])
    dropped = len(cases) - cap
    logger.info("Enriched suite capped at %d cases, %d dropped", cap, dropped)
    return TestSuite([cases[k] for k in keep])
