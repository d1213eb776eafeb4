"""
qubo_testgen.trajectory - Seed test case generation

Test inputs are bounded, rate-limited trajectories sampled on a uniform
grid. Seeds are produced by drawing random control points that respect the
rate limit and joining them with a monotone piecewise cubic interpolant.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import InfeasibleError, SpecificationError
from .utils import SeedLike, make_rng, window_bounds

logger = logging.getLogger(__name__)

# Slack for float comparisons against bounds and rate limits
TOLERANCE = 1e-9

DEFAULT_SAMPLE_PERIOD = 0.01
DEFAULT_CONTROL_POINTS = 10


@dataclass(frozen=True)
class SignalSpec:
    """Bounds, rate limit and sampling grid of one signal"""

    name: str
    r_min: float
    r_max: float
    max_rate: float
    duration: float
    sample_period: float = DEFAULT_SAMPLE_PERIOD

    def __post_init__(self):
        if not self.duration > 0 or not self.sample_period > 0:
            raise SpecificationError(
                f"Signal '{self.name}': duration and sample_period must be positive")
        if not self.r_min < self.r_max:
            raise SpecificationError(
                f"Signal '{self.name}': r_min {self.r_min} must be below r_max {self.r_max}")
        if not self.max_rate >= 0:
            raise SpecificationError(f"Signal '{self.name}': max_rate must be >= 0")
        ratio = self.duration / self.sample_period
        if abs(ratio - round(ratio)) > TOLERANCE * max(1.0, ratio):
            raise SpecificationError(
                f"Signal '{self.name}': duration {self.duration} is not a multiple "
                f"of sample_period {self.sample_period}")

    @property
    def n_samples(self) -> int:
        """Number of sample instants, both ends included"""
        return int(round(self.duration / self.sample_period)) + 1

    @property
    def span(self) -> float:
        return self.r_max - self.r_min

    @property
    def step_limit(self) -> float:
        """Largest change allowed between two neighbouring samples"""
        return self.max_rate * self.sample_period

    def to_dict(self) -> Dict[str, object]:
        return {
            'name': self.name,
            'r_min': self.r_min,
            'r_max': self.r_max,
            'max_rate': self.max_rate,
            'duration': self.duration,
            'sample_period': self.sample_period,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, object]) -> 'SignalSpec':
        try:
            return cls(
                name=str(data['name']),
                r_min=float(data['r_min']),
                r_max=float(data['r_max']),
                max_rate=float(data['max_rate']),
                duration=float(data['duration']),
                sample_period=float(data.get('sample_period', DEFAULT_SAMPLE_PERIOD)),
            )
        except KeyError as e:
            raise SpecificationError(f"Signal spec is missing field {e}") from None


def sample_times(spec: SignalSpec) -> np.ndarray:
    """Sample instants k * sample_period"""
    return np.arange(spec.n_samples) * spec.sample_period


def validate_trajectory(values: np.ndarray, spec: SignalSpec) -> None:
    """Raise SpecificationError unless values satisfy the bounds and rate limit"""
    if values.ndim != 1 or len(values) != spec.n_samples:
        raise SpecificationError(
            f"Signal '{spec.name}': expected {spec.n_samples} samples, got {values.shape}")
    if not np.all(np.isfinite(values)):
        raise SpecificationError(f"Signal '{spec.name}': non-finite sample")
    bad = np.flatnonzero((values < spec.r_min - TOLERANCE) | (values > spec.r_max + TOLERANCE))
    if bad.size:
        k = int(bad[0])
        raise SpecificationError(
            f"Signal '{spec.name}': sample {k} value {values[k]} outside "
            f"[{spec.r_min}, {spec.r_max}]")
    steps = np.abs(np.diff(values))
    bad = np.flatnonzero(steps > spec.step_limit + TOLERANCE)
    if bad.size:
        k = int(bad[0])
        raise SpecificationError(
            f"Signal '{spec.name}': step {k}->{k + 1} of {steps[k]} exceeds rate limit")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Uniformly sampled values of one signal

    Test inputs are validated on construction. Observed outputs are built
    with validate=False since a faulty system may leave its nominal range.
    """

    spec: SignalSpec
    values: np.ndarray
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if self.validate:
            validate_trajectory(values, self.spec)
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    def __len__(self) -> int:
        return len(self.values)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Trajectory):
            return NotImplemented
        return self.spec == other.spec and np.array_equal(self.values, other.values)

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.values)) * self.spec.sample_period


@dataclass(frozen=True, eq=False)
class TestCase:
    """One test case: the mutable input plus inputs held constant"""

    id: str
    input: Trajectory
    fixed_inputs: Mapping[str, Trajectory] = field(default_factory=dict)
    notes: Tuple[str, ...] = ()
    parent: Optional[str] = None

    __test__ = False  # not a pytest class

    def __post_init__(self):
        for name, traj in self.fixed_inputs.items():
            if (not math.isclose(traj.spec.duration, self.input.spec.duration)
                    or not math.isclose(traj.spec.sample_period, self.input.spec.sample_period)):
                raise SpecificationError(
                    f"Case '{self.id}': input '{name}' does not share the sampling grid")

    def __eq__(self, other) -> bool:
        if not isinstance(other, TestCase):
            return NotImplemented
        return (self.id == other.id and self.input == other.input
                and dict(self.fixed_inputs) == dict(other.fixed_inputs)
                and self.notes == other.notes and self.parent == other.parent)

    def with_input(self, trajectory: Trajectory, case_id: Optional[str] = None,
                   notes: Sequence[str] = ()) -> 'TestCase':
        """Copy of this case with a new mutable input"""
        return TestCase(
            id=case_id or self.id,
            input=trajectory,
            fixed_inputs=dict(self.fixed_inputs),
            notes=self.notes + tuple(notes),
            parent=self.id if case_id and case_id != self.id else self.parent,
        )


class TestSuite:
    """Ordered collection of test cases sharing one signal spec"""

    __test__ = False

    def __init__(self, cases: Sequence[TestCase]):
        self.cases: List[TestCase] = list(cases)
        ids = [case.id for case in self.cases]
        if len(set(ids)) != len(ids):
            raise SpecificationError("Test suite case ids must be unique")
        if self.cases:
            spec = self.cases[0].input.spec
            for case in self.cases[1:]:
                if case.input.spec != spec:
                    raise SpecificationError(
                        f"Case '{case.id}' does not share the suite's signal spec")

    def __len__(self) -> int:
        return len(self.cases)

    def __iter__(self) -> Iterator[TestCase]:
        return iter(self.cases)

    def __getitem__(self, index: int) -> TestCase:
        return self.cases[index]

    def __eq__(self, other) -> bool:
        if not isinstance(other, TestSuite):
            return NotImplemented
        return self.cases == other.cases

    def __repr__(self):
        return f"TestSuite({len(self.cases)} cases)"

    @property
    def spec(self) -> SignalSpec:
        if not self.cases:
            raise SpecificationError("Empty test suite has no signal spec")
        return self.cases[0].input.spec

    @property
    def ids(self) -> List[str]:
        return [case.id for case in self.cases]

    def input_matrix(self) -> np.ndarray:
        """Cases x samples array of the mutable inputs"""
        return np.vstack([case.input.values for case in self.cases])


def generate_control_points(spec: SignalSpec, n_points: int = DEFAULT_CONTROL_POINTS,
                            rng: SeedLike = None) -> List[Tuple[float, float]]:
    """Draw rate-feasible random control points spanning [0, duration]"""
    n = spec.n_samples
    if n_points < 2 or n_points > n:
        raise SpecificationError(
            f"n_points must be in [2, {n}] for signal '{spec.name}', got {n_points}")
    rng = make_rng(rng)

    if n_points > 2:
        interior = np.sort(rng.choice(np.arange(1, n - 1), size=n_points - 2, replace=False))
    else:
        interior = np.array([], dtype=int)
    indices = [0] + [int(k) for k in interior] + [n - 1]

    points = []
    value = float(rng.uniform(spec.r_min, spec.r_max))
    points.append((0.0, value))
    for prev, k in zip(indices[:-1], indices[1:]):
        reach = spec.step_limit * (k - prev)
        lo = max(spec.r_min, value - reach)
        hi = min(spec.r_max, value + reach)
        value = float(rng.uniform(lo, hi)) if hi > lo else lo
        points.append((k * spec.sample_period, value))
    # Last point sits exactly on the duration
    points[-1] = (spec.duration, points[-1][1])
    return points


def _rate_limit(y: np.ndarray, step: float) -> np.ndarray:
    """Limit neighbouring differences to step while keeping both ends

    A forward pass from the first value followed by a backward pass from the
    last value; both ends are preserved whenever they are reachable.
    """
    if y.size < 2 or np.all(np.abs(np.diff(y)) <= step):
        return y
    first, last = y[0], y[-1]
    out = y.copy()
    for k in range(1, len(out)):
        out[k] = min(max(out[k], out[k - 1] - step), out[k - 1] + step)
    out[-1] = last
    for k in range(len(out) - 2, -1, -1):
        out[k] = min(max(out[k], out[k + 1] - step), out[k + 1] + step)
    out[0] = first
    return out


def fit_segment(spec: SignalSpec, knots: Sequence[Tuple[int, float]]) -> np.ndarray:
    """Interpolate sample values from the first to the last knot index

    Knots are (sample index, value) pairs with strictly increasing indices.
    Returns values for indices knots[0][0] .. knots[-1][0] inclusive.
    """
    idx = np.array([k for k, _ in knots], dtype=int)
    vals = np.array([v for _, v in knots], dtype=float)
    if np.any(np.diff(idx) <= 0):
        raise SpecificationError("Control points must have strictly increasing times")
    step = spec.step_limit
    for j in range(len(idx) - 1):
        allowed = step * (idx[j + 1] - idx[j])
        if abs(vals[j + 1] - vals[j]) > allowed + TOLERANCE:
            t0, t1 = idx[j] * spec.sample_period, idx[j + 1] * spec.sample_period
            raise InfeasibleError(
                f"Control points ({t0:g}, {vals[j]:g}) and ({t1:g}, {vals[j + 1]:g}) "
                f"exceed max_rate {spec.max_rate:g}", pair=(j, j + 1))
    if len(idx) == 1:
        return vals.copy()

    grid = np.arange(idx[0], idx[-1] + 1)
    curve = PchipInterpolator(idx, vals)(grid)
    out = np.empty_like(curve)
    for j in range(len(idx) - 1):
        a, b = idx[j] - idx[0], idx[j + 1] - idx[0]
        lo, hi = min(vals[j], vals[j + 1]), max(vals[j], vals[j + 1])
        seg = np.clip(curve[a:b + 1], lo, hi)
        seg[0], seg[-1] = vals[j], vals[j + 1]
        out[a:b + 1] = _rate_limit(seg, step)
    return out


def fit_trajectory(points: Sequence[Tuple[float, float]], spec: SignalSpec) -> Trajectory:
    """Join control points with a monotone, rate-limited curve

    Times are snapped to the nearest sample instant. Outside the first and
    last control point the curve is held constant.
    """
    if not points:
        raise SpecificationError("fit_trajectory needs at least one control point")
    knots = []
    for t, v in points:
        if v < spec.r_min - TOLERANCE or v > spec.r_max + TOLERANCE:
            raise SpecificationError(f"Control point ({t}, {v}) outside signal bounds")
        k = int(round(t / spec.sample_period))
        if k < 0 or k >= spec.n_samples:
            raise SpecificationError(f"Control point time {t} outside [0, {spec.duration}]")
        knots.append((k, float(v)))

    n = spec.n_samples
    inner = fit_segment(spec, knots)
    first, last = knots[0][0], knots[-1][0]
    values = np.empty(n)
    values[:first] = knots[0][1]
    values[first:last + 1] = inner
    values[last + 1:] = knots[-1][1]
    return Trajectory(spec, np.clip(values, spec.r_min, spec.r_max))


def generate_suite(spec: SignalSpec, suite_size: int,
                   n_points: int = DEFAULT_CONTROL_POINTS,
                   rng: SeedLike = None, prefix: str = 'case') -> TestSuite:
    """Generate suite_size seed test cases"""
    if suite_size < 1:
        raise SpecificationError(f"suite_size must be >= 1, got {suite_size}")
    rng = make_rng(rng)
    cases = []
    for i in range(suite_size):
        points = generate_control_points(spec, n_points, rng)
        cases.append(TestCase(id=f"{prefix}-{i:03d}", input=fit_trajectory(points, spec)))
    logger.debug("Generated %d seed cases for signal '%s'", suite_size, spec.name)
    return TestSuite(cases)


def slice_values(trajectory: Trajectory, center_index: int, radius: int) -> List[float]:
    """Values in the window of radius samples around center_index, clamped at the edges"""
    n = len(trajectory)
    if not 0 <= center_index < n:
        raise SpecificationError(f"center_index {center_index} outside [0, {n})")
    lo, hi = window_bounds(n, center_index, radius)
    return [float(v) for v in trajectory.values[lo:hi + 1]]
