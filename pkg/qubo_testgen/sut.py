"""
qubo_testgen.sut - Systems under test, fault injection and the test oracle

Two analytic plants stand in for simulation models:

  engine_map           fuel = gain * clamp(pedal, in_min, in_max)
  first_order_tracker  out[k+1] = out[k] + (dt / tau) * (gain * in[k] - out[k]),
                       out[0] = 0, input clamped to [in_min, in_max]

A fault wraps a plant and perturbs either one of its parameters, its input
clamp or its output. Exactly one fault is inserted per faulty variant.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Union

import numpy as np
from scipy.signal import lfilter

from .errors import ConfigurationError, ShapeError
from .trajectory import SignalSpec, TestCase, TestSuite, Trajectory
from .utils import SeedLike, make_rng

logger = logging.getLogger(__name__)

DEFAULT_EPSILON = 0.1

KINDS = {
    'engine_map': {'required': ('gain',),
                   'defaults': {'gain': 5.0, 'in_min': 0.0, 'in_max': 1.0}},
    'first_order_tracker': {'required': ('tau', 'gain'),
                            'defaults': {'tau': 0.5, 'gain': 1.0,
                                         'in_min': -math.inf, 'in_max': math.inf}},
}

# Parameters an arithmetic replacement may target, in corpus order
TUNABLE = {
    'engine_map': ('gain', 'in_max'),
    'first_order_tracker': ('gain', 'tau'),
}

OPERATORS = ('delay', 'noise', 'value_drop', 'arithmetic_replacement', 'logical_replacement')
ARITHMETIC_OPS = ('scale', 'offset', 'negate')


@dataclass(frozen=True)
class PlantModel:
    """Reference behaviour of a system under test"""

    kind: str
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"Unknown model kind '{self.kind}', expected one of {sorted(KINDS)}")
        unknown = set(self.params) - set(KINDS[self.kind]['defaults'])
        if unknown:
            raise ConfigurationError(f"Unknown parameters for {self.kind}: {sorted(unknown)}")
        params = dict(KINDS[self.kind]['defaults'])
        params.update({k: float(v) for k, v in self.params.items()})
        if self.kind == 'first_order_tracker' and not params['tau'] > 0:
            raise ConfigurationError(f"Tracker time constant must be positive, got {params['tau']}")
        if not params['in_min'] < params['in_max']:
            raise ConfigurationError("Model input clamp needs in_min < in_max")
        object.__setattr__(self, 'params', params)

    def __hash__(self):
        return hash((self.kind, tuple(sorted(self.params.items()))))

    @property
    def name(self) -> str:
        return self.kind

    def replace(self, **params: float) -> 'PlantModel':
        merged = dict(self.params)
        merged.update(params)
        return PlantModel(self.kind, merged)

    def simulate(self, case: TestCase) -> Trajectory:
        return simulate(self, case)

    def to_dict(self) -> Dict[str, object]:
        return {'kind': self.kind,
                'params': {k: v for k, v in self.params.items() if math.isfinite(v)}}

    @classmethod
    def from_dict(cls, data: Mapping[str, object]) -> 'PlantModel':
        if 'kind' not in data:
            raise ConfigurationError("Model document is missing 'kind'")
        return cls(str(data['kind']), dict(data.get('params') or {}))


def _check_arity(model: PlantModel, case: TestCase) -> None:
    if case.fixed_inputs:
        raise ConfigurationError(
            f"Model {model.kind} takes one input, case '{case.id}' supplies "
            f"{1 + len(case.fixed_inputs)}")


def _clamp(values: np.ndarray, lower: float, upper: float, flip: Optional[str] = None,
           threshold: float = 0.0) -> np.ndarray:
    # Two comparisons: lower bound first, then upper bound. A flipped site
    # compares the other way round against threshold.
    if flip == 'lower':
        values = np.where(values > threshold, threshold, values)
    else:
        values = np.where(values < lower, lower, values)
    if flip == 'upper':
        values = np.where(values < threshold, threshold, values)
    else:
        values = np.where(values > upper, upper, values)
    return values


def _run(model: PlantModel, inputs: np.ndarray, sample_period: float,
         flip: Optional[str] = None, threshold: float = 0.0) -> np.ndarray:
    p = model.params
    x = _clamp(np.asarray(inputs, dtype=float), p['in_min'], p['in_max'], flip, threshold)
    if model.kind == 'engine_map':
        return p['gain'] * x
    a = sample_period / p['tau']
    return lfilter([0.0, a * p['gain']], [1.0, a - 1.0], x)


def output_spec(model: 'AnyModel', input_spec: SignalSpec) -> SignalSpec:
    """Nominal bounds and rate limit of the reference output"""
    base = model.reference if isinstance(model, FaultyModel) else model
    p = base.params
    lo, hi = max(input_spec.r_min, p['in_min']), min(input_spec.r_max, p['in_max'])
    ends = sorted((p['gain'] * lo, p['gain'] * hi))
    if base.kind == 'engine_map':
        r_min, r_max = ends
        max_rate = abs(p['gain']) * input_spec.max_rate
    else:
        r_min, r_max = min(0.0, ends[0]), max(0.0, ends[1])
        max_rate = (r_max - r_min) / p['tau']
    if not r_min < r_max:
        r_max = r_min + 1.0
    return SignalSpec(f"{base.kind}_output", r_min, r_max, max_rate,
                      input_spec.duration, input_spec.sample_period)


@dataclass(frozen=True)
class FaultSpec:
    """One fault operator and its parameters

    delay                  k: samples
    noise                  sigma, seed
    value_drop             start, stop (sample indices), value (optional held value)
    arithmetic_replacement target (parameter name or 'output'), op, operand
    logical_replacement    site ('upper' or 'lower'), threshold
    """

    operator: str
    params: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.operator not in OPERATORS:
            raise ConfigurationError(f"Unknown fault operator '{self.operator}'")
        p = dict(self.params)
        if self.operator == 'delay':
            p['k'] = int(p.get('k', 0))
            if p['k'] < 0:
                raise ConfigurationError(f"Delay must be >= 0 samples, got {p['k']}")
        elif self.operator == 'noise':
            p['sigma'] = float(p.get('sigma', 0.0))
            p['seed'] = int(p.get('seed', 0))
            if p['sigma'] < 0:
                raise ConfigurationError(f"Noise sigma must be >= 0, got {p['sigma']}")
        elif self.operator == 'value_drop':
            p['start'], p['stop'] = int(p.get('start', 0)), int(p.get('stop', 0))
            if p['start'] < 0 or p['stop'] < p['start']:
                raise ConfigurationError(f"Value drop interval [{p['start']}, {p['stop']}) is invalid")
            if p.get('value') is not None:
                p['value'] = float(p['value'])
        elif self.operator == 'arithmetic_replacement':
            if p.get('op', 'scale') not in ARITHMETIC_OPS:
                raise ConfigurationError(f"Unknown arithmetic op '{p.get('op')}'")
            p['target'] = str(p.get('target', 'gain'))
            p['op'] = p.get('op', 'scale')
            p['operand'] = float(p.get('operand', 1.0 if p['op'] == 'scale' else 0.0))
        else:
            if p.get('site') not in ('upper', 'lower'):
                raise ConfigurationError(f"Logical replacement site must be 'upper' or 'lower', got {p.get('site')!r}")
            p['threshold'] = float(p.get('threshold', 0.0))
        object.__setattr__(self, 'params', p)

    def __hash__(self):
        return hash((self.operator, tuple(sorted((k, repr(v)) for k, v in self.params.items()))))

    def to_dict(self) -> Dict[str, object]:
        return {'operator': self.operator, 'params': dict(self.params)}

    @classmethod
    def from_dict(cls, data: Mapping[str, object]) -> 'FaultSpec':
        if 'operator' not in data:
            raise ConfigurationError("Fault record is missing 'operator'")
        return cls(str(data['operator']), dict(data.get('params') or {}))

    def describe(self) -> str:
        args = ', '.join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return f"{self.operator}({args})"


@dataclass(frozen=True)
class FaultyModel:
    """A plant with exactly one fault inserted"""

    reference: PlantModel
    fault: FaultSpec

    @property
    def kind(self) -> str:
        return self.reference.kind

    @property
    def name(self) -> str:
        return f"{self.reference.kind}:{self.fault.describe()}"

    def simulate(self, case: TestCase) -> Trajectory:
        return simulate(self, case)


AnyModel = Union[PlantModel, FaultyModel]


def apply_fault(model: AnyModel, fault: FaultSpec) -> FaultyModel:
    """Insert one fault into a reference model"""
    if isinstance(model, FaultyModel):
        raise ConfigurationError("Model already carries a fault; insert one fault at a time")
    if fault.operator == 'arithmetic_replacement':
        target = fault.params['target']
        if target != 'output' and target not in model.params:
            raise ConfigurationError(f"Model {model.kind} has no parameter '{target}'")
        if target == 'tau' and fault.params['op'] != 'scale':
            raise ConfigurationError("Only scaling applies to the tracker time constant")
        if target == 'tau' and not fault.params['operand'] > 0:
            raise ConfigurationError("Scaled time constant must stay positive")
    return FaultyModel(model, fault)


def _arith(value, op: str, operand: float):
    if op == 'scale':
        return value * operand
    if op == 'offset':
        return value + operand
    return -value


def simulate_values(model: AnyModel, inputs: np.ndarray, sample_period: float) -> np.ndarray:
    """Output samples for raw input samples"""
    if isinstance(model, PlantModel):
        return _run(model, inputs, sample_period)

    reference, fault = model.reference, model.fault
    p = fault.params
    if fault.operator == 'logical_replacement':
        return _run(reference, inputs, sample_period, p['site'], p['threshold'])
    if fault.operator == 'arithmetic_replacement' and p['target'] != 'output':
        target = p['target']
        changed = reference.replace(**{target: _arith(reference.params[target], p['op'], p['operand'])})
        return _run(changed, inputs, sample_period)

    out = _run(reference, inputs, sample_period)
    if fault.operator == 'delay':
        k = min(p['k'], len(out))
        if k:
            out = np.concatenate([np.zeros(k), out[:len(out) - k]])
    elif fault.operator == 'noise':
        if p['sigma'] > 0:
            out = out + make_rng(p['seed']).normal(0.0, p['sigma'], size=len(out))
    elif fault.operator == 'value_drop':
        start, stop = min(p['start'], len(out)), min(p['stop'], len(out))
        if stop > start:
            out = out.copy()
            held = p.get('value')
            if held is None:
                held = out[start - 1] if start > 0 else 0.0
            out[start:stop] = held
    else:
        out = _arith(out, p['op'], p['operand'])
    return out


def simulate(model: AnyModel, case: TestCase) -> Trajectory:
    """Run a (possibly faulty) model on a test case"""
    reference = model.reference if isinstance(model, FaultyModel) else model
    _check_arity(reference, case)
    spec = case.input.spec
    values = simulate_values(model, case.input.values, spec.sample_period)
    return Trajectory(output_spec(reference, spec), values, validate=False)


def simulate_suite(model: AnyModel, suite: TestSuite) -> List[Trajectory]:
    return [simulate(model, case) for case in suite]


@dataclass(frozen=True)
class Verdict:
    """Outcome of the epsilon-conformance oracle"""

    passed: bool
    max_distance: float
    first_violation_index: Optional[int]
    epsilon: float


def conformance(observed: Union[Trajectory, np.ndarray], expected: Union[Trajectory, np.ndarray],
                epsilon: float = DEFAULT_EPSILON) -> Verdict:
    """Pass when no sample of observed strays more than epsilon from expected"""
    if epsilon < 0:
        raise ConfigurationError(f"epsilon must be >= 0, got {epsilon}")
    a = observed.values if isinstance(observed, Trajectory) else np.asarray(observed, dtype=float)
    b = expected.values if isinstance(expected, Trajectory) else np.asarray(expected, dtype=float)
    if a.shape != b.shape:
        raise ShapeError(f"Trajectories of length {a.size} and {b.size} cannot be compared")
    if a.size == 0:
        return Verdict(True, 0.0, None, epsilon)
    distance = np.abs(a - b)
    worst = float(distance.max())
    bad = np.flatnonzero(distance > epsilon)
    return Verdict(not bad.size, worst, int(bad[0]) if bad.size else None, epsilon)


def generate_fault_corpus(model: PlantModel, input_spec: SignalSpec, per_operator: int = 10,
                          seed: SeedLike = None) -> List[FaultSpec]:
    """per_operator faults of every operator from a seeded parameter grid"""
    if per_operator < 1:
        raise ConfigurationError(f"per_operator must be >= 1, got {per_operator}")
    rng = make_rng(seed)
    n = input_spec.n_samples
    out_span = output_spec(model, input_spec).span
    grid = np.linspace(0.0, 1.0, per_operator + 2)[1:-1]
    in_lo = max(input_spec.r_min, model.params['in_min'])
    in_hi = min(input_spec.r_max, model.params['in_max'])
    targets = TUNABLE[model.kind] + ('output',)

    corpus = []
    for g in grid:
        corpus.append(FaultSpec('delay', {'k': max(1, int(round(g * n / 10)))}))
    for g in grid:
        corpus.append(FaultSpec('noise', {'sigma': float(out_span * 0.1 * g),
                                          'seed': int(rng.integers(2 ** 31))}))
    for _ in grid:
        length = max(1, int(rng.integers(n // 20 + 1, n // 5 + 2)))
        start = int(rng.integers(1, max(2, n - length)))
        corpus.append(FaultSpec('value_drop', {'start': start, 'stop': min(n, start + length)}))
    for j, g in enumerate(grid):
        target = targets[j % len(targets)]
        if target == 'output':
            params = {'target': 'output', 'op': 'offset', 'operand': float(out_span * 0.05 * (1 + g))}
        else:
            factor = 1.0 + 0.6 * (g - 0.5)
            if abs(factor - 1.0) < 0.02:
                factor = 1.04
            if target == 'in_max':
                # widening the clamp past the input range changes nothing
                factor = 2.0 - factor if factor > 1.0 else factor
            params = {'target': target, 'op': 'scale', 'operand': float(factor)}
        corpus.append(FaultSpec('arithmetic_replacement', params))
    for j, g in enumerate(grid):
        site = ('upper', 'lower')[j % 2]
        threshold = in_lo + (in_hi - in_lo) * (g * 0.5 if site == 'upper' else 0.5 + g * 0.5)
        corpus.append(FaultSpec('logical_replacement', {'site': site, 'threshold': float(threshold)}))
    logger.debug("Generated fault corpus of %d faults for %s", len(corpus), model.kind)
    return corpus


def fault_variants(model: PlantModel, corpus: Sequence[FaultSpec]) -> List[FaultyModel]:
    return [apply_fault(model, fault) for fault in corpus]
