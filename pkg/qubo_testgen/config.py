"""
qubo_testgen.config - Campaign configuration

A campaign is described by one YAML document. Every section is optional and
falls back to the defaults below; unknown keys are rejected so that typos do
not silently run a default campaign.

    signal:       {name, r_min, r_max, max_rate, duration, sample_period}
    model:        {kind, params: {...}}
    implementation_fault: {operator, params: {...}}
    suite_size, control_points, diversity_radius, repeats, epsilon, seed,
    faults_per_operator, workers
    weights:      {w_ef, w_id, w_od, w_num, penalty, d_min}
    decomposition: {m, n, coverage, final_capacity}
    heuristics:   [simulated_annealing, evolutionary, random, quantum_remote]
    decomposed_heuristics: [...]
    anneal:       {num_reads, sweeps, initial_temperature, final_temperature}
    evolutionary: {population, generations}
    random:       {draws}
    remote:       {endpoint, timeout, num_reads, max_retries}
    mutation:     {window_radius, smoothing_radius, cap}
"""

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Sequence, Tuple, Union

import yaml

from .decompose import DecompositionConfig
from .errors import ConfigurationError, QTestGenError
from .metrics import DEFAULT_DIVERSITY_RADIUS
from .mutate import MutationConfig
from .qubo import Weights
from .solvers import AnnealParams, canonical_heuristic
from .sut import DEFAULT_EPSILON, FaultSpec, PlantModel
from .trajectory import DEFAULT_CONTROL_POINTS, SignalSpec

logger = logging.getLogger(__name__)

DEFAULT_SIGNAL = SignalSpec('pedal', 0.0, 1.0, max_rate=1.0, duration=10.0)
DEFAULT_IMPLEMENTATION_FAULT = FaultSpec('arithmetic_replacement',
                                         {'target': 'gain', 'op': 'scale', 'operand': 1.5})


@dataclass(frozen=True)
class RemoteConfig:
    endpoint: Optional[str] = None
    timeout: float = 30.0
    num_reads: int = 100
    max_retries: int = 2


@dataclass(frozen=True)
class CampaignConfig:
    """Everything needed to reproduce one campaign"""

    signal: SignalSpec = DEFAULT_SIGNAL
    model: PlantModel = field(default_factory=lambda: PlantModel('engine_map'))
    implementation_fault: FaultSpec = DEFAULT_IMPLEMENTATION_FAULT
    suite_size: int = 50
    control_points: int = DEFAULT_CONTROL_POINTS
    diversity_radius: int = DEFAULT_DIVERSITY_RADIUS
    weights: Weights = Weights()
    decomposition: DecompositionConfig = DecompositionConfig()
    heuristics: Tuple[str, ...] = ('simulated_annealing', 'random')
    decomposed_heuristics: Tuple[str, ...] = ('simulated_annealing', 'quantum_remote')
    anneal: AnnealParams = AnnealParams()
    population: int = 40
    generations: int = 100
    draws: int = 100
    remote: RemoteConfig = RemoteConfig()
    mutation: MutationConfig = MutationConfig()
    repeats: int = 10
    epsilon: float = DEFAULT_EPSILON
    seed: int = 0
    faults_per_operator: int = 10
    workers: int = 1

    def __post_init__(self):
        if not self.heuristics:
            raise ConfigurationError("A campaign needs at least one heuristic")
        object.__setattr__(self, 'heuristics',
                           tuple(canonical_heuristic(h) for h in self.heuristics))
        object.__setattr__(self, 'decomposed_heuristics',
                           tuple(canonical_heuristic(h) for h in self.decomposed_heuristics))
        if len(set(self.heuristics)) != len(self.heuristics):
            raise ConfigurationError("Heuristics must not repeat")
        if 'quantum_remote' in self.heuristics and not self.remote.endpoint:
            raise ConfigurationError("Heuristic quantum_remote needs remote.endpoint")
        if self.repeats < 1:
            raise ConfigurationError(f"repeats must be >= 1, got {self.repeats}")
        if self.suite_size < 2:
            raise ConfigurationError(f"suite_size must be >= 2 for diversity, got {self.suite_size}")
        if self.epsilon < 0:
            raise ConfigurationError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.workers < 1:
            raise ConfigurationError(f"workers must be >= 1, got {self.workers}")
        if self.mutation.d_min != self.weights.d_min:
            object.__setattr__(self, 'mutation', replace(self.mutation, d_min=self.weights.d_min))

    def to_dict(self) -> Dict[str, Any]:
        """Plain document of the configuration, loadable by campaign_config_from_dict"""
        return {
            'signal': self.signal.to_dict(),
            'model': self.model.to_dict(),
            'implementation_fault': self.implementation_fault.to_dict(),
            'suite_size': self.suite_size,
            'control_points': self.control_points,
            'diversity_radius': self.diversity_radius,
            'weights': self.weights.to_dict(),
            'decomposition': {'m': self.decomposition.m, 'n': self.decomposition.n,
                              'coverage': self.decomposition.coverage,
                              'final_capacity': self.decomposition.final_capacity},
            'heuristics': list(self.heuristics),
            'decomposed_heuristics': list(self.decomposed_heuristics),
            'anneal': {'num_reads': self.anneal.num_reads, 'sweeps': self.anneal.sweeps,
                       'initial_temperature': self.anneal.initial_temperature,
                       'final_temperature': self.anneal.final_temperature},
            'evolutionary': {'population': self.population, 'generations': self.generations},
            'random': {'draws': self.draws},
            'remote': {'endpoint': self.remote.endpoint, 'timeout': self.remote.timeout,
                       'num_reads': self.remote.num_reads, 'max_retries': self.remote.max_retries},
            'mutation': {'window_radius': self.mutation.window_radius,
                         'smoothing_radius': self.mutation.smoothing_radius,
                         'cap': self.mutation.cap},
            'repeats': self.repeats,
            'epsilon': self.epsilon,
            'seed': self.seed,
            'faults_per_operator': self.faults_per_operator,
            'workers': self.workers,
        }


_SECTIONS = {
    'decomposition': ('m', 'n', 'coverage', 'final_capacity', 'workers'),
    'anneal': ('num_reads', 'sweeps', 'initial_temperature', 'final_temperature'),
    'evolutionary': ('population', 'generations'),
    'random': ('draws',),
    'remote': ('endpoint', 'timeout', 'num_reads', 'max_retries'),
    'mutation': ('window_radius', 'smoothing_radius', 'cap'),
}
_SCALARS = {
    'suite_size': int, 'control_points': int, 'diversity_radius': int, 'repeats': int,
    'epsilon': float, 'seed': int, 'faults_per_operator': int, 'workers': int,
}


def _section(data: Mapping[str, Any], name: str) -> Dict[str, Any]:
    section = data.get(name) or {}
    if not isinstance(section, Mapping):
        raise ConfigurationError(f"Section '{name}' must be a mapping")
    unknown = set(section) - set(_SECTIONS[name])
    if unknown:
        raise ConfigurationError(f"Unknown key(s) in section '{name}': {sorted(unknown)}")
    return dict(section)


def campaign_config_from_dict(data: Optional[Mapping[str, Any]]) -> CampaignConfig:
    """Build a CampaignConfig from a parsed document"""
    data = data or {}
    if not isinstance(data, Mapping):
        raise ConfigurationError("Campaign configuration must be a mapping")
    known = set(_SECTIONS) | set(_SCALARS) | {
        'signal', 'model', 'implementation_fault', 'weights', 'heuristics', 'decomposed_heuristics'}
    unknown = set(data) - known
    if unknown:
        raise ConfigurationError(f"Unknown configuration key(s): {sorted(unknown)}")

    kwargs: Dict[str, Any] = {}
    try:
        if 'signal' in data:
            kwargs['signal'] = SignalSpec.from_dict(data['signal'])
        if 'model' in data:
            kwargs['model'] = PlantModel.from_dict(data['model'])
        if 'implementation_fault' in data:
            kwargs['implementation_fault'] = FaultSpec.from_dict(data['implementation_fault'])
        if 'weights' in data:
            kwargs['weights'] = Weights.from_dict(data['weights'] or {})
        for key in ('heuristics', 'decomposed_heuristics'):
            if key in data:
                value = data[key]
                kwargs[key] = tuple([value] if isinstance(value, str) else value or ())
        for key, cast in _SCALARS.items():
            if key in data:
                kwargs[key] = cast(data[key])

        decomposition = _section(data, 'decomposition')
        if decomposition:
            kwargs['decomposition'] = DecompositionConfig(**decomposition)
        anneal = _section(data, 'anneal')
        if anneal:
            kwargs['anneal'] = AnnealParams(**anneal)
        evo = _section(data, 'evolutionary')
        if 'population' in evo:
            kwargs['population'] = int(evo['population'])
        if 'generations' in evo:
            kwargs['generations'] = int(evo['generations'])
        rnd = _section(data, 'random')
        if 'draws' in rnd:
            kwargs['draws'] = int(rnd['draws'])
        remote = _section(data, 'remote')
        if remote:
            kwargs['remote'] = RemoteConfig(**remote)
        mutation = _section(data, 'mutation')
        d_min = kwargs.get('weights', Weights()).d_min
        kwargs['mutation'] = MutationConfig(d_min=d_min, **mutation)
    except QTestGenError:
        raise
    except (TypeError, ValueError) as e:
        raise ConfigurationError(f"Invalid configuration value: {e}") from e
    return CampaignConfig(**kwargs)


def _read_yaml(path: Union[str, Path]) -> Any:
    try:
        with open(path) as f:
            return yaml.safe_load(f)
    except OSError as e:
        raise ConfigurationError(f"Cannot read configuration {path}: {e}") from e
    except yaml.YAMLError as e:
        raise ConfigurationError(f"Cannot parse configuration {path}: {e}") from e


def load_campaign_config(path: Union[str, Path]) -> CampaignConfig:
    """Read a campaign configuration file"""
    cfg = campaign_config_from_dict(_read_yaml(path))
    logger.info("Loaded campaign configuration %s: heuristics %s, %d repeats",
                path, ', '.join(cfg.heuristics), cfg.repeats)
    return cfg


def load_weights(path: Union[str, Path]) -> Weights:
    """Read a weights file (YAML or JSON mapping)"""
    data = _read_yaml(path) or {}
    if not isinstance(data, Mapping):
        raise ConfigurationError(f"Weights file {path} must hold a mapping")
    return Weights.from_dict(data)


def load_signal_spec(path: Union[str, Path]) -> SignalSpec:
    """Read a signal specification file (YAML or JSON mapping)"""
    data = _read_yaml(path)
    if not isinstance(data, Mapping):
        raise ConfigurationError(f"Signal spec file {path} must hold a mapping")
    return SignalSpec.from_dict(data.get('signal', data))


def dump_campaign_config(cfg: CampaignConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)


def heuristic_list(value: Union[str, Sequence[str]]) -> Tuple[str, ...]:
    """Comma separated or listed heuristic names, canonicalised"""
    names = value.split(',') if isinstance(value, str) else list(value)
    return tuple(canonical_heuristic(n.strip()) for n in names if n.strip())
