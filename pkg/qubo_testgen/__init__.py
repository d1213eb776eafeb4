"""
qubo-testgen - QUBO-guided test generation for cyber-physical systems

Test inputs are bounded, rate-limited trajectories. The data points worth
mutating are chosen by solving a selection QUBO with interchangeable
samplers, then mutated and embedded back into the trajectories.

Main components:
- trajectory: signal specs, seed test case generation
- metrics: effectiveness, input diversity and output diversity
- qubo: selection QUBO construction
- solvers / remote: exact, annealing, evolutionary, random and remote samplers
- decompose: sub-problem decomposition and merging
- embed: clique embedding onto Chimera hardware graphs
- mutate: correlation-guided mutation with smoothing
- sut: analytic plants, fault operators and the conformance oracle
- experiment: campaigns, PFD and statistics
"""

__version__ = '1.0.0'

from .errors import QTestGenError

from .trajectory import SignalSpec
from .trajectory import Trajectory
from .trajectory import TestCase
from .trajectory import TestSuite
from .trajectory import generate_suite
from .trajectory import fit_trajectory

from .metrics import MetricSeries
from .metrics import compute_suite_metrics

from .qubo import Qubo
from .qubo import Selection
from .qubo import Weights
from .qubo import build_selection_qubo

from .solvers import SampleSet
from .solvers import make_sampler

from .decompose import DecompositionConfig
from .decompose import select_points

from .embed import build_chimera
from .embed import embed_clique

from .mutate import MutationPlan
from .mutate import mutate_suite

from .sut import PlantModel
from .sut import FaultSpec
from .sut import apply_fault
from .sut import conformance

from .config import CampaignConfig
from .config import load_campaign_config

from .experiment import run_campaign
from .experiment import ExperimentReport


__all__ = [
    'QTestGenError',
    'SignalSpec',
    'Trajectory',
    'TestCase',
    'TestSuite',
    'generate_suite',
    'fit_trajectory',
    'MetricSeries',
    'compute_suite_metrics',
    'Qubo',
    'Selection',
    'Weights',
    'build_selection_qubo',
    'SampleSet',
    'make_sampler',
    'DecompositionConfig',
    'select_points',
    'build_chimera',
    'embed_clique',
    'MutationPlan',
    'mutate_suite',
    'PlantModel',
    'FaultSpec',
    'apply_fault',
    'conformance',
    'CampaignConfig',
    'load_campaign_config',
    'run_campaign',
    'ExperimentReport',
]
