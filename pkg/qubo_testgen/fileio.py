"""
qubo_testgen.fileio - Reading and writing pipeline data files

Every data file is a JSON document tagged with a format name and version.
Reading checks the tag, so a metrics file passed where a suite is expected
fails with a clear message instead of a KeyError deep in the pipeline.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ConfigurationError, SpecificationError
from .metrics import MetricSeries
from .mutate import MutationPlan
from .qubo import Selection
from .sut import FaultSpec, PlantModel
from .trajectory import SignalSpec, TestCase, TestSuite, Trajectory

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1

PathLike = Union[str, Path]


def write_document(path: PathLike, fmt: str, body: Mapping[str, Any]) -> None:
    """Write body under a format tag"""
    document = {'format': fmt, 'version': FORMAT_VERSION}
    document.update(body)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w') as f:
        json.dump(document, f, indent=1, sort_keys=False)
        f.write('\n')
    logger.debug("Wrote %s document to %s", fmt, path)


def read_document(path: PathLike, fmt: str) -> Dict[str, Any]:
    """Read a document and check its format tag"""
    try:
        with open(path) as f:
            document = json.load(f)
    except OSError as e:
        raise ConfigurationError(f"Cannot read {path}: {e}") from e
    except ValueError as e:
        raise ConfigurationError(f"{path} is not valid JSON: {e}") from e
    if not isinstance(document, dict) or document.get('format') != fmt:
        found = document.get('format') if isinstance(document, dict) else type(document).__name__
        raise ConfigurationError(f"{path} holds a '{found}' document, expected '{fmt}'")
    if document.get('version', FORMAT_VERSION) > FORMAT_VERSION:
        raise ConfigurationError(f"{path} has format version {document['version']}, "
                                 f"newest supported is {FORMAT_VERSION}")
    return document


# Suites

def _trajectory_dict(traj: Trajectory) -> Dict[str, Any]:
    return {'signal': traj.spec.to_dict(), 'values': [float(v) for v in traj.values]}


def _trajectory_from(data: Mapping[str, Any]) -> Trajectory:
    return Trajectory(SignalSpec.from_dict(data['signal']), np.asarray(data['values'], dtype=float))


def suite_to_dict(suite: TestSuite) -> Dict[str, Any]:
    return {
        'signal': suite.spec.to_dict(),
        'cases': [{
            'id': case.id,
            'values': [float(v) for v in case.input.values],
            'fixed_inputs': {name: _trajectory_dict(t) for name, t in case.fixed_inputs.items()},
            'notes': list(case.notes),
            'parent': case.parent,
        } for case in suite],
    }


def suite_from_dict(data: Mapping[str, Any]) -> TestSuite:
    try:
        spec = SignalSpec.from_dict(data['signal'])
        cases = []
        for raw in data['cases']:
            cases.append(TestCase(
                id=str(raw['id']),
                input=Trajectory(spec, np.asarray(raw['values'], dtype=float)),
                fixed_inputs={name: _trajectory_from(t)
                              for name, t in (raw.get('fixed_inputs') or {}).items()},
                notes=tuple(raw.get('notes') or ()),
                parent=raw.get('parent'),
            ))
    except (KeyError, TypeError) as e:
        raise SpecificationError(f"Malformed test suite document: {e}") from None
    return TestSuite(cases)


def save_suite(suite: TestSuite, path: PathLike) -> None:
    write_document(path, 'test-suite', suite_to_dict(suite))


def load_suite(path: PathLike) -> TestSuite:
    return suite_from_dict(read_document(path, 'test-suite'))


# Metrics

def save_metrics(series: Sequence[MetricSeries], path: PathLike,
                 output_spec: Optional[SignalSpec] = None) -> None:
    body: Dict[str, Any] = {'cases': [{
        'case_id': s.case_id,
        'effectiveness': [float(v) for v in s.effectiveness],
        'input_diversity': [float(v) for v in s.input_diversity],
        'output_diversity': [float(v) for v in s.output_diversity],
    } for s in series]}
    if output_spec is not None:
        body['output_signal'] = output_spec.to_dict()
    write_document(path, 'metrics', body)


def load_metrics(path: PathLike) -> List[MetricSeries]:
    document = read_document(path, 'metrics')
    try:
        return [MetricSeries(raw['case_id'], raw['effectiveness'], raw['input_diversity'],
                             raw['output_diversity']) for raw in document['cases']]
    except (KeyError, TypeError) as e:
        raise ConfigurationError(f"Malformed metrics document {path}: {e}") from None


# Selections

def save_selections(selections: Mapping[str, Selection], path: PathLike,
                    heuristic: Optional[str] = None, info: Optional[Mapping[str, Any]] = None) -> None:
    body: Dict[str, Any] = {
        'heuristic': heuristic,
        'cases': [{'case_id': case_id, 'n': len(sel), 'indices': sel.indices}
                  for case_id, sel in selections.items()],
    }
    if info:
        body['info'] = dict(info)
    write_document(path, 'selection', body)


def load_selections(path: PathLike) -> Dict[str, Selection]:
    document = read_document(path, 'selection')
    try:
        return {str(raw['case_id']): Selection.from_indices(int(raw['n']), raw['indices'])
                for raw in document['cases']}
    except (KeyError, TypeError, IndexError) as e:
        raise ConfigurationError(f"Malformed selection document {path}: {e}") from None


# Mutation plans

def save_mutation_plans(plans: Sequence[MutationPlan], path: PathLike,
                        notes: Optional[Mapping[str, Sequence[str]]] = None) -> None:
    """Plans plus the feasibility adjustment notes of each mutant"""
    records = []
    for plan in plans:
        record = plan.to_dict()
        record['adjustments'] = list((notes or {}).get(plan.case_id, ()))
        records.append(record)
    write_document(path, 'mutation-plans', {'plans': records})


def load_mutation_plans(path: PathLike) -> List[MutationPlan]:
    document = read_document(path, 'mutation-plans')
    return [MutationPlan.from_dict(raw) for raw in document.get('plans', [])]


# Fault corpus

def save_fault_manifest(model: PlantModel, faults: Sequence[FaultSpec], path: PathLike,
                        seed: Optional[int] = None) -> None:
    write_document(path, 'fault-manifest', {
        'model': model.to_dict(),
        'seed': seed,
        'faults': [fault.to_dict() for fault in faults],
    })


def load_fault_manifest(path: PathLike) -> Tuple[PlantModel, List[FaultSpec]]:
    document = read_document(path, 'fault-manifest')
    try:
        model = PlantModel.from_dict(document['model'])
        faults = [FaultSpec.from_dict(raw) for raw in document['faults']]
    except (KeyError, TypeError) as e:
        raise ConfigurationError(f"Malformed fault manifest {path}: {e}") from None
    return model, faults


def save_json(data: Any, path: PathLike) -> None:
    """Plain JSON for documents that carry their own format tag"""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w') as f:
        json.dump(data, f, indent=1)
        f.write('\n')
