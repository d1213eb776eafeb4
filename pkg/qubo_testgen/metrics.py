"""
qubo_testgen.metrics - Per-data-point adequacy metrics

Effectiveness measures how far the observed output strays from the expected
output at each sample. Input and output diversity measure how far the local
window around each sample is from the same window in the closest other case.
All values are normalised to [0, 1].
"""

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Union

import numpy as np

from .errors import InsufficientDataError, ShapeError
from .trajectory import SignalSpec, TestSuite, Trajectory
from .utils import fmt

logger = logging.getLogger(__name__)

DEFAULT_DIVERSITY_RADIUS = 50


@dataclass(frozen=True, eq=False)
class MetricSeries:
    """Effectiveness, input diversity and output diversity of one case"""

    case_id: str
    effectiveness: np.ndarray
    input_diversity: np.ndarray
    output_diversity: np.ndarray

    def __post_init__(self):
        arrays = []
        for name in ('effectiveness', 'input_diversity', 'output_diversity'):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.ndim != 1:
                raise ShapeError(f"{name} of case '{self.case_id}' must be one-dimensional")
            if np.any(arr < 0) or np.any(arr > 1):
                raise ShapeError(f"{name} of case '{self.case_id}' leaves [0, 1]")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
            arrays.append(arr)
        if len({len(a) for a in arrays}) != 1:
            raise ShapeError(f"Metric arrays of case '{self.case_id}' differ in length")

    def __len__(self) -> int:
        return len(self.effectiveness)

    def restrict(self, indices: Sequence[int]) -> 'MetricSeries':
        """Metric values at the given sample indices only"""
        idx = np.asarray(indices, dtype=int)
        return MetricSeries(self.case_id, self.effectiveness[idx],
                            self.input_diversity[idx], self.output_diversity[idx])


Outputs = Union[Trajectory, Sequence[Trajectory]]


def _as_components(output: Outputs) -> np.ndarray:
    if isinstance(output, Trajectory):
        return output.values[np.newaxis, :]
    return np.vstack([t.values for t in output])


def effectiveness_series(observed: Outputs, expected: Outputs, spec: SignalSpec) -> np.ndarray:
    """Normalised pointwise distance between observed and expected outputs

    For vector outputs pass one trajectory per component; the pointwise
    Euclidean norm replaces the absolute difference.
    """
    obs, exp = _as_components(observed), _as_components(expected)
    if obs.shape != exp.shape:
        raise ShapeError(f"Observed {obs.shape} and expected {exp.shape} outputs differ in shape")
    distance = np.sqrt(np.sum((obs - exp) ** 2, axis=0))
    return np.clip((distance - spec.r_min) / spec.span, 0.0, 1.0)


def slice_distance(s1: Sequence[float], s2: Sequence[float], window_len: int,
                   spec: SignalSpec) -> float:
    """Euclidean distance between two slices normalised to [0, 1]"""
    a, b = np.asarray(s1, dtype=float), np.asarray(s2, dtype=float)
    if window_len < 1 or a.size == 0 or a.shape != b.shape or a.size != window_len:
        raise ShapeError(
            f"Slices of length {a.size} and {b.size} do not match window_len {window_len}")
    d = np.sqrt(np.sum((a - b) ** 2)) / (np.sqrt(window_len) * spec.span)
    return float(min(max(d, 0.0), 1.0))


def _window_sums(values: np.ndarray, radius: int) -> tuple:
    """Clamped-window sums along the last axis and the window lengths"""
    n = values.shape[-1]
    k = np.arange(n)
    lo = np.maximum(0, k - radius)
    hi = np.minimum(n - 1, k + radius)
    csum = np.concatenate([np.zeros(values.shape[:-1] + (1,)), np.cumsum(values, axis=-1)], axis=-1)
    return csum[..., hi + 1] - csum[..., lo], (hi - lo + 1)


def diversity_matrix(rows: np.ndarray, case_index: int, radius: int, spec: SignalSpec) -> np.ndarray:
    """Min-over-other-cases slice distance for every sample of one case"""
    if rows.shape[0] < 2:
        raise InsufficientDataError("Diversity needs at least two test cases")
    if not 0 <= case_index < rows.shape[0]:
        raise ShapeError(f"case_index {case_index} outside suite of {rows.shape[0]}")
    others = np.delete(rows, case_index, axis=0)
    sq = (others - rows[case_index]) ** 2
    sums, lengths = _window_sums(sq, radius)
    dist = np.sqrt(np.maximum(sums, 0.0)) / (np.sqrt(lengths) * spec.span)
    return np.clip(dist.min(axis=0), 0.0, 1.0)


def input_diversity_series(suite: TestSuite, case_index: int,
                           radius: int = DEFAULT_DIVERSITY_RADIUS) -> np.ndarray:
    """Input diversity of every sample of suite[case_index]"""
    if len(suite) < 2:
        raise InsufficientDataError("Input diversity needs a suite of at least two cases")
    return diversity_matrix(suite.input_matrix(), case_index, radius, suite.spec)


def output_diversity_series(outputs: Sequence[Trajectory], case_index: int,
                            radius: int = DEFAULT_DIVERSITY_RADIUS,
                            spec: SignalSpec = None) -> np.ndarray:
    """Output diversity of every sample of outputs[case_index]"""
    if len(outputs) < 2:
        raise InsufficientDataError("Output diversity needs at least two outputs")
    rows = np.vstack([t.values for t in outputs])
    return diversity_matrix(rows, case_index, radius, spec or outputs[0].spec)


def compute_suite_metrics(suite: TestSuite, observed: Sequence[Trajectory],
                          expected: Sequence[Trajectory], output_spec: SignalSpec,
                          radius: int = DEFAULT_DIVERSITY_RADIUS) -> List[MetricSeries]:
    """Collect the three metric series for every case of an executed suite"""
    if not (len(suite) == len(observed) == len(expected)):
        raise ShapeError("Suite, observed and expected outputs differ in length")
    inputs = suite.input_matrix()
    out_rows = np.vstack([t.values for t in observed])
    series = []
    for i, case in enumerate(suite):
        series.append(MetricSeries(
            case_id=case.id,
            effectiveness=effectiveness_series(observed[i], expected[i], output_spec),
            input_diversity=diversity_matrix(inputs, i, radius, suite.spec),
            output_diversity=diversity_matrix(out_rows, i, radius, output_spec),
        ))
    logger.debug("Computed metrics for %d cases", len(series))
    return series


def export_metrics_csv(series: MetricSeries, path: Union[str, Path],
                       sample_period: float = None) -> None:
    """Write one case's metrics as index, time, effectiveness, input_diversity, output_diversity"""
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(['index', 'time', 'effectiveness', 'input_diversity', 'output_diversity'])
        for k in range(len(series)):
            t = k * sample_period if sample_period else None
            writer.writerow([k, fmt(t, 2) if t is not None else '',
                             fmt(series.effectiveness[k]), fmt(series.input_diversity[k]),
                             fmt(series.output_diversity[k])])
