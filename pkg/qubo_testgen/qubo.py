"""
qubo_testgen.qubo - QUBO objectives for data-point selection

A selection QUBO has one binary variable per candidate data point. Each
metric objective pulls the summed metric of the selected points towards a
target value, the count objective keeps selections small and the proximity
constraint penalises pairs of selected points closer than d_min seconds.
Constant terms of the expanded squares are dropped, so energies are offset
from the true squared distances by a constant.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ConfigurationError, ShapeError

logger = logging.getLogger(__name__)

DOCUMENT_FORMAT = 'qubo'


class Qubo:
    """Linear and upper-triangular quadratic coefficients over n binary variables"""

    def __init__(self, n: int, linear: Optional[Sequence[float]] = None,
                 quadratic: Union[None, Mapping[Tuple[int, int], float], np.ndarray] = None,
                 offset: float = 0.0):
        if n < 0:
            raise ShapeError(f"Qubo size must be >= 0, got {n}")
        self.n = n
        self.offset = float(offset)

        lin = np.zeros(n) if linear is None else np.array(linear, dtype=float)
        if lin.shape != (n,):
            raise ShapeError(f"Linear terms have shape {lin.shape}, expected ({n},)")

        upper = np.zeros((n, n))
        if isinstance(quadratic, np.ndarray):
            if quadratic.shape != (n, n):
                raise ShapeError(f"Quadratic matrix has shape {quadratic.shape}, expected ({n}, {n})")
            upper = np.triu(quadratic, k=1) + np.tril(quadratic, k=-1).T
        elif quadratic:
            for (i, j), value in quadratic.items():
                if i == j or not (0 <= i < n and 0 <= j < n):
                    raise ShapeError(f"Invalid quadratic key ({i}, {j}) for n={n}")
                if i > j:
                    i, j = j, i
                upper[i, j] += float(value)

        if not (np.all(np.isfinite(lin)) and np.all(np.isfinite(upper))):
            raise ShapeError("Qubo coefficients must be finite")
        lin.setflags(write=False)
        upper.setflags(write=False)
        self.linear = lin
        self.upper = upper  # strictly upper triangular

    def __repr__(self):
        return f"Qubo(n={self.n}, couplers={int(np.count_nonzero(self.upper))}, offset={self.offset})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, Qubo):
            return NotImplemented
        return (self.n == other.n and self.offset == other.offset
                and np.array_equal(self.linear, other.linear)
                and np.array_equal(self.upper, other.upper))

    @property
    def quadratic(self) -> Dict[Tuple[int, int], float]:
        """Nonzero quadratic coefficients keyed by (i, j), i < j"""
        rows, cols = np.nonzero(self.upper)
        return {(int(i), int(j)): float(self.upper[i, j]) for i, j in zip(rows, cols)}

    def symmetric(self) -> np.ndarray:
        """Symmetric coupling matrix with zero diagonal"""
        return self.upper + self.upper.T

    def edges(self) -> List[Tuple[int, int]]:
        """Logical graph edges (pairs with a nonzero coefficient)"""
        return list(self.quadratic.keys())

    def max_abs_coefficient(self) -> float:
        values = np.concatenate([np.abs(self.linear), np.abs(self.upper).ravel()])
        return float(values.max()) if values.size else 0.0

    def energies(self, samples: np.ndarray) -> np.ndarray:
        """Energies of a batch of selections, one per row"""
        X = np.asarray(samples, dtype=float)
        if X.ndim == 1:
            X = X[np.newaxis, :]
        if X.shape[1] != self.n:
            raise ShapeError(f"Selections have {X.shape[1]} bits, Qubo has {self.n}")
        return X @ self.linear + np.einsum('ij,ij->i', X @ self.upper, X) + self.offset

    def to_document(self) -> Dict[str, object]:
        """QUBO interchange document"""
        return {
            'n': self.n,
            'linear': [float(v) for v in self.linear],
            'quadratic': [[i, j, v] for (i, j), v in self.quadratic.items()],
            'offset': self.offset,
        }

    @classmethod
    def from_document(cls, doc: Mapping[str, object]) -> 'Qubo':
        try:
            n = int(doc['n'])
            quadratic = {}
            for i, j, v in doc.get('quadratic', []):
                key = (int(i), int(j))
                quadratic[key] = quadratic.get(key, 0.0) + float(v)
            return cls(n, doc.get('linear'), quadratic, float(doc.get('offset', 0.0)))
        except (KeyError, TypeError, ValueError) as e:
            raise ShapeError(f"Malformed QUBO document: {e}") from None


@dataclass(frozen=True, eq=False)
class Selection:
    """0/1 choice of data points"""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.array(self.bits, dtype=np.int8)
        if bits.ndim != 1 or np.any((bits != 0) & (bits != 1)):
            raise ShapeError("Selection bits must be a 0/1 vector")
        bits.setflags(write=False)
        object.__setattr__(self, 'bits', bits)

    def __len__(self) -> int:
        return len(self.bits)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Selection):
            return NotImplemented
        return np.array_equal(self.bits, other.bits)

    def __repr__(self):
        return f"Selection({''.join(str(b) for b in self.bits)})"

    @property
    def indices(self) -> List[int]:
        return [int(i) for i in np.flatnonzero(self.bits)]

    @classmethod
    def from_indices(cls, n: int, indices: Iterable[int]) -> 'Selection':
        bits = np.zeros(n, dtype=np.int8)
        bits[list(indices)] = 1
        return cls(bits)


@dataclass(frozen=True)
class Weights:
    """Objective weights, penalty P and minimum temporal distance d_min (seconds)"""

    w_ef: float = 0.25
    w_id: float = 0.125
    w_od: float = 0.125
    w_num: float = 0.5
    penalty: float = 1000.0
    d_min: float = 2.0

    def __post_init__(self):
        for name in ('w_ef', 'w_id', 'w_od', 'w_num', 'd_min'):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"Weight {name} must be >= 0")
        if not self.penalty > 0:
            raise ConfigurationError("Penalty P must be > 0")

    def to_dict(self) -> Dict[str, float]:
        return {'w_ef': self.w_ef, 'w_id': self.w_id, 'w_od': self.w_od,
                'w_num': self.w_num, 'penalty': self.penalty, 'd_min': self.d_min}

    @classmethod
    def from_dict(cls, data: Mapping[str, object]) -> 'Weights':
        unknown = set(data) - set(cls().to_dict())
        if unknown:
            raise ConfigurationError(f"Unknown weight keys: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in data.items()})


def energy(q: Qubo, x: Union[Selection, Sequence[int]]) -> float:
    """Energy of one selection"""
    bits = x.bits if isinstance(x, Selection) else np.asarray(x)
    if len(bits) != q.n:
        raise ShapeError(f"Selection has {len(bits)} bits, Qubo has {q.n}")
    return float(q.energies(bits)[0])


def build_metric_objective(values: Sequence[float], target: float) -> Qubo:
    """(sum v_i x_i - target)^2 with the constant target^2 dropped"""
    v = np.asarray(values, dtype=float)
    if not (np.all(np.isfinite(v)) and np.isfinite(target)):
        raise ShapeError("Metric values and target must be finite")
    linear = v ** 2 - 2.0 * target * v
    quadratic = np.triu(2.0 * np.outer(v, v), k=1)
    return Qubo(len(v), linear, quadratic)


def build_count_objective(n: int) -> Qubo:
    """(sum x_i)^2: linear 1, quadratic 2"""
    if n < 1:
        raise ShapeError(f"Count objective needs n >= 1, got {n}")
    return Qubo(n, np.ones(n), np.triu(np.full((n, n), 2.0), k=1))


def build_proximity_constraint(times: Sequence[float], d_min: float, penalty: float) -> Qubo:
    """Penalty on every pair of points closer than d_min seconds"""
    t = np.asarray(times, dtype=float)
    close = np.abs(t[np.newaxis, :] - t[:, np.newaxis]) < d_min - 1e-9
    return Qubo(len(t), None, np.triu(close, k=1) * float(penalty))


def assemble(parts: Sequence[Tuple[float, Qubo]]) -> Qubo:
    """Coefficient-wise weighted sum of QUBOs over the same variables"""
    if not parts:
        raise ShapeError("assemble needs at least one part")
    n = parts[0][1].n
    linear, upper, offset = np.zeros(n), np.zeros((n, n)), 0.0
    for weight, q in parts:
        if q.n != n:
            raise ShapeError(f"Cannot assemble Qubo of size {q.n} with size {n}")
        linear += weight * q.linear
        upper += weight * q.upper
        offset += weight * q.offset
    return Qubo(n, linear, upper, offset)


def _check_penalty(objective: Qubo, penalty: float) -> None:
    # Removing one point of a too-close pair changes the objective by at most
    # its row bound; a larger P keeps every minimiser feasible.
    sym = np.abs(objective.symmetric())
    row_bound = float(np.max(np.abs(objective.linear) + sym.sum(axis=1))) if objective.n else 0.0
    if penalty <= row_bound:
        logger.warning("Penalty %g does not exceed the largest single-point objective change %g; "
                       "minimisers may violate d_min", penalty, row_bound)
    total = float(np.abs(objective.linear).sum() + np.abs(objective.upper).sum())
    if penalty < 10.0 * total:
        logger.info("Penalty %g is below 10x the objective coefficient sum %g", penalty, total)


def build_selection_qubo(effectiveness: Sequence[float], input_diversity: Sequence[float],
                         output_diversity: Sequence[float], times: Sequence[float],
                         weights: Weights) -> Qubo:
    """Four weighted objectives plus the proximity constraint

    The effectiveness target is the sum of the given effectiveness values;
    both diversity targets and the count target are 0.
    """
    ef = np.asarray(effectiveness, dtype=float)
    n = len(ef)
    if not (len(input_diversity) == len(output_diversity) == len(times) == n):
        raise ShapeError("Metric and time arrays of a selection problem differ in length")
    if n == 0:
        return Qubo(0)
    objective = assemble([
        (weights.w_ef, build_metric_objective(ef, float(ef.sum()))),
        (weights.w_id, build_metric_objective(input_diversity, 0.0)),
        (weights.w_od, build_metric_objective(output_diversity, 0.0)),
        (weights.w_num, build_count_objective(n)),
    ])
    _check_penalty(objective, weights.penalty)
    return assemble([(1.0, objective),
                     (1.0, build_proximity_constraint(times, weights.d_min, weights.penalty))])
