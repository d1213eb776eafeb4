"""
qubo_testgen.errors - Exception hierarchy

All errors raised by the library derive from QTestGenError. Kinds that
signal a bad argument or bad input data also derive from ValueError.
"""

from typing import Any, Optional


class QTestGenError(Exception):
    """Base class for all library errors"""


class SpecificationError(QTestGenError, ValueError):
    """Invalid signal specification or invalid trajectory values"""


class InfeasibleError(QTestGenError, ValueError):
    """A pair of control points cannot be joined within the rate limit"""

    def __init__(self, message: str, pair: Optional[tuple] = None):
        super().__init__(message)
        self.pair = pair


class ShapeError(QTestGenError, ValueError):
    """Arrays or models of mismatched size"""


class InsufficientDataError(QTestGenError, ValueError):
    """Not enough cases or samples to compute a statistic"""


class ConfigurationError(QTestGenError, ValueError):
    """Invalid configuration value or inapplicable option"""


class CapacityError(QTestGenError, ValueError):
    """Problem does not fit a solver or a hardware topology"""


class TransportError(QTestGenError):
    """Failure talking to a remote sampler"""

    def __init__(self, message: str, retryable: bool = True):
        super().__init__(message)
        self.retryable = retryable


class IntegrityError(QTestGenError):
    """A remote result does not match local recomputation"""


class SolverError(QTestGenError):
    """A sampler failed while solving a sub-problem"""

    def __init__(self, message: str, plan: Any = None):
        super().__init__(message)
        self.plan = plan
