"""
qubo_testgen.utils - Small helpers shared across modules
"""

from typing import Optional, Tuple, Union

import numpy as np

SeedLike = Union[None, int, np.random.Generator]


def make_rng(seed: SeedLike = None) -> np.random.Generator:
    """Return a numpy Generator for a seed, or the generator itself"""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def window_bounds(n: int, center: int, radius: int) -> Tuple[int, int]:
    """Inclusive window [lo, hi] around center, clamped to [0, n-1]"""
    return max(0, center - radius), min(n - 1, center + radius)


def fmt(value: Optional[float], places: int = 6) -> str:
    """Fixed decimal formatting used by every tabular export"""
    if value is None:
        return ''
    return f"{value:.{places}f}"
