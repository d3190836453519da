"""Chaotic sine-map sequence used to schedule the dynamic weight factor.

The enhanced optimizer variant replaces the constant weight factor with the
iterates of ``w <- (m/4) * sin(pi * w)``, which stay inside ``[0, m/4]`` for
any start in ``(0, 1)``. With the default ``m = 0.3`` the map contracts
toward 0 (its derivative magnitude is below 1 everywhere on the range), so
the emitted schedule decays to the constant-zero regime within a few dozen
steps; the sequence is kept as specified rather than re-tuned.
"""

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_M = 0.3
DEFAULT_W0 = 0.7


@dataclass
class SineMapState:
    """Mutable state of the sine map iteration.

    Attributes:
        m: Control parameter, ``0 < m < 4``.
        value: Current map value; stays in ``[0, m/4]`` after the first step
            for any initial value in ``(0, 1)``.
    """

    m: float = DEFAULT_M
    value: float = DEFAULT_W0

    def __post_init__(self):
        if not 0.0 < self.m < 4.0:
            raise ValueError(f"sine map control parameter must be in (0, 4), got {self.m}")
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"sine map value must be in [0, 1], got {self.value}")


def sine_map_next(state: SineMapState) -> float:
    """Advance the sine map one step and return the new value.

    Computes ``(m/4) * sin(pi * value)``, stores it as the new state value,
    and returns it.
    """
    state.value = (state.m / 4.0) * math.sin(math.pi * state.value)
    return state.value


def sine_schedule(epochs: int, m: float = DEFAULT_M, w0: float = DEFAULT_W0) -> np.ndarray:
    """Emit the first ``epochs`` sine-map values starting from ``w0``.

    ``schedule[k]`` is the map iterated ``k + 1`` times from ``w0``; the
    start value itself is never emitted (it may lie outside ``[0, m/4]``).
    """
    state = SineMapState(m=m, value=w0)
    return np.array([sine_map_next(state) for _ in range(epochs)], dtype=np.float64)
