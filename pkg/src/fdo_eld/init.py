"""Population initializers: uniform pseudo-random and quasi-random Sobol.

Both initializers produce points in the axis-aligned box given by
:class:`~fdo_eld.core.Bounds`, mapped affinely from the unit hypercube.
The Sobol generator is a Gray-code implementation over 32-bit integer
state driven by the published Joe-Kuo direction-number table shipped in
``data/direction_numbers.txt`` (dimensions 2..24; dimension 1 is the base-2
van der Corput sequence). It is deterministic and unscrambled: the k-th
point depends only on (dimension, k).
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field

import numpy as np

_BITS = 32
_SCALE = float(2**_BITS)
_DATA_FILE = "direction_numbers.txt"


class SequenceExhausted(Exception):
    """Raised when a Sobol generator runs past its 2**32-point period."""


def _data_path(name: str):
    return importlib.resources.files("fdo_eld").joinpath("data", name)


def load_direction_numbers(path=None) -> dict[int, tuple[int, int, list[int]]]:
    """Parse a Joe-Kuo style direction-number table.

    Each data row is ``d s a m_1 .. m_s``. Returns a mapping from dimension
    ``d`` to ``(s, a, m)``. Defaults to the packaged table.
    """
    src = _data_path(_DATA_FILE) if path is None else path
    table: dict[int, tuple[int, int, list[int]]] = {}
    with open(src) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#") or line.startswith("d "):
                continue
            parts = line.split()
            try:
                d, s, a = int(parts[0]), int(parts[1]), int(parts[2])
                m = [int(x) for x in parts[3:]]
            except (ValueError, IndexError) as exc:
                raise ValueError(f"{src}:{lineno}: malformed direction-number row") from exc
            if len(m) != s:
                raise ValueError(f"{src}:{lineno}: expected {s} m-values, got {len(m)}")
            if any(v % 2 == 0 or v <= 0 for v in m):
                raise ValueError(f"{src}:{lineno}: m-values must be odd and positive")
            table[d] = (s, a, m)
    return table


def _direction_vectors(s: int, a: int, m: list[int]) -> np.ndarray:
    """Expand initial m-values into 32 direction integers for one dimension."""
    v = np.zeros(_BITS, dtype=np.uint64)
    for k in range(_BITS):
        if k < s:
            v[k] = np.uint64(m[k]) << np.uint64(_BITS - 1 - k)
        else:
            vk = v[k - s] ^ (v[k - s] >> np.uint64(s))
            for i in range(1, s):
                if (a >> (s - 1 - i)) & 1:
                    vk ^= v[k - i]
            v[k] = vk
    return v


def _dim1_vectors() -> np.ndarray:
    return np.array([1 << (_BITS - 1 - k) for k in range(_BITS)], dtype=np.uint64)


@dataclass
class SobolGenerator:
    """Gray-code Sobol sequence generator.

    The raw sequence starts at the all-zeros point (index 0). All emitted
    components lie in ``[0, 1)`` and the k-th point depends only on
    ``(dimension, k)``.

    Attributes:
        dimension: Number of coordinates per point.
        index: Points emitted so far.
    """

    dimension: int
    index: int = 0
    _vectors: np.ndarray = field(init=False, repr=False)
    _state: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError(f"dimension must be >= 1, got {self.dimension}")
        table = load_direction_numbers()
        max_dim = max(table) if table else 1
        if self.dimension > max_dim:
            raise ValueError(
                f"dimension {self.dimension} exceeds the shipped direction-number "
                f"table (max {max_dim})"
            )
        rows = [_dim1_vectors()]
        for d in range(2, self.dimension + 1):
            s, a, m = table[d]
            rows.append(_direction_vectors(s, a, m))
        self._vectors = np.stack(rows[: self.dimension])  # (dimension, 32)
        self._state = np.zeros(self.dimension, dtype=np.uint64)
        if self.index:
            self._seek(self.index)

    def _seek(self, index: int) -> None:
        """Set the state to emit point ``index`` next, in O(32) time.

        The Gray-code sequence satisfies ``point_n = XOR of v_k over the set
        bits k of gray(n)`` with ``gray(n) = n ^ (n >> 1)``.
        """
        if not 0 <= index < 2**_BITS:
            raise SequenceExhausted(f"index {index} outside the 2**{_BITS} period")
        state = np.zeros(self.dimension, dtype=np.uint64)
        gray = index ^ (index >> 1)
        bit = 0
        while gray:
            if gray & 1:
                state ^= self._vectors[:, bit]
            gray >>= 1
            bit += 1
        self._state = state
        self.index = index

    def next(self) -> np.ndarray:
        """Return the next point of the sequence and advance by one."""
        if self.index >= 2**_BITS - 1:
            raise SequenceExhausted(f"Sobol sequence period exceeded at index {self.index}")
        point = self._state / _SCALE
        # Gray-code advance: flip the direction of the lowest set bit of index+1.
        n = self.index + 1
        c = (n & -n).bit_length() - 1
        self._state ^= self._vectors[:, c]
        self.index = n
        return point

    def take(self, count: int) -> np.ndarray:
        """Return the next ``count`` points as a ``(count, dimension)`` array."""
        return np.stack([self.next() for _ in range(count)])

    def fast_forward(self, count: int) -> "SobolGenerator":
        """Skip ``count`` points and return self."""
        self._seek(self.index + count)
        return self


def sobol_next(gen: SobolGenerator) -> np.ndarray:
    """Functional alias for :meth:`SobolGenerator.next`."""
    return gen.next()


def initialize_population(pop: int, bounds, mode: str, rng=None) -> np.ndarray:
    """Draw an initial population inside ``bounds``.

    Args:
        pop: Number of agents, >= 1.
        bounds: A :class:`~fdo_eld.core.Bounds` (or any object with ``lower``
            and ``upper`` float vectors).
        mode: ``"uniform"`` (draws from ``rng``) or ``"sobol"`` (deterministic;
            ``rng`` is ignored). The Sobol stream skips the initial all-zeros
            point so no agent starts exactly on the lower-bound corner.
        rng: ``numpy.random.Generator``; required for uniform mode.

    Returns:
        Array of shape ``(pop, dimension)`` with every component inside the
        closed box.
    """
    if pop < 1:
        raise ValueError(f"population must be >= 1, got {pop}")
    lower = np.asarray(bounds.lower, dtype=np.float64)
    upper = np.asarray(bounds.upper, dtype=np.float64)
    span = upper - lower
    mode = mode.lower()
    if mode == "uniform":
        if rng is None:
            raise ValueError("uniform initialization requires an rng")
        unit = rng.random((pop, lower.size))
    elif mode == "sobol":
        gen = SobolGenerator(lower.size)
        gen.next()  # discard the all-zeros point
        unit = gen.take(pop)
    else:
        raise ValueError(f"unknown initializer mode {mode!r}")
    return lower + unit * span


def centered_l2_discrepancy(points: np.ndarray) -> float:
    """Centered L2 discrepancy of a point set in the unit hypercube.

    Lower values mean more even coverage. Used to check that the Sobol
    initializer spreads agents better than uniform sampling.
    """
    x = np.asarray(points, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("points must be a 2-D array")
    n, d = x.shape
    shifted = np.abs(x - 0.5)
    prod1 = np.prod(1.0 + 0.5 * shifted - 0.5 * shifted**2, axis=1)
    # Pairwise product term.
    si = shifted[:, None, :]
    sk = shifted[None, :, :]
    diff = np.abs(x[:, None, :] - x[None, :, :])
    prod2 = np.prod(1.0 + 0.5 * si + 0.5 * sk - 0.5 * diff, axis=2)
    return float(
        (13.0 / 12.0) ** d - (2.0 / n) * prod1.sum() + prod2.sum() / n**2
    ) ** 0.5
