"""Economic load dispatch problem model.

Quadratic fuel-cost and emission curves per generating unit, a B-coefficient
transmission-loss quadratic form, the price-penalty-factor scalarization
combining cost and emission into one objective, an emission-capped variant,
and a proportional-headroom repair operator that projects raw power vectors
onto the power-balance manifold.

Constraint handling is repair-plus-penalty. The optimizer's fitness adds a
penalty on the demand-only balance residual ``sum(P) - demand`` of the raw
point, so the per-run residual measures how precisely the search itself
satisfied the balance; the repair operator is then applied once to the final
incumbent to produce a dispatch that also absorbs the physical B-matrix loss
(``sum(P) - loss(P) - demand = 0`` to within ``balance_tolerance``). The
default penalty weight scales with the steepest scalarized marginal cost of
the problem so the penalized optimum coincides with the constrained one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _engine

PENALTY_MARGIN = 2.5
DEFAULT_BALANCE_TOL = 1e-10
REPAIR_MAX_ITER = 100


class NonConvergent(RuntimeError):
    """Repair failed to reach the balance tolerance (demand infeasible)."""


@dataclass
class GeneratorUnit:
    """One thermal unit: output limits and quadratic cost/emission curves.

    ``a, b, c`` are the fuel-cost coefficients ($/MW^2, $/MW, $); ``ea, eb,
    ec`` the emission coefficients (lb/MW^2, lb/MW, lb). Quadratic leading
    terms must be non-negative (convex curves).
    """

    p_min: float
    p_max: float
    a: float
    b: float
    c: float
    ea: float
    eb: float
    ec: float

    def __post_init__(self):
        if not 0.0 <= self.p_min < self.p_max:
            raise ValueError(
                f"unit limits must satisfy 0 <= p_min < p_max, got [{self.p_min}, {self.p_max}]"
            )
        if self.a < 0.0 or self.ea < 0.0:
            raise ValueError("quadratic coefficients a and ea must be non-negative")


@dataclass
class LossMatrix:
    """Transmission-loss quadratic form ``P'BP + B0'P + B00`` (MW)."""

    b: np.ndarray
    b0: np.ndarray | None = None
    b00: float = 0.0

    def __post_init__(self):
        self.b = np.asarray(self.b, dtype=np.float64)
        if self.b.ndim != 2 or self.b.shape[0] != self.b.shape[1]:
            raise ValueError("B must be a square matrix")
        if self.b0 is None:
            self.b0 = np.zeros(self.b.shape[0])
        self.b0 = np.asarray(self.b0, dtype=np.float64)
        if self.b0.shape != (self.b.shape[0],):
            raise ValueError("B0 length must match B")
        if not (np.isfinite(self.b).all() and np.isfinite(self.b0).all()):
            raise ValueError("loss coefficients must be finite")
        scale = max(np.abs(self.b).max(), 1e-30)
        if np.abs(self.b - self.b.T).max() > 1e-12 * scale:
            raise ValueError("B must be symmetric")

    @property
    def dimension(self) -> int:
        return self.b.shape[0]

    @classmethod
    def zeros(cls, dim: int) -> "LossMatrix":
        return cls(b=np.zeros((dim, dim)))


def _unit_arrays(units):
    a = np.array([u.a for u in units])
    b = np.array([u.b for u in units])
    c = np.array([u.c for u in units])
    ea = np.array([u.ea for u in units])
    eb = np.array([u.eb for u in units])
    ec = np.array([u.ec for u in units])
    lo = np.array([u.p_min for u in units])
    hi = np.array([u.p_max for u in units])
    return a, b, c, ea, eb, ec, lo, hi


def _check_lengths(units, powers) -> np.ndarray:
    powers = np.asarray(powers, dtype=np.float64)
    if powers.shape != (len(units),):
        raise ValueError(f"expected {len(units)} powers, got shape {powers.shape}")
    return powers


def fuel_cost(units, powers) -> float:
    """Total fuel cost: sum of ``a*P^2 + b*P + c`` over units ($)."""
    powers = _check_lengths(units, powers)
    a, b, c, *_ = _unit_arrays(units)
    return float(np.sum(a * powers * powers + b * powers + c))


def emission(units, powers) -> float:
    """Total emission: sum of ``ea*P^2 + eb*P + ec`` over units (lb)."""
    powers = _check_lengths(units, powers)
    _, _, _, ea, eb, ec, _, _ = _unit_arrays(units)
    return float(np.sum(ea * powers * powers + eb * powers + ec))


def transmission_loss(loss: LossMatrix, powers) -> float:
    """Quadratic-form network loss ``P'BP + B0'P + B00`` (MW)."""
    powers = np.asarray(powers, dtype=np.float64)
    if powers.shape != (loss.dimension,):
        raise ValueError(f"expected {loss.dimension} powers, got shape {powers.shape}")
    return float(powers @ loss.b @ powers + loss.b0 @ powers + loss.b00)


def price_penalty_factor(units, demand: float) -> float:
    """Demand-dependent $/lb factor converting emission into cost.

    Per-unit ratios ``FC(p_max) / EC(p_max)`` are sorted ascending and the
    unit capacities accumulated in that order until they cover the demand;
    the ratio of the last unit added is the factor.
    """
    caps = np.array([u.p_max for u in units])
    if caps.sum() < demand:
        raise ValueError(
            f"total capacity {caps.sum():.6g} MW cannot cover demand {demand:.6g} MW"
        )
    ratios = []
    for u in units:
        fc_max = u.a * u.p_max**2 + u.b * u.p_max + u.c
        ec_max = u.ea * u.p_max**2 + u.eb * u.p_max + u.ec
        if ec_max == 0.0:
            raise ZeroDivisionError(
                "unit emission at maximum capacity is zero; penalty ratio undefined"
            )
        ratios.append(fc_max / ec_max)
    order = sorted(range(len(units)), key=lambda i: ratios[i])
    total = 0.0
    for i in order:
        total += units[i].p_max
        if total >= demand:
            return float(ratios[i])
    return float(ratios[order[-1]])  # unreachable given the capacity check


@dataclass
class DispatchSolution:
    """A feasible dispatch and its figures of merit."""

    powers: np.ndarray
    fuel_cost: float
    emission: float
    loss: float
    balance_residual: float  # sum(P) - loss - demand, after repair


@dataclass
class DispatchProblem:
    """One dispatch instance: units, loss model, demand and objective mode.

    ``mode`` is ``"ceed"`` (fuel + penalty-factor-weighted emission) or
    ``"eced"`` (fuel cost with a penalized emission cap ``e_limit``).
    ``penalty_b`` defaults to :func:`price_penalty_factor` at this demand;
    ``penalty_weight`` defaults to ``PENALTY_MARGIN`` times the steepest
    scalarized marginal cost over the box, which keeps the penalized optimum
    on the balance manifold.
    """

    units: list[GeneratorUnit]
    loss: LossMatrix
    demand: float
    mode: str = "ceed"
    penalty_b: float | None = None
    e_limit: float = float("inf")
    penalty_weight: float | None = None
    balance_tolerance: float = DEFAULT_BALANCE_TOL
    _arrays: tuple = field(init=False, repr=False)

    def __post_init__(self):
        if self.mode not in ("ceed", "eced"):
            raise ValueError(f"mode must be 'ceed' or 'eced', got {self.mode!r}")
        if self.loss.dimension != len(self.units):
            raise ValueError("loss matrix dimension must match the unit count")
        if self.balance_tolerance <= 0.0:
            raise ValueError("balance_tolerance must be positive")
        caps = sum(u.p_max for u in self.units)
        if caps < self.demand:
            raise ValueError(
                f"total capacity {caps:.6g} MW cannot cover demand {self.demand:.6g} MW"
            )
        self._arrays = _unit_arrays(self.units)
        if self.penalty_b is None:
            self.penalty_b = price_penalty_factor(self.units, self.demand)
        if self.penalty_weight is None:
            a, b, _, ea, eb, _, _, hi = self._arrays
            wb = self.penalty_b if self.mode == "ceed" else 0.0
            marginal = 2.0 * (a + wb * ea) * hi + (b + wb * eb)
            self.penalty_weight = float(PENALTY_MARGIN * marginal.max())

    @property
    def dimension(self) -> int:
        return len(self.units)

    @property
    def bounds(self):
        from .core import Bounds

        a, b, c, ea, eb, ec, lo, hi = self._arrays
        return Bounds(lower=lo.copy(), upper=hi.copy())

    def kernel_args(self) -> tuple:
        """Parameter tuple consumed by the fused optimizer kernel."""
        a, b, c, ea, eb, ec, _, _ = self._arrays
        return (
            a, b, c, ea, eb, ec,
            float(self.demand),
            float(self.penalty_b),
            float(self.penalty_weight),
            self.mode == "eced",
            float(self.e_limit),
        )

    def fitness(self, raw_powers) -> float:
        """Scalar objective consumed by the optimizer (see module docstring)."""
        if self.mode == "ceed":
            return ceed_fitness(self, raw_powers)
        return eced_fitness(self, raw_powers)

    def solution(self, raw_powers) -> DispatchSolution:
        """Repair a raw vector and evaluate the resulting feasible dispatch."""
        repaired = repair(self, raw_powers)
        return DispatchSolution(
            powers=repaired,
            fuel_cost=fuel_cost(self.units, repaired),
            emission=emission(self.units, repaired),
            loss=transmission_loss(self.loss, repaired),
            balance_residual=float(
                repaired.sum() - transmission_loss(self.loss, repaired) - self.demand
            ),
        )

    def search_residual(self, raw_powers) -> float:
        """Demand-only balance residual ``sum(P) - demand`` of a raw point."""
        powers = _check_lengths(self.units, raw_powers)
        return float(powers.sum() - self.demand)


def repair(problem: DispatchProblem, raw_powers) -> np.ndarray:
    """Project a raw vector onto box bounds and the power-balance manifold.

    Clamps into ``[p_min, p_max]``, then repeatedly redistributes the
    residual ``sum(P) - loss(P) - demand`` in proportion to the remaining
    headroom of each unit (toward ``p_min`` on surplus, toward ``p_max`` on
    deficit), re-clamping every pass, until the residual magnitude is within
    ``balance_tolerance``.

    Raises :class:`NonConvergent` after ``REPAIR_MAX_ITER`` passes, which
    signals a demand infeasible for these bounds.
    """
    powers = _check_lengths(problem.units, raw_powers)
    if not np.isfinite(powers).all():
        raise ValueError("raw powers must be finite")
    *_, lo, hi = problem._arrays
    repaired, resid, _, converged = _engine.repair_kernel(
        powers, lo, hi, problem.loss.b, problem.loss.b0, float(problem.loss.b00),
        float(problem.demand), float(problem.balance_tolerance), REPAIR_MAX_ITER,
    )
    if not converged:
        raise NonConvergent(
            f"balance residual {resid:.3e} MW above tolerance "
            f"{problem.balance_tolerance:.1e} after {REPAIR_MAX_ITER} iterations"
        )
    return repaired


def _clamped(problem: DispatchProblem, raw_powers) -> np.ndarray:
    powers = _check_lengths(problem.units, raw_powers)
    if not np.isfinite(powers).all():
        raise ValueError("raw powers must be finite")
    *_, lo, hi = problem._arrays
    return np.minimum(np.maximum(powers, lo), hi)


def ceed_fitness(problem: DispatchProblem, raw_powers) -> float:
    """Combined economic/emission fitness of a raw power vector.

    ``FC(P) + penalty_b * EC(P) + penalty_weight * |sum(P) - demand|`` with
    ``P`` the box-clamped raw vector. The balance penalty keeps the residual
    an honest measure of search convergence; see the module docstring.
    """
    if problem.mode != "ceed":
        raise ValueError("problem mode is not 'ceed'")
    p = _clamped(problem, raw_powers)
    args = problem.kernel_args()
    return float(_engine.eld_fitness_kernel(p, *args))


def eced_fitness(problem: DispatchProblem, raw_powers) -> float:
    """Emission-capped economic fitness of a raw power vector.

    ``FC(P) + penalty_weight * max(0, EC(P) - e_limit)`` plus the same
    balance penalty as :func:`ceed_fitness`.
    """
    if problem.mode != "eced":
        raise ValueError("problem mode is not 'eced'")
    p = _clamped(problem, raw_powers)
    args = problem.kernel_args()
    return float(_engine.eld_fitness_kernel(p, *args))
