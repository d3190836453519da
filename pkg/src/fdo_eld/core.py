"""Scout-swarm optimizer over box-bounded continuous spaces.

Single-objective fitness-dependent optimizer: each agent carries a position,
its last accepted pace and a cached fitness. Per epoch an agent computes a
fitness weight ``fw = |best / current| - wf`` (inverted for maximization),
clamped into [0, 1], and moves by one of three pace rules: a Levy random
walk scaled by the position when ``fw`` is degenerate, 0 or 1; otherwise a
step toward the global best (random scalar ``r < 0``) or away from it
(``r >= 0``), scaled by ``fw``. A candidate is accepted only if strictly
better than the agent's own fitness; on rejection the previously accepted
pace is retried once, then the agent stays put. The global best is adopted
immediately whenever any agent improves on it.

Loop conventions fixed here (see module docstring of
:mod:`fdo_eld._engine` for the random draw order):

* the weight factor advances once per epoch; under the chaotic mode epoch
  ``e`` uses the ``(e+1)``-th sine-map iterate,
* candidates are clamped component-wise into the bounds box before
  evaluation; the stored pace is the raw accepted pace vector,
* an agent's very first stored pace is the zero vector.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from . import _engine
from .chaos import DEFAULT_M, DEFAULT_W0, sine_schedule
from .init import initialize_population

DEFAULT_LEVY_BETA = 1.5


class DegenerateDivide(ArithmeticError):
    """Fitness-weight denominator is exactly zero; route to the random walk."""


class Direction(Enum):
    MINIMIZE = "minimize"
    MAXIMIZE = "maximize"


class Initializer(Enum):
    UNIFORM = "uniform"
    SOBOL = "sobol"


@dataclass(frozen=True)
class ConstantWeight:
    """Constant weight factor; the base algorithm allows only 0 or 1."""

    wf: float = 0.0

    def __post_init__(self):
        if self.wf not in (0.0, 1.0):
            raise ValueError(f"constant weight factor must be 0 or 1, got {self.wf}")


@dataclass(frozen=True)
class ChaoticSineWeight:
    """Sine-map-scheduled weight factor (enhanced variant)."""

    m: float = DEFAULT_M
    w0: float = DEFAULT_W0

    def __post_init__(self):
        if not 0.0 < self.m < 4.0:
            raise ValueError(f"sine map control parameter must be in (0, 4), got {self.m}")
        if not 0.0 < self.w0 < 1.0:
            raise ValueError(f"sine map start value must be in (0, 1), got {self.w0}")


WeightMode = ConstantWeight | ChaoticSineWeight


@dataclass
class Bounds:
    """Axis-aligned box: ``lower[d] < upper[d]`` for every coordinate."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        self.lower = np.asarray(self.lower, dtype=np.float64)
        self.upper = np.asarray(self.upper, dtype=np.float64)
        if self.lower.shape != self.upper.shape or self.lower.ndim != 1:
            raise ValueError("lower and upper must be 1-D arrays of equal length")
        if not (np.isfinite(self.lower).all() and np.isfinite(self.upper).all()):
            raise ValueError("bounds must be finite")
        if not (self.lower < self.upper).all():
            raise ValueError("every lower bound must be strictly below its upper bound")

    @property
    def dimension(self) -> int:
        return self.lower.size

    def clip(self, x: np.ndarray) -> np.ndarray:
        return np.minimum(np.maximum(x, self.lower), self.upper)


@dataclass
class OptimizerConfig:
    population: int = 50
    epochs: int = 100
    seed: int = 0
    weight_mode: WeightMode = field(default_factory=ConstantWeight)
    initializer: Initializer = Initializer.UNIFORM
    direction: Direction = Direction.MINIMIZE
    levy_beta: float = DEFAULT_LEVY_BETA

    def __post_init__(self):
        if self.population < 1:
            raise ValueError(f"population must be positive, got {self.population}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be non-negative, got {self.epochs}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")
        if not 1.0 < self.levy_beta <= 2.0:
            raise ValueError(f"levy_beta must be in (1, 2], got {self.levy_beta}")


@dataclass
class ScoutAgent:
    """One search agent: position, last accepted pace, cached fitness."""

    position: np.ndarray
    pace: np.ndarray
    fitness: float


@dataclass
class OptimizerState:
    """Full optimizer state between epochs; safe to step repeatedly."""

    agents: list[ScoutAgent]
    global_best: ScoutAgent
    epoch: int
    rng: np.random.Generator
    ws: float  # current chaotic weight value (0.0 under constant mode)
    evaluations: int = 0


@dataclass
class RunRecord:
    """Outcome of one optimizer run.

    ``trace[e]`` is the global-best fitness at the end of epoch ``e`` (length
    equals the configured epoch count), ``best_position``/``best_fitness``
    the final incumbent, ``evaluations`` the number of objective calls
    including the initial population.
    """

    trace: np.ndarray
    best_position: np.ndarray
    best_fitness: float
    evaluations: int

    def to_json(self) -> str:
        """Serialize with a stable field order (trace, position, fitness, evals)."""
        payload = {
            "trace": [float(v) for v in self.trace],
            "best_position": [float(v) for v in self.best_position],
            "best_fitness": float(self.best_fitness),
            "evaluations": int(self.evaluations),
        }
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> "RunRecord":
        data = json.loads(text)
        return cls(
            trace=np.asarray(data["trace"], dtype=np.float64),
            best_position=np.asarray(data["best_position"], dtype=np.float64),
            best_fitness=float(data["best_fitness"]),
            evaluations=int(data["evaluations"]),
        )


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based deterministic generator used for every stochastic draw."""
    return np.random.Generator(np.random.Philox(key=int(seed)))


def levy_sigma(beta: float) -> float:
    """Mantegna scale for the numerator Gaussian of the Levy step."""
    num = math.gamma(1.0 + beta) * math.sin(math.pi * beta / 2.0)
    den = math.gamma((1.0 + beta) / 2.0) * beta * 2.0 ** ((beta - 1.0) / 2.0)
    return (num / den) ** (1.0 / beta)


def levy_step(rng: np.random.Generator, beta: float, dim: int) -> np.ndarray:
    """One heavy-tailed random vector, clamped component-wise into [-1, 1].

    Mantegna construction: ``sigma * u / |v|**(1/beta)`` with ``u``, ``v``
    standard normal. The clamp keeps the result valid as the random factor
    of the position-scaled walk.
    """
    if not 1.0 < beta <= 2.0:
        raise ValueError(f"beta must be in (1, 2], got {beta}")
    u = rng.standard_normal(dim)
    v = rng.standard_normal(dim)
    return np.clip(levy_sigma(beta) * u / np.abs(v) ** (1.0 / beta), -1.0, 1.0)


def fitness_weight(
    best_fitness: float,
    current_fitness: float,
    wf_effective: float,
    direction: Direction = Direction.MINIMIZE,
) -> float:
    """Raw fitness weight ``|best/current| - wf`` (inverse under maximize).

    Returns the unclamped value; callers clamp into [0, 1] before branch
    dispatch. Raises :class:`DegenerateDivide` when the denominator fitness
    is exactly zero, in which case the caller must route the agent to the
    random-walk pace rule instead of guessing a ratio.
    """
    if not 0.0 <= wf_effective <= 1.0:
        raise ValueError(f"effective weight factor must be in [0, 1], got {wf_effective}")
    if direction is Direction.MINIMIZE:
        num, den = best_fitness, current_fitness
    else:
        num, den = current_fitness, best_fitness
    if den == 0.0:
        raise DegenerateDivide("fitness-weight denominator is zero")
    return abs(num / den) - wf_effective


def compute_pace(
    agent: ScoutAgent,
    global_best_position: np.ndarray,
    fw: float,
    rng: np.random.Generator,
    degenerate: bool = False,
    levy_beta: float = DEFAULT_LEVY_BETA,
) -> np.ndarray:
    """Pace vector for one agent given its clamped fitness weight.

    ``fw`` of exactly 0 or 1, or a degenerate fitness flag, selects the
    position-scaled random walk with a fresh Levy vector; otherwise one
    scalar ``r`` uniform on [-1, 1] picks the sign of the step relative to
    the global best (toward it when ``r < 0``, away otherwise).
    """
    position = np.asarray(agent.position, dtype=np.float64)
    if degenerate or fw == 0.0 or fw == 1.0:
        return position * levy_step(rng, levy_beta, position.size)
    if not 0.0 < fw < 1.0:
        raise ValueError(f"fw must lie in [0, 1] after clamping, got {fw}")
    r = rng.uniform(-1.0, 1.0)
    step = (position - np.asarray(global_best_position, dtype=np.float64)) * fw
    return -step if r < 0.0 else step


def _weight_schedule(config: OptimizerConfig) -> np.ndarray:
    if isinstance(config.weight_mode, ChaoticSineWeight):
        return sine_schedule(config.epochs, config.weight_mode.m, config.weight_mode.w0)
    return np.full(config.epochs, config.weight_mode.wf, dtype=np.float64)


def _draw_epoch_blocks(rng, pop: int, dim: int, beta: float):
    """One epoch worth of random factors, in the documented order."""
    r_u = rng.uniform(-1.0, 1.0, pop)
    u = rng.standard_normal((pop, dim))
    v = rng.standard_normal((pop, dim))
    r_levy = np.clip(levy_sigma(beta) * u / np.abs(v) ** (1.0 / beta), -1.0, 1.0)
    return r_u, r_levy


def init_state(
    objective: Callable[[np.ndarray], float],
    bounds: Bounds,
    config: OptimizerConfig,
) -> OptimizerState:
    """Initialize agents, evaluate them, and build the starting state."""
    rng = make_rng(config.seed)
    positions = initialize_population(
        config.population, bounds, config.initializer.value, rng
    )
    agents = []
    best = None
    maximize = config.direction is Direction.MAXIMIZE
    for row in positions:
        fit = float(objective(row.copy()))
        if not math.isfinite(fit):
            raise ValueError("objective returned a non-finite value during initialization")
        agent = ScoutAgent(position=row.copy(), pace=np.zeros(bounds.dimension), fitness=fit)
        agents.append(agent)
        if best is None or ((fit > best.fitness) if maximize else (fit < best.fitness)):
            best = agent
    global_best = ScoutAgent(
        position=best.position.copy(), pace=best.pace.copy(), fitness=best.fitness
    )
    ws = config.weight_mode.w0 if isinstance(config.weight_mode, ChaoticSineWeight) else 0.0
    return OptimizerState(
        agents=agents,
        global_best=global_best,
        epoch=0,
        rng=rng,
        ws=ws,
        evaluations=config.population,
    )


def step_epoch(
    state: OptimizerState,
    objective: Callable[[np.ndarray], float],
    bounds: Bounds,
    config: OptimizerConfig,
) -> OptimizerState:
    """Advance the optimizer by one epoch (mutates and returns ``state``)."""
    pop = len(state.agents)
    dim = bounds.dimension
    if isinstance(config.weight_mode, ChaoticSineWeight):
        state.ws = (config.weight_mode.m / 4.0) * math.sin(math.pi * state.ws)
        wf = state.ws
    else:
        wf = config.weight_mode.wf
    r_u, r_levy = _draw_epoch_blocks(state.rng, pop, dim, config.levy_beta)

    x = np.stack([a.position for a in state.agents])
    f = np.array([a.fitness for a in state.agents])
    paces = np.stack([a.pace for a in state.agents])
    maximize = config.direction is Direction.MAXIMIZE

    def checked(vec):
        val = float(objective(vec))
        if not math.isfinite(val):
            raise ValueError("objective returned a non-finite value")
        return val

    trace, best_x, best_f, evals = _engine.run_generic(
        checked,
        x,
        f,
        paces,
        bounds.lower,
        bounds.upper,
        np.array([wf]),
        r_u[None, :],
        r_levy[None, :, :],
        maximize,
    )
    for i, agent in enumerate(state.agents):
        agent.position = x[i]
        agent.fitness = float(f[i])
        agent.pace = paces[i]
    better = (best_f > state.global_best.fitness) if maximize else (
        best_f < state.global_best.fitness
    )
    if better:
        state.global_best = ScoutAgent(
            position=best_x.copy(), pace=np.zeros(dim), fitness=float(best_f)
        )
    state.epoch += 1
    state.evaluations += evals
    return state


def run(
    objective: Callable[[np.ndarray], float],
    bounds: Bounds,
    config: OptimizerConfig,
    kernel_args: Sequence | None = None,
) -> RunRecord:
    """Initialize, loop ``config.epochs`` epochs, and report the result.

    ``kernel_args`` is an optional tuple of dispatch-fitness parameters (see
    :meth:`fdo_eld.eld.DispatchProblem.kernel_args`); when provided and the
    numba backend is active the fused kernel is used. Results are identical
    either way; the fused path is just fast.
    """
    state = init_state(objective, bounds, config)
    pop, dim = config.population, bounds.dimension
    wf_sched = _weight_schedule(config)
    if config.epochs == 0:
        return RunRecord(
            trace=np.empty(0),
            best_position=state.global_best.position.copy(),
            best_fitness=state.global_best.fitness,
            evaluations=state.evaluations,
        )
    r_u_all = np.empty((config.epochs, pop))
    r_levy_all = np.empty((config.epochs, pop, dim))
    for e in range(config.epochs):
        r_u_all[e], r_levy_all[e] = _draw_epoch_blocks(state.rng, pop, dim, config.levy_beta)

    x = np.stack([a.position for a in state.agents])
    f = np.array([a.fitness for a in state.agents])
    paces = np.stack([a.pace for a in state.agents])
    maximize = config.direction is Direction.MAXIMIZE

    if kernel_args is not None:
        trace, best_x, best_f, evals = _engine.run_eld(
            x, f, paces, bounds.lower, bounds.upper,
            wf_sched, r_u_all, r_levy_all, maximize, *kernel_args,
        )
    else:
        def checked(vec):
            val = float(objective(vec))
            if not math.isfinite(val):
                raise ValueError("objective returned a non-finite value")
            return val

        trace, best_x, best_f, evals = _engine.run_generic(
            checked, x, f, paces, bounds.lower, bounds.upper,
            wf_sched, r_u_all, r_levy_all, maximize,
        )
    return RunRecord(
        trace=trace,
        best_position=np.asarray(best_x, dtype=np.float64),
        best_fitness=float(best_f),
        evaluations=state.evaluations + int(evals),
    )
