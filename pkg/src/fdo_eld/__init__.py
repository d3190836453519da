"""Fitness-dependent optimizer with an enhanced variant (Sobol population
initialization plus a chaotic sine-map weight schedule), applied to combined
economic/emission load dispatch with B-coefficient transmission losses."""

from ._backend import BACKEND
from .chaos import SineMapState, sine_map_next, sine_schedule
from .core import (
    Bounds,
    ChaoticSineWeight,
    ConstantWeight,
    DegenerateDivide,
    Direction,
    Initializer,
    OptimizerConfig,
    OptimizerState,
    RunRecord,
    ScoutAgent,
    compute_pace,
    fitness_weight,
    init_state,
    levy_step,
    run,
    step_epoch,
)
from .eld import (
    DispatchProblem,
    DispatchSolution,
    GeneratorUnit,
    LossMatrix,
    NonConvergent,
    ceed_fitness,
    eced_fitness,
    emission,
    fuel_cost,
    price_penalty_factor,
    repair,
    transmission_loss,
)
from .init import (
    SequenceExhausted,
    SobolGenerator,
    centered_l2_discrepancy,
    initialize_population,
    sobol_next,
)
from .experiments import (
    ExperimentSpec,
    InfiniteF,
    ResultTable,
    emit_reports,
    load_dataset,
    one_way_anova,
    packaged_dataset_path,
    run_experiments,
    save_dataset,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Bounds",
    "ChaoticSineWeight",
    "ConstantWeight",
    "DegenerateDivide",
    "Direction",
    "DispatchProblem",
    "DispatchSolution",
    "ExperimentSpec",
    "GeneratorUnit",
    "InfiniteF",
    "Initializer",
    "LossMatrix",
    "NonConvergent",
    "OptimizerConfig",
    "OptimizerState",
    "ResultTable",
    "RunRecord",
    "ScoutAgent",
    "SequenceExhausted",
    "SineMapState",
    "SobolGenerator",
    "ceed_fitness",
    "centered_l2_discrepancy",
    "compute_pace",
    "eced_fitness",
    "emission",
    "emit_reports",
    "fitness_weight",
    "fuel_cost",
    "init_state",
    "initialize_population",
    "levy_step",
    "load_dataset",
    "one_way_anova",
    "packaged_dataset_path",
    "price_penalty_factor",
    "repair",
    "run",
    "run_experiments",
    "save_dataset",
    "sine_map_next",
    "sine_schedule",
    "sobol_next",
    "step_epoch",
    "transmission_loss",
]
