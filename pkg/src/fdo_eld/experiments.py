"""Experiment harness: dataset ingestion, matrix execution, statistics, reports.

The experiment matrix is (variant x demand x epochs x chunk x seed). Each
chunk of units is dispatched independently against the shared loss matrix.
The standard variant uses uniform initialization with a constant weight
factor of 0; the enhanced variant uses Sobol initialization with the
chaotic sine-map weight schedule. Everything is deterministic given the
dataset and the spec; output files are byte-stable.

File schemas are documented in the README (results.csv, summary.json,
trace_<cell>.csv, anova.csv).
"""

from __future__ import annotations

import importlib.resources
import json
import statistics
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .chaos import DEFAULT_M, DEFAULT_W0
from .core import (
    ChaoticSineWeight,
    ConstantWeight,
    Direction,
    Initializer,
    OptimizerConfig,
    RunRecord,
    run,
)
from .eld import (
    DispatchProblem,
    GeneratorUnit,
    LossMatrix,
    NonConvergent,
    emission,
    fuel_cost,
    transmission_loss,
)

VARIANTS = ("standard", "enhanced")
DEFAULT_DEMANDS = (400.0, 700.0)
DEFAULT_EPOCHS = (100, 200)
DEFAULT_POPULATION = 50
DEFAULT_SEEDS = tuple(range(20))


class DatasetError(ValueError):
    """Dataset file rejected; the message carries the offending line."""

    def __init__(self, path, line: int | None, reason: str):
        loc = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{loc}: {reason}")
        self.path = path
        self.line = line
        self.reason = reason


class InfiniteF(ArithmeticError):
    """One-way ANOVA within-group variance is zero; F is unbounded."""


def packaged_dataset_path():
    """Path of the bundled 24-unit dataset."""
    return importlib.resources.files("fdo_eld").joinpath("data", "units24.eld")


@dataclass
class ExperimentSpec:
    """Full description of one experiment matrix."""

    dataset_path: str | Path
    demands: tuple[float, ...] = DEFAULT_DEMANDS
    epochs_list: tuple[int, ...] = DEFAULT_EPOCHS
    population: int = DEFAULT_POPULATION
    variants: tuple[str, ...] = VARIANTS
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    output_dir: str | Path | None = None
    e_limit: float | None = None  # switches every cell to the emission-capped mode

    def __post_init__(self):
        if not (self.demands and self.epochs_list and self.variants and self.seeds):
            raise ValueError("demands, epochs_list, variants and seeds must be non-empty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be distinct")
        for v in self.variants:
            if v not in VARIANTS:
                raise ValueError(f"unknown variant {v!r}; expected one of {VARIANTS}")


@dataclass
class SeedResult:
    """Outcome of a single optimizer run inside one cell."""

    seed: int
    record: RunRecord
    allocation: np.ndarray  # repaired, feasible dispatch
    fuel_cost: float
    emission: float
    loss: float
    search_residual: float  # sum(raw best) - demand
    balance_residual: float  # sum(repaired) - loss(repaired) - demand


@dataclass
class CellResult:
    """Aggregate over the seeds of one (variant, demand, epochs, chunk) cell."""

    variant: str
    demand: float
    epochs: int
    chunk: int  # 1-based
    seeds: list[SeedResult] = field(default_factory=list)
    error: str | None = None

    @property
    def key(self):
        return (self.variant, self.demand, self.epochs, self.chunk)

    def _fitnesses(self):
        return [s.record.best_fitness for s in self.seeds]

    def representative(self) -> SeedResult:
        """Seed with the median best fitness (lower middle for even counts)."""
        order = sorted(range(len(self.seeds)), key=lambda i: self._fitnesses()[i])
        return self.seeds[order[(len(order) - 1) // 2]]

    def best(self) -> SeedResult:
        return min(self.seeds, key=lambda s: s.record.best_fitness)

    def mean_allocation(self) -> np.ndarray:
        return np.mean([s.allocation for s in self.seeds], axis=0)

    def median_search_residual(self) -> float:
        return float(statistics.median(abs(s.search_residual) for s in self.seeds))

    def median_fuel_cost(self) -> float:
        return float(statistics.median(s.fuel_cost for s in self.seeds))


@dataclass
class ResultTable:
    spec: ExperimentSpec
    cells: list[CellResult]

    def cell(self, variant: str, demand: float, epochs: int, chunk: int) -> CellResult:
        for c in self.cells:
            if c.key == (variant, demand, epochs, chunk):
                return c
        raise KeyError((variant, demand, epochs, chunk))


# ---------------------------------------------------------------------------
# Dataset file handling
# ---------------------------------------------------------------------------

def load_dataset(path):
    """Parse a dispatch dataset file.

    Returns ``(units, loss, chunking)`` where ``chunking`` is a list of
    ``(start, stop)`` index pairs splitting the unit list into equal
    consecutive chunks. Rejects malformed rows and invariant violations with
    line-numbered :class:`DatasetError` messages.
    """
    units_expected = None
    chunk_size = None
    unit_rows = {}
    bmat = None
    b0 = None
    b00 = 0.0
    with open(path) as fh:
        lines = list(fh)
    i = 0
    while i < len(lines):
        lineno = i + 1
        line = lines[i].strip()
        i += 1
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        key = parts[0]
        try:
            if key == "chunk_size":
                chunk_size = int(parts[1])
            elif key == "units":
                units_expected = int(parts[1])
            elif key == "unit":
                idx = int(parts[1])
                vals = [float(x) for x in parts[2:]]
                if len(vals) != 8:
                    raise DatasetError(path, lineno, f"unit row needs 8 values, got {len(vals)}")
                if idx in unit_rows:
                    raise DatasetError(path, lineno, f"duplicate unit index {idx}")
                unit_rows[idx] = (lineno, vals)
            elif key == "bmatrix":
                dim = int(parts[1])
                rows = []
                for r in range(dim):
                    rl = lines[i].strip().split()
                    if len(rl) != dim:
                        raise DatasetError(path, i + 1, f"B row needs {dim} entries, got {len(rl)}")
                    rows.append([float(x) for x in rl])
                    i += 1
                bmat = np.array(rows)
            elif key == "b0":
                b0 = np.array([float(x) for x in parts[1:]])
            elif key == "b00":
                b00 = float(parts[1])
            else:
                raise DatasetError(path, lineno, f"unknown directive {key!r}")
        except DatasetError:
            raise
        except (ValueError, IndexError) as exc:
            raise DatasetError(path, lineno, f"cannot parse: {exc}") from None
    if units_expected is None or chunk_size is None:
        raise DatasetError(path, None, "missing 'units' or 'chunk_size' directive")
    if bmat is None:
        raise DatasetError(path, None, "missing 'bmatrix' block")
    if sorted(unit_rows) != list(range(1, units_expected + 1)):
        raise DatasetError(
            path, None,
            f"expected unit indices 1..{units_expected}, got {sorted(unit_rows)}"
        )
    if units_expected % chunk_size != 0:
        raise DatasetError(path, None, "unit count must be a multiple of chunk_size")
    units = []
    for idx in range(1, units_expected + 1):
        lineno, (a, b, c, ea, eb, ec, pmin, pmax) = unit_rows[idx]
        try:
            units.append(
                GeneratorUnit(p_min=pmin, p_max=pmax, a=a, b=b, c=c, ea=ea, eb=eb, ec=ec)
            )
        except ValueError as exc:
            raise DatasetError(path, lineno, f"unit {idx}: {exc}") from None
    try:
        loss = LossMatrix(b=bmat, b0=b0, b00=b00)
    except ValueError as exc:
        raise DatasetError(path, None, f"loss matrix: {exc}") from None
    if loss.dimension != chunk_size:
        raise DatasetError(
            path, None,
            f"loss matrix dimension {loss.dimension} must equal chunk_size {chunk_size}"
        )
    chunking = [
        (start, start + chunk_size) for start in range(0, units_expected, chunk_size)
    ]
    return units, loss, chunking


def save_dataset(units, loss: LossMatrix, chunk_size: int, path) -> None:
    """Serialize structures back into the dataset file format."""
    lines = [
        "# dispatch dataset (generated)",
        f"chunk_size {chunk_size}",
        f"units {len(units)}",
    ]
    for i, u in enumerate(units, start=1):
        lines.append(
            f"unit {i} {u.a!r} {u.b!r} {u.c!r} {u.ea!r} {u.eb!r} {u.ec!r} "
            f"{u.p_min!r} {u.p_max!r}"
        )
    lines.append(f"bmatrix {loss.dimension}")
    for row in loss.b:
        lines.append(" ".join(repr(float(x)) for x in row))
    lines.append("b0 " + " ".join(repr(float(x)) for x in loss.b0))
    lines.append(f"b00 {float(loss.b00)!r}")
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Matrix execution
# ---------------------------------------------------------------------------

def variant_config(variant: str, population: int, epochs: int, seed: int) -> OptimizerConfig:
    """Optimizer configuration for a named variant."""
    if variant == "standard":
        return OptimizerConfig(
            population=population, epochs=epochs, seed=seed,
            weight_mode=ConstantWeight(0.0), initializer=Initializer.UNIFORM,
        )
    if variant == "enhanced":
        return OptimizerConfig(
            population=population, epochs=epochs, seed=seed,
            weight_mode=ChaoticSineWeight(m=DEFAULT_M, w0=DEFAULT_W0),
            initializer=Initializer.SOBOL,
        )
    raise ValueError(f"unknown variant {variant!r}")


def solve_cell(
    problem: DispatchProblem,
    variant: str,
    epochs: int,
    seeds,
    population: int = DEFAULT_POPULATION,
) -> list[SeedResult]:
    """Run one experiment cell: every seed on one chunk problem."""
    out = []
    bounds = problem.bounds
    kernel_args = problem.kernel_args()
    for seed in seeds:
        config = variant_config(variant, population, epochs, seed)
        record = run(problem.fitness, bounds, config, kernel_args=kernel_args)
        sol = problem.solution(record.best_position)
        out.append(
            SeedResult(
                seed=seed,
                record=record,
                allocation=sol.powers,
                fuel_cost=sol.fuel_cost,
                emission=sol.emission,
                loss=sol.loss,
                search_residual=problem.search_residual(record.best_position),
                balance_residual=sol.balance_residual,
            )
        )
    return out


def chunk_problem(units, loss, chunking, chunk: int, demand: float,
                  e_limit: float | None = None) -> DispatchProblem:
    """Dispatch problem for the 1-based ``chunk`` at ``demand`` MW."""
    start, stop = chunking[chunk - 1]
    mode = "ceed" if e_limit is None else "eced"
    return DispatchProblem(
        units=list(units[start:stop]),
        loss=loss,
        demand=demand,
        mode=mode,
        e_limit=float("inf") if e_limit is None else e_limit,
    )


def run_experiments(spec: ExperimentSpec) -> ResultTable:
    """Execute the full matrix; failed cells are recorded, not fatal."""
    units, loss, chunking = load_dataset(spec.dataset_path)
    cells = []
    for variant in spec.variants:
        for demand in spec.demands:
            for epochs in spec.epochs_list:
                for chunk in range(1, len(chunking) + 1):
                    cell = CellResult(variant=variant, demand=float(demand),
                                      epochs=int(epochs), chunk=chunk)
                    try:
                        problem = chunk_problem(units, loss, chunking, chunk,
                                                float(demand), spec.e_limit)
                        cell.seeds = solve_cell(
                            problem, variant, int(epochs), spec.seeds, spec.population
                        )
                    except (ValueError, NonConvergent) as exc:
                        cell.error = str(exc)
                    cells.append(cell)
    cells.sort(key=lambda c: (c.variant, c.demand, c.epochs, c.chunk))
    return ResultTable(spec=spec, cells=cells)


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------

def one_way_anova(groups) -> float:
    """F statistic of a one-way analysis of variance.

    ``F = (between-group mean square) / (within-group mean square)``.
    Requires at least two groups with at least two samples each. Raises
    :class:`InfiniteF` when the within-group variance is exactly zero.
    """
    if len(groups) < 2:
        raise ValueError("need at least two groups")
    arrays = [np.asarray(g, dtype=np.float64) for g in groups]
    if any(a.size < 2 for a in arrays):
        raise ValueError("every group needs at least two samples")
    n_total = sum(a.size for a in arrays)
    grand = sum(a.sum() for a in arrays) / n_total
    ss_between = sum(a.size * (a.mean() - grand) ** 2 for a in arrays)
    ss_within = sum(((a - a.mean()) ** 2).sum() for a in arrays)
    df_between = len(arrays) - 1
    df_within = n_total - len(arrays)
    if ss_within == 0.0:
        raise InfiniteF("zero within-group variance")
    return float((ss_between / df_between) / (ss_within / df_within))


# ---------------------------------------------------------------------------
# Report emission
# ---------------------------------------------------------------------------

def _fmt(value: float) -> str:
    return repr(float(value))


def _cell_tag(cell: CellResult) -> str:
    return f"{cell.variant}_d{cell.demand:g}_e{cell.epochs}_c{cell.chunk}"


def emit_reports(table: ResultTable, output_dir) -> list[Path]:
    """Write results.csv, summary.json, per-cell traces, and anova.csv.

    All files use '.' decimals, '\\n' newlines and shortest round-trip float
    formatting; the column orders are fixed. Returns the written paths.
    """
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    lines = ["variant,demand,epochs,chunk,unit,mean_mw,best_mw"]
    for cell in table.cells:
        if cell.error or not cell.seeds:
            continue
        mean_alloc = cell.mean_allocation()
        best_alloc = cell.best().allocation
        for j in range(mean_alloc.size):
            lines.append(
                f"{cell.variant},{cell.demand:g},{cell.epochs},{cell.chunk},{j + 1},"
                f"{_fmt(mean_alloc[j])},{_fmt(best_alloc[j])}"
            )
    results_csv = out / "results.csv"
    results_csv.write_text("\n".join(lines) + "\n")
    written.append(results_csv)

    summary = {"cells": []}
    for cell in table.cells:
        entry = {
            "variant": cell.variant,
            "demand": cell.demand,
            "epochs": cell.epochs,
            "chunk": cell.chunk,
        }
        if cell.error or not cell.seeds:
            entry["error"] = cell.error or "no seeds"
        else:
            rep = cell.representative()
            entry["representative"] = {
                "seed": rep.seed,
                "allocation_mw": [float(v) for v in rep.allocation],
                "fuel_cost": rep.fuel_cost,
                "emission": rep.emission,
                "transmission_loss_mw": rep.loss,
                "search_residual_mw": rep.search_residual,
                "balance_residual_mw": rep.balance_residual,
            }
            entry["median"] = {
                "fuel_cost": cell.median_fuel_cost(),
                "abs_search_residual_mw": cell.median_search_residual(),
            }
            entry["seeds"] = [
                {
                    "seed": s.seed,
                    "best_fitness": s.record.best_fitness,
                    "fuel_cost": s.fuel_cost,
                    "search_residual_mw": s.search_residual,
                }
                for s in cell.seeds
            ]
        summary["cells"].append(entry)
    summary_json = out / "summary.json"
    summary_json.write_text(json.dumps(summary, indent=2) + "\n")
    written.append(summary_json)

    for cell in table.cells:
        if cell.error or not cell.seeds:
            continue
        header = "epoch," + ",".join(f"seed{s.seed}" for s in cell.seeds)
        rows = [header]
        for e in range(cell.epochs):
            rows.append(
                f"{e}," + ",".join(_fmt(s.record.trace[e]) for s in cell.seeds)
            )
        trace_csv = out / f"trace_{_cell_tag(cell)}.csv"
        trace_csv.write_text("\n".join(rows) + "\n")
        written.append(trace_csv)

    lines = ["demand,epochs,chunk,f_statistic"]
    if set(VARIANTS) <= set(table.spec.variants):
        for demand in table.spec.demands:
            for epochs in table.spec.epochs_list:
                chunks = sorted({c.chunk for c in table.cells})
                for chunk in chunks:
                    try:
                        std = table.cell("standard", float(demand), int(epochs), chunk)
                        enh = table.cell("enhanced", float(demand), int(epochs), chunk)
                    except KeyError:
                        continue
                    if std.error or enh.error:
                        continue
                    groups = [
                        [s.record.best_fitness for s in std.seeds],
                        [s.record.best_fitness for s in enh.seeds],
                    ]
                    try:
                        f_stat = _fmt(one_way_anova(groups))
                    except InfiniteF:
                        f_stat = "inf"
                    lines.append(f"{demand:g},{epochs},{chunk},{f_stat}")
    anova_csv = out / "anova.csv"
    anova_csv.write_text("\n".join(lines) + "\n")
    written.append(anova_csv)
    return written
