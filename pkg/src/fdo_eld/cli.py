"""Command-line experiment harness.

Subcommands:
  run       execute the full experiment matrix and write report files
  solve     run a single (variant, demand, epochs, chunk) cell
  validate  lint a dataset file

Everything is explicit flags; no environment variables are consulted (the
kernel backend switch in :mod:`fdo_eld._backend` only changes speed, never
results).
"""

from __future__ import annotations

import argparse
import json
import sys

from .experiments import (
    DEFAULT_DEMANDS,
    DEFAULT_EPOCHS,
    DEFAULT_POPULATION,
    DEFAULT_SEEDS,
    VARIANTS,
    DatasetError,
    ExperimentSpec,
    chunk_problem,
    emit_reports,
    load_dataset,
    packaged_dataset_path,
    run_experiments,
    solve_cell,
)


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v)


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v)


def _seed_list(text: str) -> tuple[int, ...]:
    """Either a count N (seeds 0..N-1) or an explicit comma list."""
    values = _int_list(text)
    if len(values) == 1 and "," not in text:
        return tuple(range(values[0]))
    return values


def _variant_list(text: str) -> tuple[str, ...]:
    values = tuple(v.strip().lower() for v in text.split(",") if v.strip())
    for v in values:
        if v not in VARIANTS:
            raise argparse.ArgumentTypeError(f"unknown variant {v!r}")
    return values


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--dataset", default=None,
        help="dataset file path (default: the bundled 24-unit set)",
    )
    parser.add_argument(
        "--pop", type=int, default=DEFAULT_POPULATION, help="population size"
    )
    parser.add_argument(
        "--seeds", type=_seed_list, default=DEFAULT_SEEDS,
        help="seed count N (runs 0..N-1) or comma-separated list",
    )
    parser.add_argument(
        "--e-limit", type=float, default=None,
        help="emission cap in lb; switches the objective to the capped mode",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fdo-eld",
        description="Fitness-dependent-optimizer experiments on economic load dispatch",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the full experiment matrix")
    _add_common(p_run)
    p_run.add_argument("--demand", type=_float_list, default=DEFAULT_DEMANDS,
                       help="comma-separated demands in MW")
    p_run.add_argument("--epochs", type=_int_list, default=DEFAULT_EPOCHS,
                       help="comma-separated epoch counts")
    p_run.add_argument("--variant", type=_variant_list, default=VARIANTS,
                       help="comma-separated variants (standard,enhanced)")
    p_run.add_argument("--out", required=True, help="output directory")

    p_solve = sub.add_parser("solve", help="run a single experiment cell")
    _add_common(p_solve)
    p_solve.add_argument("--demand", type=float, default=DEFAULT_DEMANDS[0])
    p_solve.add_argument("--epochs", type=int, default=DEFAULT_EPOCHS[0])
    p_solve.add_argument("--variant", choices=VARIANTS, default="enhanced")
    p_solve.add_argument("--chunk", type=int, default=1, help="1-based chunk index")
    p_solve.add_argument("--out", default=None, help="optional output directory")

    p_val = sub.add_parser("validate", help="lint a dataset file")
    p_val.add_argument("--dataset", default=None)
    return parser


def _dataset_path(arg):
    return packaged_dataset_path() if arg is None else arg


def cmd_run(args) -> int:
    spec = ExperimentSpec(
        dataset_path=_dataset_path(args.dataset),
        demands=args.demand,
        epochs_list=args.epochs,
        population=args.pop,
        variants=args.variant,
        seeds=args.seeds,
        output_dir=args.out,
        e_limit=args.e_limit,
    )
    table = run_experiments(spec)
    emit_reports(table, args.out)
    failures = 0
    for cell in table.cells:
        if cell.error:
            failures += 1
            print(f"FAIL {cell.variant} d={cell.demand:g} e={cell.epochs} "
                  f"chunk={cell.chunk}: {cell.error}")
        else:
            rep = cell.representative()
            print(f"ok   {cell.variant} d={cell.demand:g} e={cell.epochs} "
                  f"chunk={cell.chunk}: fuel={rep.fuel_cost:.6g} "
                  f"residual={rep.search_residual:.3e}")
    print(f"reports written to {args.out}")
    return 1 if failures else 0


def cmd_solve(args) -> int:
    units, loss, chunking = load_dataset(_dataset_path(args.dataset))
    if not 1 <= args.chunk <= len(chunking):
        print(f"chunk must be in 1..{len(chunking)}", file=sys.stderr)
        return 2
    problem = chunk_problem(units, loss, chunking, args.chunk, args.demand, args.e_limit)
    seeds = solve_cell(problem, args.variant, args.epochs, args.seeds, args.pop)
    order = sorted(range(len(seeds)), key=lambda i: seeds[i].record.best_fitness)
    rep = seeds[order[(len(order) - 1) // 2]]
    payload = {
        "variant": args.variant,
        "demand": args.demand,
        "epochs": args.epochs,
        "chunk": args.chunk,
        "representative_seed": rep.seed,
        "allocation_mw": [float(v) for v in rep.allocation],
        "fuel_cost": rep.fuel_cost,
        "emission": rep.emission,
        "transmission_loss_mw": rep.loss,
        "search_residual_mw": rep.search_residual,
        "balance_residual_mw": rep.balance_residual,
        "best_fitness": rep.record.best_fitness,
    }
    print(json.dumps(payload, indent=2))
    if args.out:
        from .experiments import CellResult, ResultTable, ExperimentSpec

        spec = ExperimentSpec(
            dataset_path=_dataset_path(args.dataset), demands=(args.demand,),
            epochs_list=(args.epochs,), population=args.pop,
            variants=(args.variant,), seeds=tuple(s.seed for s in seeds),
            e_limit=args.e_limit,
        )
        cell = CellResult(variant=args.variant, demand=args.demand,
                          epochs=args.epochs, chunk=args.chunk, seeds=seeds)
        emit_reports(ResultTable(spec=spec, cells=[cell]), args.out)
        print(f"reports written to {args.out}")
    return 0


def cmd_validate(args) -> int:
    path = _dataset_path(args.dataset)
    try:
        units, loss, chunking = load_dataset(path)
    except DatasetError as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return 1
    print(f"ok: {len(units)} units in {len(chunking)} chunks of "
          f"{chunking[0][1] - chunking[0][0]}, loss matrix {loss.dimension}x"
          f"{loss.dimension}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    if args.command == "solve":
        return cmd_solve(args)
    return cmd_validate(args)


if __name__ == "__main__":
    sys.exit(main())
