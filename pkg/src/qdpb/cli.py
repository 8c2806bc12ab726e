"""Command-line front end.

Subcommands: gen-instance, run, oracle, analyze, verify.  Exit codes: 0 on
success, 1 for configuration problems (bad flags, bad files, bad parameters)
and for failed verification, 2 for runtime errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from .analysis import (
    SetFunctionTable,
    approximation_ratio,
    brute_force_opt,
    escape_radius,
    gamma_min,
)
from .core import Solution
from .errors import ParameterError, QdpbError, ValidationError
from .harness import (
    ExperimentConfig,
    ProblemSpec,
    config_from_dict,
    export_report,
    resolve_problem,
    run_experiment,
)
from .algorithms import QualityTarget
from .core import RandomSource
from .instances import (
    Example1Params,
    Example2Params,
    example1_max_coverage,
    example2_set_cover,
    identify_instance,
    random_max_coverage,
    random_set_cover,
    write_instance,
)
from .problems import MaxCoverageInstance

__all__ = ["main"]


class _Parser(argparse.ArgumentParser):
    """argparse with the documented exit code for usage errors (1, not 2)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _number(text: str):
    """Fitness values on the command line: int when integral, float otherwise."""
    try:
        return int(text)
    except ValueError:
        try:
            return float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None


# ---------------------------------------------------------------------------
# gen-instance


def _cmd_gen_instance(args) -> int:
    if args.family == "example1":
        inst = example1_max_coverage(Example1Params(args.n, Fraction(args.delta)))
    elif args.family == "example2":
        inst = example2_set_cover(Example2Params(args.n))
    elif args.family == "random-max-coverage":
        inst = random_max_coverage(
            args.n, args.m_elements, args.density, args.k, RandomSource(args.instance_seed)
        )
    else:
        inst = random_set_cover(
            args.n,
            args.m_elements,
            args.density,
            args.max_weight,
            RandomSource(args.instance_seed),
        )
    write_instance(inst, args.out)
    if isinstance(inst, MaxCoverageInstance):
        print(f"wrote max-coverage instance: n={inst.n} m={inst.m_elements} k={inst.k} -> {args.out}")
    else:
        print(
            f"wrote set-cover instance: n={inst.n} m={inst.m_elements} "
            f"penalty={inst.penalty} -> {args.out}"
        )
    return 0


# ---------------------------------------------------------------------------
# run


def _read_seed_population(value: str):
    if value.startswith("@"):
        with open(value[1:], "r", encoding="utf-8") as fh:
            members = tuple(line.strip() for line in fh if line.strip())
        if not members:
            raise ParameterError(f"seed population file {value[1:]!r} is empty")
        return members
    return value


def _build_config_from_flags(args) -> ExperimentConfig:
    if args.instance is None:
        raise ParameterError("run needs --instance FILE (or --config FILE)")
    if args.budget is None:
        raise ParameterError("run needs --budget (or --config FILE)")
    spec = ProblemSpec(kind="file", path=args.instance)
    target = None
    if args.target_ratio is not None and args.target_fitness is not None:
        raise ParameterError("give either --target-fitness or --target-ratio, not both")
    if args.target_ratio is not None:
        problem = resolve_problem(spec)
        if problem.known_opt is None:
            raise ParameterError(
                "--target-ratio needs a known optimum; this instance is too large "
                "for the exact oracle and is not a recognized family"
            )
        target = QualityTarget(
            threshold=args.target_ratio * problem.known_opt,
            strict=args.target_strict,
            require_feasible=not args.target_allow_infeasible,
            required_cell=args.target_cell,
        )
    elif args.target_fitness is not None:
        target = QualityTarget(
            threshold=args.target_fitness,
            strict=args.target_strict,
            require_feasible=not args.target_allow_infeasible,
            required_cell=args.target_cell,
        )
    elif args.target_cell is not None or args.target_strict or args.target_allow_infeasible:
        raise ParameterError("target modifiers need --target-fitness or --target-ratio")
    seed_population = None
    if args.seed_population is not None:
        seed_population = _read_seed_population(args.seed_population)
    return ExperimentConfig(
        problem=spec,
        algorithm=args.algo,
        budget=args.budget,
        trials=args.trials,
        master_seed=args.master_seed,
        init_count=args.init_count,
        target=target,
        stop_on_target=not args.run_to_budget,
        strict=not args.relaxed,
        seed_population=seed_population,
        allow_unfair=args.allow_unfair,
        workers=args.workers,
        milestone_every=args.milestone_every,
    )


def _cmd_run(args) -> int:
    if args.config is not None:
        if args.instance is not None or args.budget is not None:
            raise ParameterError("--config replaces the problem/budget flags; give one or the other")
        with open(args.config, "r", encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValidationError(
                    f"{args.config}: not valid JSON (line {exc.lineno}, column {exc.colno})"
                ) from exc
        config = config_from_dict(data)
        if args.algo is not None and args.algo != config.algorithm:
            raise ParameterError(
                f"--algo {args.algo} conflicts with the config file's {config.algorithm!r}"
            )
    else:
        if args.algo is None:
            raise ParameterError("run needs --algo map-elites|ea (or --config FILE)")
        config = _build_config_from_flags(args)
    report = run_experiment(config)
    agg = report.aggregate
    print(
        f"problem: {report.problem_name} n={report.n} cells={report.num_cells}"
        + (f" OPT={report.known_opt}" if report.known_opt is not None else "")
    )
    print(
        f"algorithm: {config.algorithm} trials={config.trials} "
        f"budget={config.budget} master-seed={config.master_seed}"
    )
    if config.target is not None:
        print(f"successes: {agg.success_count}/{agg.trials} (median first hit {agg.median_first_hit})")
    if agg.median_ratio is not None:
        print(f"median ratio: {agg.median_ratio:g}")
    if agg.best_overall is not None:
        print(f"best fitness: {agg.best_overall:g} (median {agg.median_best_fitness:g})")
    if args.rows is not None:
        export_report(report, args.rows, form="rows")
        print(f"wrote rows -> {args.rows}")
    if args.document is not None:
        export_report(report, args.document, form="document")
        print(f"wrote document -> {args.document}")
    return 0


# ---------------------------------------------------------------------------
# oracle


def _cmd_oracle(args) -> int:
    problem = resolve_problem(ProblemSpec(kind="file", path=args.instance))
    print(f"instance: {problem.name} n={problem.n} cells={problem.num_cells}")
    params = identify_instance(problem.instance)
    if problem.n <= 24:
        result = brute_force_opt(problem)
        print(f"OPT={result.fitness}")
        print(f"optimum: {result.solution.to_string()}")
        print(f"optima count: {result.optima_count}")
    elif problem.known_opt is not None:
        print(f"OPT={problem.known_opt} (closed form; instance too large to enumerate)")
    else:
        raise ParameterError(
            f"n={problem.n} is too large for exhaustive search and the instance "
            "is not a recognized closed-form family"
        )
    if params is not None:
        print(f"recognized family: {type(params).__name__} (local optimum value {params.local_fitness})")
    if problem.name == "max-coverage" and problem.n <= 10:
        table = SetFunctionTable.from_coverage(problem.instance)
        print(f"gamma_min at k={problem.instance.k}: {gamma_min(table, problem.instance.k):g}")
    return 0


# ---------------------------------------------------------------------------
# analyze


def _cmd_analyze(args) -> int:
    problem = resolve_problem(ProblemSpec(kind="file", path=args.instance))
    x = Solution.from_string(args.solution)
    if x.n != problem.n:
        raise ParameterError(f"solution has {x.n} bits, instance has n={problem.n}")
    fitness, cell, feasible = problem.probe(x)
    print(f"solution: {args.solution} (ones={x.ones()})")
    print(f"fitness: {fitness:g}")
    print(f"cell: {cell}")
    print(f"feasible: {'yes' if feasible else 'no'}")
    if problem.known_opt is not None:
        ratio = approximation_ratio(fitness, problem.known_opt, problem.direction)
        print(f"ratio: {ratio:g} (OPT={problem.known_opt})")
    if args.escape_radius:
        radius = escape_radius(x, problem)
        if radius > problem.n:
            print("escape radius: none (no strictly better solution exists)")
        else:
            print(f"escape radius: {radius}")
    return 0


# ---------------------------------------------------------------------------
# verify


def _cmd_verify(args) -> int:
    from . import acceptance

    if args.list:
        for cid, name in acceptance.criterion_summary():
            print(f"{cid}  {name}")
        return 0
    only = None
    if args.only is not None:
        only = tuple(part.strip() for part in args.only.split(",") if part.strip())
        if not only:
            raise ParameterError("--only got an empty criterion list")
    results = acceptance.run_all(only=only, report=print)
    failed = [r.cid for r in results if not r.passed]
    if failed:
        print(f"FAILED: {', '.join(failed)}")
        return 1
    print(f"all {len(results)} criteria passed")
    return 0


# ---------------------------------------------------------------------------
# parser assembly


def build_parser() -> _Parser:
    parser = _Parser(prog="qdpb", description=__doc__)
    subparsers = parser.add_subparsers(dest="command", parser_class=_Parser)

    gen = subparsers.add_parser("gen-instance", help="generate an instance file")
    gen_sub = gen.add_subparsers(dest="family", parser_class=_Parser, required=True)
    g1 = gen_sub.add_parser("example1", help="bipartite max-coverage family")
    g1.add_argument("--n", type=int, required=True)
    g1.add_argument("--delta", required=True, help="fraction like 1/10")
    g2 = gen_sub.add_parser("example2", help="umbrella-vs-singletons set cover family")
    g2.add_argument("--n", type=int, required=True)
    gr1 = gen_sub.add_parser("random-max-coverage", help="random coverage instance")
    gr1.add_argument("--n", type=int, required=True)
    gr1.add_argument("--m-elements", type=int, required=True)
    gr1.add_argument("--density", type=float, required=True)
    gr1.add_argument("--k", type=int, required=True)
    gr1.add_argument("--instance-seed", type=int, required=True)
    gr2 = gen_sub.add_parser("random-set-cover", help="random weighted cover instance")
    gr2.add_argument("--n", type=int, required=True)
    gr2.add_argument("--m-elements", type=int, required=True)
    gr2.add_argument("--density", type=float, required=True)
    gr2.add_argument("--max-weight", type=int, required=True)
    gr2.add_argument("--instance-seed", type=int, required=True)
    for sub in (g1, g2, gr1, gr2):
        sub.add_argument("--out", required=True, help="instance file to write")
        sub.set_defaults(handler=_cmd_gen_instance)

    run = subparsers.add_parser("run", help="run a multi-trial experiment")
    run.add_argument("--algo", choices=("map-elites", "ea"))
    run.add_argument("--instance", help="instance file")
    run.add_argument("--config", help="full experiment config as JSON (replaces other flags)")
    run.add_argument("--budget", type=int)
    run.add_argument("--trials", type=int, default=1)
    run.add_argument("--master-seed", type=int, default=0)
    run.add_argument("--init-count", type=int)
    run.add_argument("--allow-unfair", action="store_true")
    run.add_argument(
        "--seed-population",
        help="'local', a bitstring, or @file with one bitstring per line (ea only)",
    )
    run.add_argument("--target-fitness", type=_number)
    run.add_argument("--target-ratio", type=float, help="threshold as a fraction of OPT")
    run.add_argument("--target-cell", type=int)
    run.add_argument("--target-strict", action="store_true")
    run.add_argument("--target-allow-infeasible", action="store_true")
    run.add_argument("--run-to-budget", action="store_true", help="do not stop at the target")
    run.add_argument("--relaxed", action="store_true", help="accept ties, not only strict improvements")
    run.add_argument("--milestone-every", type=int)
    run.add_argument("--workers", type=int)
    run.add_argument("--rows", help="write per-trial CSV here")
    run.add_argument("--document", help="write the full JSON report here")
    run.set_defaults(handler=_cmd_run)

    oracle = subparsers.add_parser("oracle", help="exact optimum of an instance file")
    oracle.add_argument("instance", help="instance file")
    oracle.set_defaults(handler=_cmd_oracle)

    analyze = subparsers.add_parser("analyze", help="inspect one solution on an instance")
    analyze.add_argument("instance", help="instance file")
    analyze.add_argument("--solution", required=True, help="bitstring")
    analyze.add_argument(
        "--escape-radius",
        action="store_true",
        help="distance to the nearest strictly better solution (exhaustive, small n)",
    )
    analyze.set_defaults(handler=_cmd_analyze)

    verify = subparsers.add_parser("verify", help="run the built-in acceptance suite")
    verify.add_argument("--list", action="store_true", help="list criteria and exit")
    verify.add_argument("--only", help="comma-separated criterion ids, e.g. c1,c7")
    verify.set_defaults(handler=_cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse signals usage errors (1) and --help (0)
        return exc.code if isinstance(exc.code, int) else 1
    if not hasattr(args, "handler"):
        parser.print_help()
        return 1
    try:
        return args.handler(args)
    except (ParameterError, ValidationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except QdpbError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 -- contract: any runtime failure exits 2
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
