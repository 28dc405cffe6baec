# ccsat command line
# =========================
# [VALUES] parsed arguments are turned into config values once, here
# [WHAT]   library calls are pure transformations of those values
# [HOW]    files, stdout/stderr and exit codes live only in this module
# =========================

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Callable, Sequence
from pathlib import Path

from ccsat import __version__
from ccsat import settings as cfg
from ccsat.bench import (
    SOLVER_IDS,
    BenchPlan,
    discover_instances,
    emit_csv,
    render_summary,
    run_plan,
    summarize,
)
from ccsat.cnf import Cnf, project
from ccsat.compilers import METHODS, compile_theory
from ccsat.encoders import (
    encode_coloring,
    encode_latin,
    encode_vertex_cover,
    gen_latin_instance,
    gen_planted_coloring_graph,
    gen_planted_cover_graph,
    gen_random_graph,
)
from ccsat.errors import CcsatError
from ccsat.formats import (
    parse_ccnf,
    parse_col_graph,
    parse_latin,
    parse_model,
    parse_problem,
    write_ccnf,
    write_col_graph,
    write_dimacs,
    write_latin,
    write_model,
)
from ccsat.solvers import SolverConfig, SolverKind, SolveResult, solve, wsat_cnf
from ccsat.theory import Theory, eval_theory, lint_theory

logger = logging.getLogger("ccsat")

STDIO = "-"


# =========================
# Edge helpers
# =========================


# [HOW] "-" means stdin/stdout
def read_text(path: str) -> str:
    if path == STDIO:
        return sys.stdin.read()
    return Path(path).read_text(encoding="utf-8")


def write_text(path: str | None, text: str) -> None:
    if path is None or path == STDIO:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    Path(path).write_text(text, encoding="utf-8")


def load_input(path: str) -> Theory | Cnf:
    return parse_problem(read_text(path))


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _names(text: str) -> tuple[str, ...]:
    return tuple(x.strip() for x in text.split(",") if x.strip())


# =========================
# Commands
# =========================


def cmd_compile(args: argparse.Namespace) -> int:
    theory = parse_ccnf(read_text(args.input))
    compiled = compile_theory(theory, args.method, budget=args.budget)
    write_text(args.output, write_dimacs(compiled))
    return cfg.EXIT_OK


def _search_config(args: argparse.Namespace) -> SolverConfig:
    return SolverConfig(
        max_tries=args.tries,
        max_flips=args.flips,
        noise_p=args.noise,
        seed=args.seed,
        solver=SolverKind(args.solver),
        df_joint_breakcount=args.df_joint_breakcount,
        timeout_s=args.timeout_s,
    )


def _solve_compiled(theory: Theory, method: str, config: SolverConfig) -> SolveResult:
    compiled = compile_theory(theory, method)
    result = wsat_cnf(compiled.cnf, config)
    if result.model is None:
        return result
    model = project(compiled, result.model)
    if not eval_theory(theory, model):
        raise AssertionError(f"wsat on compile-{method} output returned a non-model")
    return SolveResult(result.outcome, model, result.tries_used, result.flips_used, result.elapsed)


def cmd_solve(args: argparse.Namespace) -> int:
    problem = load_input(args.input)
    config = _search_config(args)
    if config.solver is SolverKind.WSAT and isinstance(problem, Theory) and not problem.is_propositional:
        result = _solve_compiled(problem, args.method, config)
    else:
        result = solve(problem, config)
    write_text(args.model_out, write_model(result.model))
    return cfg.EXIT_MODEL_FOUND if result.found else cfg.EXIT_UNKNOWN


def cmd_encode(args: argparse.Namespace) -> int:
    text = read_text(args.input)
    if args.problem == "latin":
        theory = encode_latin(parse_latin(text))
    else:
        if args.k is None:
            raise CcsatError(f"encode {args.problem} needs -k")
        graph = parse_col_graph(text)
        encode = encode_coloring if args.problem == "color" else encode_vertex_cover
        theory = encode(graph, args.k)
    comments = (f"{args.problem} encoding of {args.input}" + ("" if args.k is None else f", k={args.k}"),)
    write_text(args.output, write_ccnf(theory, comments))
    return cfg.EXIT_OK


def cmd_gen(args: argparse.Namespace) -> int:
    if args.problem == "color":
        text = write_col_graph(gen_planted_coloring_graph(args.vertices, args.colors, args.edges, args.seed))
    elif args.problem == "vc":
        text = write_col_graph(gen_planted_cover_graph(args.vertices, args.cover, args.edges, args.seed))
    elif args.problem == "latin":
        text = write_latin(gen_latin_instance(args.order, args.givens, args.seed))
    else:
        text = write_col_graph(gen_random_graph(args.vertices, args.edges, args.seed))
    write_text(args.output, text)
    return cfg.EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    problem = load_input(args.theory)
    sigma = parse_model(read_text(args.model), num_atoms=problem.num_atoms)
    if sigma is None:
        print("s UNKNOWN: model file reports no model")
        return cfg.EXIT_CHECK_FAILED
    ok = problem.satisfied_by(sigma) if isinstance(problem, Cnf) else eval_theory(problem, sigma)
    logger.info("model %s the theory", "satisfies" if ok else "does not satisfy")
    print("s VERIFIED" if ok else "s NOT A MODEL")
    return cfg.EXIT_OK if ok else cfg.EXIT_CHECK_FAILED


def cmd_lint(args: argparse.Namespace) -> int:
    issues = lint_theory(parse_ccnf(read_text(args.input)))
    for issue in issues:
        print(f"{issue.kind.value}: {issue}")
    return cfg.EXIT_CHECK_FAILED if issues else cfg.EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    instances = discover_instances(args.instances)
    if not instances:
        raise CcsatError(f"no instances match {args.instances}")
    plan = BenchPlan(
        instances=instances,
        solvers=args.solvers,
        noises=args.noise,
        max_tries=args.tries,
        max_flips=args.flips,
        timeout_s=args.timeout_s,
        reps=args.reps,
        seed=args.seed,
        workers=args.workers,
    )
    records = run_plan(plan)
    write_text(args.out, emit_csv(records, timing=not args.no_timing))
    if not args.quiet:
        render_summary(summarize(records))
    return cfg.EXIT_OK


# =========================
# Parser
# =========================


def _add_search_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=cfg.SEED)
    p.add_argument("--tries", type=int, default=cfg.MAX_TRIES, help="Max-Tries")
    p.add_argument("--flips", type=int, default=cfg.MAX_FLIPS, help="Max-Flips per try")
    p.add_argument("--timeout-s", type=float, default=None, help="wall-clock limit per run")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ccsat",
        description="Local search and CNF compilation for theories with cardinality atoms.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="warnings only")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="eliminate c-atoms, write DIMACS CNF")
    p.add_argument("--method", choices=sorted(METHODS), required=True)
    p.add_argument("--input", default=STDIO)
    p.add_argument("--output", default=STDIO)
    p.add_argument("--budget", type=int, default=cfg.CLAUSE_BUDGET, help="compile-basic clause limit")
    p.set_defaults(run=cmd_compile)

    p = sub.add_parser("solve", help="local search on a .ccnf or .cnf file")
    p.add_argument("--solver", choices=[k.value for k in SolverKind], default=SolverKind.VB.value)
    p.add_argument("--input", default=STDIO)
    p.add_argument("--method", choices=sorted(METHODS), default="basic", help="compiler for wsat on c-atoms")
    p.add_argument("--noise", type=float, default=cfg.NOISE, help="probability of the greedy move")
    p.add_argument("--df-joint-breakcount", action="store_true")
    p.add_argument("--model-out", default=None)
    _add_search_options(p)
    p.set_defaults(run=cmd_solve)

    p = sub.add_parser("encode", help="build the theory of a coloring, cover or latin-square instance")
    p.add_argument("problem", choices=["color", "vc", "latin"])
    p.add_argument("--input", default=STDIO)
    p.add_argument("-k", type=int, default=None, help="colors (color) or cover size (vc)")
    p.add_argument("--output", default=STDIO)
    p.set_defaults(run=cmd_encode)

    p = sub.add_parser("gen", help="generate a planted (or uniform random) instance")
    p.add_argument("problem", choices=["color", "vc", "latin", "random"])
    p.add_argument("--vertices", type=int, default=100)
    p.add_argument("--edges", type=int, default=385)
    p.add_argument("--colors", type=int, default=4)
    p.add_argument("--cover", type=int, default=100)
    p.add_argument("--order", type=int, default=10)
    p.add_argument("--givens", type=int, default=10)
    p.add_argument("--seed", type=int, default=cfg.SEED)
    p.add_argument("--output", default=STDIO)
    p.set_defaults(run=cmd_gen)

    p = sub.add_parser("verify", help="check a model file against a theory")
    p.add_argument("--theory", required=True)
    p.add_argument("--model", required=True)
    p.set_defaults(run=cmd_verify)

    p = sub.add_parser("lint", help="report duplicate literals and trivial c-atoms")
    p.add_argument("--input", default=STDIO)
    p.set_defaults(run=cmd_lint)

    p = sub.add_parser("bench", help="run solvers over instance families, write CSV")
    p.add_argument("--instances", required=True, help="directory or glob")
    p.add_argument("--solvers", type=_names, default=("vb", "df"), help=f"comma list of {','.join(SOLVER_IDS)}")
    p.add_argument("--noise", type=_floats, default=cfg.BENCH_NOISES, help="comma list")
    p.add_argument("--reps", type=int, default=cfg.BENCH_REPS)
    p.add_argument("--workers", type=int, default=cfg.BENCH_WORKERS)
    p.add_argument("--out", default=STDIO)
    p.add_argument("--no-timing", action="store_true", help="blank time_ms for byte-stable CSV")
    _add_search_options(p)
    p.set_defaults(run=cmd_bench, timeout_s=cfg.BENCH_TIMEOUT_S)

    return parser


def configure_logging(verbose: bool, quiet: bool) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else cfg.LOG_LEVEL
    logging.basicConfig(level=level, format=cfg.LOG_FORMAT, stream=sys.stderr, force=True)


def main(argv: Sequence[str] | None = None) -> int:
    # [HOW] composition root
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose, args.quiet)
    run: Callable[[argparse.Namespace], int] = args.run
    try:
        return run(args)
    except (CcsatError, ValueError, OSError) as exc:
        print(f"ccsat: error: {exc}", file=sys.stderr)
        return cfg.EXIT_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
