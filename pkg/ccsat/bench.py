"""Experiment runner: instances x solvers x noise values x repetitions.

Each cell loads its instance, runs one solver configuration, verifies any model
against the input and becomes a :class:`RunRecord`. Records feed the success
rate / mean runtime summary and the CSV export.
"""

from __future__ import annotations

import csv
import glob
import io
import logging
import statistics
import time
from collections import defaultdict
from collections.abc import Iterable, Iterator, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from rich.console import Console
from rich.table import Table
from rich.text import Text

from ccsat import settings as cfg
from ccsat import styles
from ccsat.cnf import Cnf, project
from ccsat.compilers import compile_theory
from ccsat.errors import CcsatError, NotSimpleError
from ccsat.formats import load_problem
from ccsat.solvers import Outcome, SolverConfig, SolverKind, SolveResult, df_wsat, vb_wsat, wsat_cnf
from ccsat.theory import Theory, eval_theory

logger = logging.getLogger(__name__)

SOLVER_IDS: tuple[str, ...] = ("vb", "df", "wsat", "wsat-basic", "wsat-uc", "wsat-bc")
NO_MEAN = "—"


# =========================
# Plan and records (values only)
# =========================


# [VALUES] the whole experiment grid as data
@dataclass(frozen=True)
class BenchPlan:
    instances: tuple[Path, ...]
    solvers: tuple[str, ...]
    noises: tuple[float, ...] = cfg.BENCH_NOISES
    max_tries: int = cfg.MAX_TRIES
    max_flips: int = cfg.MAX_FLIPS
    timeout_s: float | None = cfg.BENCH_TIMEOUT_S
    reps: int = cfg.BENCH_REPS
    seed: int = cfg.SEED
    workers: int = cfg.BENCH_WORKERS

    def __post_init__(self) -> None:
        object.__setattr__(self, "instances", tuple(Path(p) for p in self.instances))
        object.__setattr__(self, "solvers", tuple(self.solvers))
        object.__setattr__(self, "noises", tuple(self.noises))
        if not self.instances:
            raise ValueError("bench plan has no instances")
        if not self.solvers:
            raise ValueError("bench plan has no solvers")
        unknown = [s for s in self.solvers if s not in SOLVER_IDS]
        if unknown:
            raise ValueError(f"unknown solvers {unknown}; choose from {', '.join(SOLVER_IDS)}")
        if not self.noises:
            raise ValueError("bench plan has no noise values")
        if self.reps < 1 or self.workers < 1:
            raise ValueError("reps and workers must be at least 1")

    def cells(self) -> Iterator[Cell]:
        for path in self.instances:
            for solver in self.solvers:
                for noise in self.noises:
                    for rep in range(self.reps):
                        yield Cell(
                            path=path,
                            solver=solver,
                            noise=noise,
                            rep=rep,
                            config=SolverConfig(
                                max_tries=self.max_tries,
                                max_flips=self.max_flips,
                                noise_p=noise,
                                seed=self.seed + rep,
                                solver=_KINDS.get(solver, SolverKind.WSAT),
                                timeout_s=self.timeout_s,
                            ),
                        )


@dataclass(frozen=True)
class Cell:
    path: Path
    solver: str
    noise: float
    rep: int
    config: SolverConfig


# [VALUES] one row of results
@dataclass(frozen=True)
class RunRecord:
    instance: str
    family: str
    solver: str
    seed: int
    noise: float
    rep: int
    solved: bool
    tries_used: int
    flips_used: int
    elapsed_ms: float
    note: str = ""

    @property
    def key(self) -> tuple[str, str, float, int]:
        return (self.instance, self.solver, self.noise, self.rep)


_KINDS = {"vb": SolverKind.VB, "df": SolverKind.DF}


# =========================
# Instances
# =========================


# [HOW] filesystem
def discover_instances(pattern: str) -> tuple[Path, ...]:
    """A directory (searched recursively for instance files) or a glob pattern."""
    root = Path(pattern)
    if root.is_dir():
        found = (p for p in root.rglob("*") if p.suffix in cfg.INSTANCE_SUFFIXES and p.is_file())
    else:
        found = (Path(p) for p in glob.glob(pattern, recursive=True))
    return tuple(sorted(found))


def family_of(path: Path) -> str:
    return path.parent.name or "."


# =========================
# Running
# =========================


def _execute(problem: Theory | Cnf, solver: str, config: SolverConfig) -> tuple[SolveResult, bool]:
    """Run one solver; the flag tells whether the returned model (if any) checks out."""
    if solver in _KINDS:
        theory = problem if isinstance(problem, Theory) else problem.to_theory()
        result = (vb_wsat if solver == "vb" else df_wsat)(theory, config)
        return result, result.model is None or eval_theory(theory, result.model)
    if isinstance(problem, Cnf):
        result = wsat_cnf(problem, config)
        return result, result.model is None or problem.satisfied_by(result.model)
    method = "basic" if solver == "wsat" else solver.removeprefix("wsat-")
    start = time.perf_counter()
    compiled = compile_theory(problem, method)
    spent = time.perf_counter() - start
    # compiling is not interruptible; its time is charged to the run
    if config.timeout_s is not None:
        if spent >= config.timeout_s:
            logger.info("compile-%s used up the %.3g s budget", method, config.timeout_s)
            return SolveResult(Outcome.UNKNOWN, None, 0, 0, spent, timed_out=True), True
        config = replace(config, timeout_s=config.timeout_s - spent)
    result = wsat_cnf(compiled.cnf, config)
    result = replace(result, elapsed=result.elapsed + spent)
    if result.model is None:
        return result, True
    return result, eval_theory(problem, project(compiled, result.model))


# [HOW] edge: file load, solver run and wall clock
def run_cell(cell: Cell) -> RunRecord:
    """Never raises for a bad instance or refused solver; the failure goes into ``note``."""
    base = {
        "instance": str(cell.path),
        "family": family_of(cell.path),
        "solver": cell.solver,
        "seed": cell.config.seed,
        "noise": cell.noise,
        "rep": cell.rep,
    }
    try:
        problem = load_problem(cell.path)
        result, verified = _execute(problem, cell.solver, cell.config)
    except NotSimpleError as exc:
        logger.warning("%s on %s: %s", cell.solver, cell.path, exc)
        return RunRecord(**base, solved=False, tries_used=0, flips_used=0, elapsed_ms=0.0, note="not simple")
    except (CcsatError, OSError) as exc:
        logger.warning("%s on %s failed: %s", cell.solver, cell.path, exc)
        return RunRecord(**base, solved=False, tries_used=0, flips_used=0, elapsed_ms=0.0, note=str(exc))

    note = ""
    if result.found and not verified:
        logger.warning("%s on %s returned a model that does not verify", cell.solver, cell.path)
        note = "invalid model"
    elif result.found:
        logger.info("verified model: %s, %s, p=%s, rep %d", cell.path, cell.solver, cell.noise, cell.rep)
    elif result.timed_out:
        note = "timeout"
    return RunRecord(
        **base,
        solved=result.found and verified,
        tries_used=result.tries_used,
        flips_used=result.flips_used,
        elapsed_ms=result.elapsed * 1000.0,
        note=note,
    )


# [HOW] worker pool
def run_plan(plan: BenchPlan) -> list[RunRecord]:
    """Every (instance, solver, noise, rep) cell, ordered by that key whatever the workers do."""
    cells = list(plan.cells())
    logger.info("running %d cells on %d worker(s)", len(cells), plan.workers)
    if plan.workers == 1:
        records = [run_cell(cell) for cell in cells]
    else:
        with ProcessPoolExecutor(max_workers=plan.workers) as pool:
            records = list(pool.map(run_cell, cells))
    order = {(str(c.path), c.solver, c.noise, c.rep): i for i, c in enumerate(cells)}
    return sorted(records, key=lambda r: order[r.key])


# =========================
# Summary
# =========================


@dataclass(frozen=True)
class SummaryRow:
    family: str
    solver: str
    noise: float
    runs: int
    solved: int
    mean_ms: float | None  # over solved runs only
    solvable: int  # runs on instances some solver in the plan solved

    @property
    def rate(self) -> float:
        return self.solved / self.runs if self.runs else 0.0

    @property
    def any_rate(self) -> float | None:
        return self.solved / self.solvable if self.solvable else None

    def cell(self) -> str:
        """``time/success%`` with time in milliseconds."""
        mean = NO_MEAN if self.mean_ms is None else f"{self.mean_ms:.0f}"
        return f"{mean}/{self.rate:.0%}"


# [WHAT] pure
def summarize(records: Iterable[RunRecord]) -> list[SummaryRow]:
    records = list(records)
    solved_somewhere = {r.instance for r in records if r.solved}
    groups: dict[tuple[str, str, float], list[RunRecord]] = defaultdict(list)
    for r in records:
        groups[(r.family, r.solver, r.noise)].append(r)
    rows = []
    for (family, solver, noise), group in sorted(groups.items()):
        times = [r.elapsed_ms for r in group if r.solved]
        rows.append(
            SummaryRow(
                family=family,
                solver=solver,
                noise=noise,
                runs=len(group),
                solved=len(times),
                mean_ms=statistics.fmean(times) if times else None,
                solvable=sum(1 for r in group if r.instance in solved_somewhere),
            )
        )
    return rows


# [HOW] console output
def render_summary(rows: Sequence[SummaryRow], console: Console | None = None) -> None:
    console = console or Console(stderr=True)
    table = Table(title="Bench summary", title_style=styles.TITLE_STYLE, header_style=styles.HEADER_STYLE)
    table.add_column("family", style=styles.FAMILY_STYLE)
    table.add_column("solver", style=styles.SOLVER_STYLE)
    table.add_column("p", justify="right")
    table.add_column("runs", justify="right")
    table.add_column("time/success", justify="right")
    table.add_column("any-method", justify="right")
    for row in rows:
        any_rate = row.any_rate
        table.add_row(
            row.family,
            row.solver,
            f"{row.noise:g}",
            str(row.runs),
            Text(row.cell(), style=styles.rate_style(row.rate)),
            Text(NO_MEAN, style=styles.MUTED_STYLE)
            if any_rate is None
            else Text(f"{any_rate:.0%} of {row.solvable}", style=styles.rate_style(any_rate)),
        )
    console.print(table)


# =========================
# CSV
# =========================


# [WHAT]
def emit_csv(records: Iterable[RunRecord], timing: bool = True) -> str:
    """One row per record; with ``timing=False`` the time column is blank."""
    out = io.StringIO()
    writer = csv.DictWriter(out, fieldnames=cfg.CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for r in records:
        writer.writerow(
            {
                "instance": r.instance,
                "solver": r.solver,
                "seed": r.seed,
                "noise": f"{r.noise:g}",
                "solved": int(r.solved),
                "tries_used": r.tries_used,
                "flips_used": r.flips_used,
                "time_ms": f"{r.elapsed_ms:.3f}" if timing else "",
            }
        )
    return out.getvalue()
