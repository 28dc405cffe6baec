"""Local search for theories with c-atoms.

``generic_wsat`` is the WSAT skeleton: tries, flips, a random unsatisfied
clause, break-counts of its atoms, freebies first, then a greedy move with
probability ``p`` or a random move otherwise. It is instantiated three ways:

* vb  - single flips, break-count measured against the subset expansion of the
        theory without building it (the *virtual* break-count);
* df  - standard break-count over the propositional part of a simple theory,
        with double flips that keep every cardinality clause satisfied;
* wsat - plain CNF WalkSAT, the compile-then-solve baseline.
"""

from __future__ import annotations

import logging
import math
import time
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from enum import Enum
from typing import Protocol

import numpy as np

from ccsat import settings as cfg
from ccsat.cnf import Cnf
from ccsat.errors import NotSimpleError, TheoryError
from ccsat.theory import (
    Assignment,
    CAtom,
    Clause,
    NotSimple,
    SimplePartition,
    Theory,
    classify_simple,
    eval_theory,
    normalize_theory,
    true_count,
)

logger = logging.getLogger(__name__)


# =========================
# Configuration and results
# =========================


class SolverKind(Enum):
    VB = "vb"
    DF = "df"
    WSAT = "wsat"


class Outcome(Enum):
    MODEL_FOUND = "model found"
    UNKNOWN = "unknown"


# [VALUES] search policy as data
@dataclass(frozen=True)
class SolverConfig:
    max_tries: int = cfg.MAX_TRIES
    max_flips: int = cfg.MAX_FLIPS
    noise_p: float = cfg.NOISE  # probability of the greedy move
    seed: int = cfg.SEED
    solver: SolverKind = SolverKind.VB
    df_joint_breakcount: bool = False
    timeout_s: float | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.noise_p <= 1.0:
            raise ValueError(f"noise must lie in [0, 1], got {self.noise_p}")
        if self.max_tries < 1 or self.max_flips < 1:
            raise ValueError("max_tries and max_flips must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.timeout_s is not None and self.timeout_s <= 0:
            raise ValueError("timeout must be positive")


# [VALUES]
@dataclass(frozen=True)
class SolveResult:
    outcome: Outcome
    model: Assignment | None
    tries_used: int
    flips_used: int
    elapsed: float  # seconds, solver time only
    timed_out: bool = False

    def __post_init__(self) -> None:
        if (self.model is not None) != (self.outcome is Outcome.MODEL_FOUND):
            raise ValueError("a model is present exactly when one was found")

    @property
    def found(self) -> bool:
        return self.outcome is Outcome.MODEL_FOUND


# =========================
# Counting
# =========================


def _expansion_sizes(c: CAtom) -> tuple[int, int]:
    """Subset sizes (m+1, n-k+1) of the negative and positive expansion clauses."""
    n, k = c.size, c.effective_lower
    positive = n + 1 if k == 0 else n - min(k, n + 1) + 1
    return c.effective_upper + 1, positive


# [WHAT] exact integer arithmetic
def falsecount(c: CAtom, t: int) -> int:
    """Number of subset-expansion clauses of ``c`` that are false at true count ``t``."""
    if not 0 <= t <= c.size:
        raise ValueError(f"true count {t} outside 0..{c.size}")
    negative, positive = _expansion_sizes(c)
    return math.comb(t, negative) + math.comb(c.size - t, positive)


# =========================
# Shared index and search state
# =========================


@dataclass(frozen=True, slots=True)
class _PropLit:
    atom: int
    positive: bool


@dataclass(frozen=True, slots=True)
class _CardLit:
    slot: int
    catom: CAtom
    members: frozenset[int]
    lower: int
    upper: int
    size: int
    at_most: tuple[int, ...]  # C(t, m+1) for t = 0..n
    at_least: tuple[int, ...]  # C(f, n-k+1) for false counts f = 0..n

    def falsecount(self, t: int) -> int:
        return self.at_most[t] + self.at_least[self.size - t]

    def holds(self, t: int) -> bool:
        return self.lower <= t <= self.upper


def _card_lit(slot: int, c: CAtom) -> _CardLit:
    negative, positive = _expansion_sizes(c)
    span = range(c.size + 1)
    return _CardLit(
        slot=slot,
        catom=c,
        members=frozenset(c.atoms),
        lower=c.effective_lower,
        upper=c.effective_upper,
        size=c.size,
        at_most=tuple(math.comb(t, negative) for t in span),
        at_least=tuple(math.comb(f, positive) for f in span),
    )


class TheoryIndex:
    """Immutable, shareable lookup tables for one normalized theory."""

    def __init__(self, theory: Theory) -> None:
        theory = normalize_theory(theory)
        self.theory = theory
        self.num_atoms = theory.num_atoms
        clauses: list[tuple[_PropLit | _CardLit, ...]] = []
        slots = 0
        for clause in theory.clauses:
            lits: list[_PropLit | _CardLit] = []
            for lit in clause:
                if isinstance(lit.payload, CAtom):
                    lits.append(_card_lit(slots, lit.payload))
                    slots += 1
                else:
                    lits.append(_PropLit(lit.payload, lit.positive))
            clauses.append(tuple(lits))
        self.clauses = tuple(clauses)
        self.num_slots = slots
        self.candidates = tuple(clause.atoms() for clause in theory.clauses)
        occurrences: list[list[tuple[int, int]]] = [[] for _ in range(self.num_atoms + 1)]
        for ci, lits in enumerate(self.clauses):
            for li, lit in enumerate(lits):
                atoms = lit.catom.atoms if isinstance(lit, _CardLit) else (lit.atom,)
                for a in atoms:
                    occurrences[a].append((ci, li))
        self.occurrences = tuple(tuple(occ) for occ in occurrences)
        self.clauses_of = tuple(tuple(dict.fromkeys(ci for ci, _ in occ)) for occ in occurrences)


class SearchState:
    """Assignment plus incrementally maintained counters.

    ``counts[slot]`` is the true count of each c-atom occurrence, ``sat_lits[ci]``
    the number of true literals of clause ``ci``; ``unsat`` lists the false
    clauses and ``unsat_pos`` locates them for O(1) removal.
    """

    __slots__ = ("index", "sigma", "counts", "sat_lits", "unsat", "unsat_pos")

    def __init__(self, index: TheoryIndex, sigma: Assignment) -> None:
        if sigma.num_atoms != index.num_atoms:
            raise ValueError(f"assignment over {sigma.num_atoms} atoms, theory has {index.num_atoms}")
        self.index = index
        self.sigma = sigma
        self._recount()

    def _recount(self) -> None:
        values = self.sigma.values
        self.counts = [0] * self.index.num_slots
        self.sat_lits = []
        for lits in self.index.clauses:
            true_lits = 0
            for lit in lits:
                if isinstance(lit, _CardLit):
                    t = sum(1 for a in lit.catom.atoms if values[a])
                    self.counts[lit.slot] = t
                    true_lits += lit.holds(t)
                else:
                    true_lits += values[lit.atom] == lit.positive
            self.sat_lits.append(true_lits)
        self.unsat = [ci for ci, n in enumerate(self.sat_lits) if n == 0]
        self.unsat_pos = [-1] * len(self.sat_lits)
        for pos, ci in enumerate(self.unsat):
            self.unsat_pos[ci] = pos

    def literal_true(self, ci: int, li: int) -> bool:
        lit = self.index.clauses[ci][li]
        if isinstance(lit, _CardLit):
            return lit.holds(self.counts[lit.slot])
        return self.sigma.values[lit.atom] == lit.positive

    def _mark_sat(self, ci: int) -> None:
        pos = self.unsat_pos[ci]
        last = self.unsat.pop()
        if last != ci:
            self.unsat[pos] = last
            self.unsat_pos[last] = pos
        self.unsat_pos[ci] = -1

    def _mark_unsat(self, ci: int) -> None:
        self.unsat_pos[ci] = len(self.unsat)
        self.unsat.append(ci)

    def flip(self, x: int) -> None:
        values = self.sigma.values
        new = not values[x]
        values[x] = new
        clauses, counts, sat_lits = self.index.clauses, self.counts, self.sat_lits
        for ci, li in self.index.occurrences[x]:
            lit = clauses[ci][li]
            if isinstance(lit, _CardLit):
                before = counts[lit.slot]
                after = before + 1 if new else before - 1
                counts[lit.slot] = after
                was, now = lit.holds(before), lit.holds(after)
            else:
                now = new == lit.positive
                was = not now
            if was == now:
                continue
            if now:
                sat_lits[ci] += 1
                if sat_lits[ci] == 1:
                    self._mark_sat(ci)
            else:
                sat_lits[ci] -= 1
                if sat_lits[ci] == 0:
                    self._mark_unsat(ci)

    @property
    def is_model(self) -> bool:
        return not self.unsat

    def check(self) -> bool:
        """Recompute every counter from scratch and compare with the incremental ones."""
        counts, sat_lits, unsat = list(self.counts), list(self.sat_lits), set(self.unsat)
        positions_ok = all(self.unsat[self.unsat_pos[ci]] == ci for ci in self.unsat)
        self._recount()
        return positions_ok and counts == self.counts and sat_lits == self.sat_lits and unsat == set(self.unsat)


# =========================
# Break-counts
# =========================


def virtual_unsat_count(d: Clause, state: SearchState) -> int:
    """Number of subset-expansion clauses of ``d`` false under the current assignment."""
    sigma = state.sigma
    product = 1
    for lit in d:
        if isinstance(lit.payload, CAtom):
            product *= falsecount(lit.payload, true_count(lit.payload, sigma))
        else:
            product *= int(sigma.values[lit.payload] != lit.positive)
        if not product:
            break
    return product


def vb_breakcount(state: SearchState, x: int) -> int:
    """Expansion clauses satisfied now and falsified once ``x`` is flipped.

    Per clause: (false expansion clauses after the flip) minus (those of them
    not mentioning ``x``), both as products over the clause's literals.
    """
    values, counts = state.sigma.values, state.counts
    clauses = state.index.clauses
    new = not values[x]
    total = 0
    for ci in state.index.clauses_of[x]:
        after = 1
        untouched = 1
        for lit in clauses[ci]:
            if isinstance(lit, _CardLit):
                t = counts[lit.slot]
                if x in lit.members:
                    t = t + 1 if new else t - 1
                    false_now = lit.at_most[t] + lit.at_least[lit.size - t]
                    if new:
                        false_clean = lit.at_most[t - 1] + lit.at_least[lit.size - t]
                    else:
                        false_clean = lit.at_most[t] + lit.at_least[lit.size - t - 1]
                else:
                    false_now = false_clean = lit.at_most[t] + lit.at_least[lit.size - t]
            elif lit.atom == x:
                false_now = int(new != lit.positive)
                false_clean = 0
            else:
                false_now = false_clean = int(values[lit.atom] != lit.positive)
            after *= false_now
            if not after:
                break
            untouched *= false_clean
        else:
            total += after - untouched
    return total


def _break_single(state: SearchState, x: int, mask: Sequence[bool] | None) -> int:
    """Propositional clauses that lose their last true literal when ``x`` flips."""
    values, sat_lits = state.sigma.values, state.sat_lits
    clauses = state.index.clauses
    current = values[x]
    broken = 0
    for ci in state.index.clauses_of[x]:
        if mask is not None and not mask[ci]:
            continue
        if sat_lits[ci] == 0:
            continue
        true_on_x = 0
        rescued = False
        for lit in clauses[ci]:
            if lit.atom != x:
                continue
            if lit.positive == current:
                true_on_x += 1
            else:
                rescued = True
        if not rescued and sat_lits[ci] == true_on_x:
            broken += 1
    return broken


def _break_joint(state: SearchState, flips: tuple[int, ...], mask: Sequence[bool] | None) -> int:
    values, sat_lits = state.sigma.values, state.sat_lits
    clauses = state.index.clauses
    affected = dict.fromkeys(ci for x in flips for ci in state.index.clauses_of[x])
    broken = 0
    for ci in affected:
        if (mask is not None and not mask[ci]) or sat_lits[ci] == 0:
            continue
        if not any((values[lit.atom] != (lit.atom in flips)) == lit.positive for lit in clauses[ci]):
            broken += 1
    return broken


def standard_breakcount(state: SearchState, x: int) -> int:
    """Plain WSAT break-count; the theory must be propositional."""
    return _break_single(state, x, None)


# =========================
# Double flips (simple theories)
# =========================


def df_initial(partition: SimplePartition, rng: np.random.Generator) -> Assignment:
    """Random assignment satisfying every cardinality clause of ``partition``.

    Each c-atom draws its cardinality uniformly from [k, min(m, |X|)], then a
    uniformly random subset of that size; free atoms are fair coins.
    """
    num_atoms = len(partition.free_atoms) + sum(c.size for _, c in partition.tcc)
    sigma = Assignment.all_false(num_atoms)
    for index, c in partition.tcc:
        lo, hi = c.effective_lower, min(c.effective_upper, c.size)
        if lo > hi:
            raise TheoryError(f"clause {index}: {c} admits no cardinality")
        card = int(rng.integers(lo, hi + 1))
        for pos in rng.choice(c.size, size=card, replace=False):
            sigma[c.atoms[int(pos)]] = True
    coins = rng.random(len(partition.free_atoms)) < 0.5
    for atom, coin in zip(partition.free_atoms, coins):
        sigma[atom] = bool(coin)
    return sigma


class DoubleFlip:
    """Flip and break-count strategies that preserve the cardinality clauses."""

    def __init__(self, partition: SimplePartition, index: TheoryIndex, joint: bool = False) -> None:
        self.partition = partition
        self.index = index
        self.joint = joint
        self.owner: dict[int, _CardLit] = {}
        for ci, _ in partition.tcc:
            lit = index.clauses[ci][0]
            assert isinstance(lit, _CardLit)
            for a in lit.catom.atoms:
                self.owner[a] = lit
        mask = [False] * len(index.clauses)
        for ci in partition.tcnf:
            mask[ci] = True
        self.tcnf_mask = mask

    def initial(self, rng: np.random.Generator) -> Assignment:
        return df_initial(self.partition, rng)

    def guard(self, state: SearchState, a: int) -> _CardLit | None:
        """The cardinality clause flipping ``a`` alone would falsify, if any."""
        lit = self.owner.get(a)
        if lit is None:
            return None
        t = state.counts[lit.slot]
        value = state.sigma.values[a]
        if (value and t == lit.lower) or (not value and t == lit.upper):
            return lit
        return None

    def companions(self, state: SearchState, a: int, lit: _CardLit) -> list[int]:
        values = state.sigma.values
        return [b for b in lit.catom.atoms if values[b] != values[a]]

    def _score(self, state: SearchState, a: int, b: int) -> int:
        if self.joint:
            return _break_joint(state, (a, b), self.tcnf_mask)
        return _break_single(state, b, self.tcnf_mask)

    def breakcount(self, state: SearchState, x: int) -> int:
        if self.joint:
            lit = self.guard(state, x)
            if lit is not None:
                return min(
                    _break_joint(state, (x, b), self.tcnf_mask)
                    for b in self.companions(state, x, lit)
                )
        return _break_single(state, x, self.tcnf_mask)

    def flip(self, state: SearchState, a: int, rng: np.random.Generator) -> None:
        lit = self.guard(state, a)
        if lit is not None:
            pool = self.companions(state, a, lit)
            scores = [self._score(state, a, b) for b in pool]
            best = min(scores)
            b = _pick(rng, [x for x, s in zip(pool, scores) if s == best])
            state.flip(b)
        state.flip(a)


# =========================
# Generic WSAT
# =========================


class BreakcountStrategy(Protocol):
    def __call__(self, state: SearchState, x: int) -> int: ...


class FlipStrategy(Protocol):
    def __call__(self, state: SearchState, a: int, rng: np.random.Generator) -> None: ...


InitStrategy = Callable[[np.random.Generator], Assignment]
Observer = Callable[[SearchState, int], None]


def try_rng(seed: int, try_index: int) -> np.random.Generator:
    """Generator for one try; depends only on (seed, try index)."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(try_index,)))


def _pick(rng: np.random.Generator, items: Sequence[int]) -> int:
    return items[int(rng.integers(len(items)))]


def single_flip(state: SearchState, a: int, rng: np.random.Generator) -> None:
    state.flip(a)


def uniform_initial(num_atoms: int) -> InitStrategy:
    def draw(rng: np.random.Generator) -> Assignment:
        return Assignment((rng.random(num_atoms) < 0.5).tolist())

    return draw


# [HOW] clock and randomness live here; strategies are passed in
def generic_wsat(
    theory: Theory | TheoryIndex,
    config: SolverConfig,
    flip: FlipStrategy,
    breakcount: BreakcountStrategy,
    init: InitStrategy,
    observer: Observer | None = None,
) -> SolveResult:
    index = theory if isinstance(theory, TheoryIndex) else TheoryIndex(theory)
    start = time.perf_counter()
    deadline = None if config.timeout_s is None else start + config.timeout_s
    p = config.noise_p
    flips = 0
    for try_index in range(config.max_tries):
        rng = try_rng(config.seed, try_index)
        state = SearchState(index, init(rng))
        for _ in range(config.max_flips):
            if not state.unsat:
                elapsed = time.perf_counter() - start
                logger.info(
                    "model found in try %d after %d flips (%.3f s)", try_index + 1, flips, elapsed
                )
                return SolveResult(Outcome.MODEL_FOUND, state.sigma, try_index + 1, flips, elapsed)
            if deadline is not None and flips % cfg.FLIP_BATCH == 0 and time.perf_counter() > deadline:
                elapsed = time.perf_counter() - start
                logger.info("deadline reached in try %d after %d flips", try_index + 1, flips)
                return SolveResult(Outcome.UNKNOWN, None, try_index + 1, flips, elapsed, timed_out=True)
            flips += 1
            candidates = index.candidates[_pick(rng, state.unsat)]
            if not candidates:
                continue
            breaks = [breakcount(state, x) for x in candidates]
            freebies = [x for x, b in zip(candidates, breaks) if b == 0]
            if freebies:
                a = _pick(rng, freebies)
            elif rng.random() < p:
                best = min(breaks)
                a = _pick(rng, [x for x, b in zip(candidates, breaks) if b == best])
            else:
                a = _pick(rng, candidates)
            flip(state, a, rng)
            if observer is not None:
                observer(state, a)
        logger.debug("try %d ended with %d unsatisfied clauses", try_index + 1, len(state.unsat))
    elapsed = time.perf_counter() - start
    logger.info("no model after %d tries, %d flips (%.3f s)", config.max_tries, flips, elapsed)
    return SolveResult(Outcome.UNKNOWN, None, config.max_tries, flips, elapsed)


# =========================
# Instantiations
# =========================


def vb_wsat(theory: Theory, config: SolverConfig, observer: Observer | None = None) -> SolveResult:
    index = TheoryIndex(theory)
    return generic_wsat(
        index, config, single_flip, vb_breakcount, uniform_initial(index.num_atoms), observer
    )


def df_wsat(theory: Theory, config: SolverConfig, observer: Observer | None = None) -> SolveResult:
    index = TheoryIndex(theory)
    verdict = classify_simple(index.theory)
    if isinstance(verdict, NotSimple):
        raise NotSimpleError(verdict)
    strategy = DoubleFlip(verdict, index, joint=config.df_joint_breakcount)
    return generic_wsat(index, config, strategy.flip, strategy.breakcount, strategy.initial, observer)


def wsat_cnf(cnf: Cnf, config: SolverConfig, observer: Observer | None = None) -> SolveResult:
    """WalkSAT on plain CNF; the model ranges over every CNF atom."""
    if cnf.has_empty_clause:
        logger.warning("CNF contains the empty clause; no search performed")
        return SolveResult(Outcome.UNKNOWN, None, 0, 0, 0.0)
    index = TheoryIndex(cnf.to_theory())
    return generic_wsat(
        index, config, single_flip, standard_breakcount, uniform_initial(index.num_atoms), observer
    )


def solve(problem: Theory | Cnf, config: SolverConfig) -> SolveResult:
    """Dispatch on ``config.solver``; any returned model is checked against the input."""
    if isinstance(problem, Cnf):
        if config.solver is SolverKind.WSAT:
            result = wsat_cnf(problem, config)
            if result.model is not None and not problem.satisfied_by(result.model):
                raise AssertionError("wsat returned a non-model")
            return result
        problem = problem.to_theory()
    if config.solver is SolverKind.WSAT:
        if not problem.is_propositional:
            raise TheoryError("wsat needs a propositional theory; compile c-atoms first")
        cnf = Cnf(problem.num_atoms, tuple(tuple(lit.signed for lit in cl) for cl in problem.clauses))
        return solve(cnf, config)
    runner = vb_wsat if config.solver is SolverKind.VB else df_wsat
    result = runner(problem, config)
    if result.model is not None and not eval_theory(problem, result.model):
        raise AssertionError(f"{config.solver.value} returned a non-model")
    return result
