"""Domain model for clausal theories with cardinality atoms (c-atoms).

A c-atom ``k X m`` holds when at least ``k`` and at most ``m`` atoms of ``X`` are
true; either bound may be absent. Values here are immutable; the only mutable
type is :class:`Assignment`, owned by one search at a time.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass
from enum import Enum

from ccsat.errors import TheoryError

logger = logging.getLogger(__name__)


# =========================
# Values
# =========================


# [VALUES] compared and hashed by value
@dataclass(frozen=True)
class CAtom:
    atoms: tuple[int, ...]
    lower: int | None = None
    upper: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "atoms", tuple(self.atoms))
        if self.lower is None and self.upper is None:
            raise TheoryError("c-atom needs at least one bound")
        for bound in (self.lower, self.upper):
            if bound is not None and bound < 0:
                raise TheoryError(f"negative c-atom bound {bound}")
        if any(a < 1 for a in self.atoms):
            raise TheoryError(f"atom ids must be positive: {self.atoms}")
        if len(set(self.atoms)) != len(self.atoms):
            raise TheoryError(f"duplicate atom in c-atom {self.atoms}")

    @property
    def size(self) -> int:
        return len(self.atoms)

    @property
    def effective_lower(self) -> int:
        return 0 if self.lower is None else self.lower

    @property
    def effective_upper(self) -> int:
        return self.size if self.upper is None else self.upper

    def holds(self, true_count: int) -> bool:
        return self.effective_lower <= true_count <= self.effective_upper

    def __str__(self) -> str:
        lo = "" if self.lower is None else str(self.lower)
        hi = "" if self.upper is None else str(self.upper)
        body = ",".join(f"x{a}" for a in self.atoms)
        return f"{lo}{{{body}}}{hi}"


@dataclass(frozen=True)
class Literal:
    payload: int | CAtom
    positive: bool = True

    def __post_init__(self) -> None:
        if isinstance(self.payload, int) and self.payload < 1:
            raise TheoryError(f"atom ids must be positive, got {self.payload}")

    @classmethod
    def of(cls, signed: int) -> Literal:
        """Propositional literal from a DIMACS-style signed id."""
        if signed == 0:
            raise TheoryError("0 is not a literal")
        return cls(abs(signed), signed > 0)

    @property
    def is_catom(self) -> bool:
        return isinstance(self.payload, CAtom)

    @property
    def atoms(self) -> tuple[int, ...]:
        if isinstance(self.payload, CAtom):
            return self.payload.atoms
        return (self.payload,)

    @property
    def signed(self) -> int:
        if isinstance(self.payload, CAtom):
            raise TheoryError("c-atom literals have no signed id")
        return self.payload if self.positive else -self.payload

    def __neg__(self) -> Literal:
        return Literal(self.payload, not self.positive)

    def __str__(self) -> str:
        body = str(self.payload) if self.is_catom else f"x{self.payload}"
        return body if self.positive else f"-{body}"


@dataclass(frozen=True)
class Clause:
    literals: tuple[Literal, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "literals", tuple(self.literals))
        if not self.literals:
            raise TheoryError("empty clause")

    @classmethod
    def of(cls, *items: int | CAtom | Literal) -> Clause:
        """Build a clause from signed ids, positive c-atoms and literals."""
        lits: list[Literal] = []
        for item in items:
            if isinstance(item, Literal):
                lits.append(item)
            elif isinstance(item, CAtom):
                lits.append(Literal(item))
            else:
                lits.append(Literal.of(item))
        return cls(tuple(lits))

    @property
    def is_propositional(self) -> bool:
        return not any(lit.is_catom for lit in self.literals)

    @property
    def has_negated_catom(self) -> bool:
        return any(lit.is_catom and not lit.positive for lit in self.literals)

    def atoms(self) -> tuple[int, ...]:
        """Every atom mentioned, in first-occurrence order, without repeats."""
        seen: dict[int, None] = {}
        for lit in self.literals:
            for a in lit.atoms:
                seen.setdefault(a, None)
        return tuple(seen)

    def __len__(self) -> int:
        return len(self.literals)

    def __iter__(self) -> Iterator[Literal]:
        return iter(self.literals)

    def __str__(self) -> str:
        return " | ".join(str(lit) for lit in self.literals)


# [VALUES] immutable; evaluation and normalization return new values
@dataclass(frozen=True)
class Theory:
    num_atoms: int
    clauses: tuple[Clause, ...] = ()
    atom_names: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "clauses", tuple(self.clauses))
        if self.atom_names is not None:
            object.__setattr__(self, "atom_names", tuple(self.atom_names))
            if len(self.atom_names) != self.num_atoms:
                raise TheoryError(
                    f"{len(self.atom_names)} atom names for {self.num_atoms} atoms"
                )
        if self.num_atoms < 0:
            raise TheoryError(f"negative atom count {self.num_atoms}")
        for index, clause in enumerate(self.clauses):
            for lit in clause.literals:
                for a in lit.atoms:
                    if a > self.num_atoms:
                        raise TheoryError(
                            f"clause {index}: atom {a} exceeds {self.num_atoms}"
                        )

    def name(self, atom: int) -> str:
        if self.atom_names is None:
            return f"x{atom}"
        return self.atom_names[atom - 1]

    @property
    def is_propositional(self) -> bool:
        return all(clause.is_propositional for clause in self.clauses)


# [HOW] mutable; local search flips it in place
class Assignment:
    """Total truth assignment over atoms 1..num_atoms (slot 0 unused)."""

    __slots__ = ("values",)

    def __init__(self, values: Sequence[bool]) -> None:
        self.values: list[bool] = [False, *(bool(v) for v in values)]

    @classmethod
    def all_false(cls, num_atoms: int) -> Assignment:
        return cls([False] * num_atoms)

    @classmethod
    def from_true_atoms(cls, num_atoms: int, true_atoms: Iterable[int]) -> Assignment:
        sigma = cls.all_false(num_atoms)
        for a in true_atoms:
            sigma.values[a] = True
        return sigma

    @classmethod
    def from_index(cls, num_atoms: int, index: int) -> Assignment:
        """Assignment whose bit ``a-1`` of ``index`` is the value of atom ``a``."""
        return cls([bool(index >> i & 1) for i in range(num_atoms)])

    @property
    def num_atoms(self) -> int:
        return len(self.values) - 1

    @property
    def bits(self) -> tuple[bool, ...]:
        return tuple(self.values[1:])

    def __getitem__(self, atom: int) -> bool:
        return self.values[atom]

    def __setitem__(self, atom: int, value: bool) -> None:
        self.values[atom] = value

    def flip(self, atom: int) -> None:
        self.values[atom] = not self.values[atom]

    def copy(self) -> Assignment:
        clone = Assignment.__new__(Assignment)
        clone.values = list(self.values)
        return clone

    def signed(self) -> list[int]:
        return [a if v else -a for a, v in enumerate(self.values) if a]

    def true_atoms(self) -> list[int]:
        return [a for a, v in enumerate(self.values) if a and v]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Assignment) and self.values == other.values

    def __hash__(self) -> int:
        return hash(self.bits)

    def __repr__(self) -> str:
        return f"Assignment({self.signed()})"


# =========================
# Satisfaction
# =========================


def true_count(c: CAtom, sigma: Assignment) -> int:
    values = sigma.values
    return sum(1 for a in c.atoms if values[a])


def eval_catom(c: CAtom, sigma: Assignment) -> bool:
    return c.holds(true_count(c, sigma))


def eval_literal(lit: Literal, sigma: Assignment) -> bool:
    if isinstance(lit.payload, CAtom):
        value = eval_catom(lit.payload, sigma)
    else:
        value = sigma.values[lit.payload]
    return value == lit.positive


def eval_clause(cl: Clause, sigma: Assignment) -> bool:
    return any(eval_literal(lit, sigma) for lit in cl.literals)


# [WHAT] pure
def eval_theory(t: Theory, sigma: Assignment) -> bool:
    return all(eval_clause(cl, sigma) for cl in t.clauses)


# =========================
# Normalization
# =========================


def negate_catom(c: CAtom) -> tuple[CAtom, ...]:
    """Positive c-atoms whose disjunction is equivalent to ``not c``.

    ``not (k X m)`` becomes ``X (k-1)`` or ``(m+1) X``; a disjunct is dropped
    when its bound can never be met. An empty result means ``not c`` is false.
    """
    parts: list[CAtom] = []
    if c.effective_lower > 0:
        parts.append(CAtom(c.atoms, upper=c.effective_lower - 1))
    if c.effective_upper < c.size:
        parts.append(CAtom(c.atoms, lower=c.effective_upper + 1))
    return tuple(parts)


def normalize_clause(cl: Clause) -> Clause:
    if not cl.has_negated_catom:
        return cl
    rewritten: list[Literal] = []
    false_witness: CAtom | None = None
    for lit in cl.literals:
        if isinstance(lit.payload, CAtom) and not lit.positive:
            parts = negate_catom(lit.payload)
            if not parts:
                false_witness = lit.payload
            rewritten.extend(Literal(p) for p in parts)
        else:
            rewritten.append(lit)
    if not rewritten:
        # every disjunct was constantly false; keep the clause unsatisfiable
        assert false_witness is not None
        atoms = false_witness.atoms
        rewritten.append(Literal(CAtom(atoms, lower=len(atoms) + 1)))
    return Clause(tuple(rewritten))


def normalize_theory(t: Theory) -> Theory:
    """Rewrite negated c-atoms into positive ones; the model set is unchanged."""
    if not any(cl.has_negated_catom for cl in t.clauses):
        return t
    clauses = tuple(normalize_clause(cl) for cl in t.clauses)
    return Theory(t.num_atoms, clauses, t.atom_names)


def is_normalized(t: Theory) -> bool:
    return not any(cl.has_negated_catom for cl in t.clauses)


# =========================
# Lint
# =========================


class LintKind(Enum):
    DUPLICATE_LITERAL = "duplicate-literal"
    TRIVIALLY_FALSE = "trivially-false"
    TRIVIALLY_TRUE = "trivially-true"
    BOUND_ABOVE_SIZE = "bound-above-size"


@dataclass(frozen=True)
class LintIssue:
    clause_index: int
    literal_index: int
    kind: LintKind
    message: str

    def __str__(self) -> str:
        return f"clause {self.clause_index}, literal {self.literal_index}: {self.message}"


def lint_theory(t: Theory) -> list[LintIssue]:
    issues: list[LintIssue] = []
    for ci, cl in enumerate(t.clauses):
        seen: set[Literal] = set()
        for li, lit in enumerate(cl.literals):
            if lit in seen:
                issues.append(
                    LintIssue(ci, li, LintKind.DUPLICATE_LITERAL, f"repeated literal {lit}")
                )
            seen.add(lit)
            c = lit.payload
            if not isinstance(c, CAtom):
                continue
            k, m, n = c.effective_lower, c.effective_upper, c.size
            if k > n or k > m:
                issues.append(LintIssue(ci, li, LintKind.TRIVIALLY_FALSE, f"{c} can never hold"))
            elif k == 0 and m >= n:
                issues.append(LintIssue(ci, li, LintKind.TRIVIALLY_TRUE, f"{c} always holds"))
            if c.upper is not None and c.upper > n:
                issues.append(
                    LintIssue(ci, li, LintKind.BOUND_ABOVE_SIZE, f"upper bound of {c} exceeds |X|={n}")
                )
    return issues


# =========================
# Simple theories
# =========================


@dataclass(frozen=True)
class SimplePartition:
    tcc: tuple[tuple[int, CAtom], ...]
    tcnf: tuple[int, ...]
    free_atoms: tuple[int, ...]


@dataclass(frozen=True)
class NotSimple:
    condition: int
    clause_index: int
    reason: str

    def __str__(self) -> str:
        return f"condition ({self.condition}) fails at clause {self.clause_index}: {self.reason}"


# [WHAT] the verdict is a value, never an exception
def classify_simple(t: Theory) -> SimplePartition | NotSimple:
    """Split ``t`` into unit disjoint c-atoms and propositional clauses, if possible.

    Conditions: (1) c-atom clauses are unit with pairwise disjoint atom sets,
    (2) all other clauses are propositional, (3) every c-atom has k < |X| and m > 0.
    """
    tcc: list[tuple[int, CAtom]] = []
    tcnf: list[int] = []
    owner: dict[int, int] = {}
    for index, cl in enumerate(t.clauses):
        if cl.is_propositional:
            tcnf.append(index)
            continue
        lit = cl.literals[0]
        if len(cl) != 1 or not lit.positive:
            return NotSimple(2, index, f"c-atom outside a positive unit clause: {cl}")
        c = lit.payload
        assert isinstance(c, CAtom)
        for a in c.atoms:
            if a in owner:
                return NotSimple(
                    1, index, f"atom x{a} is shared with the c-atom of clause {owner[a]}"
                )
        if not (c.effective_lower < c.size and c.effective_upper > 0):
            return NotSimple(3, index, f"{c} needs k < |X| and m > 0")
        for a in c.atoms:
            owner[a] = index
        tcc.append((index, c))
    free = tuple(a for a in range(1, t.num_atoms + 1) if a not in owner)
    return SimplePartition(tuple(tcc), tuple(tcnf), free)
