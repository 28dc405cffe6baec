"""Plain CNF values and the bookkeeping that ties auxiliary atoms back to c-atoms."""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from enum import Enum

from ccsat.errors import TheoryError
from ccsat.theory import Assignment, Clause, Literal, Theory


@dataclass(frozen=True)
class Cnf:
    num_atoms: int
    clauses: tuple[tuple[int, ...], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "clauses", tuple(tuple(cl) for cl in self.clauses))
        for index, cl in enumerate(self.clauses):
            for lit in cl:
                if lit == 0 or abs(lit) > self.num_atoms:
                    raise TheoryError(f"clause {index}: literal {lit} out of range")

    @property
    def has_empty_clause(self) -> bool:
        return any(not cl for cl in self.clauses)

    def to_theory(self) -> Theory:
        """View as a propositional theory; the empty clause has no theory form."""
        if self.has_empty_clause:
            raise TheoryError("CNF contains the empty clause")
        return Theory(
            self.num_atoms,
            tuple(Clause(tuple(Literal.of(lit) for lit in cl)) for cl in self.clauses),
        )

    def satisfied_by(self, sigma: Assignment) -> bool:
        values = sigma.values
        return all(any(values[abs(lit)] == (lit > 0) for lit in cl) for cl in self.clauses)


class AuxRole(Enum):
    COUNTER = "counter"
    ADDER = "adder"
    COMPARATOR = "comparator"
    DEFINITION = "definition"


@dataclass(frozen=True)
class AuxAtom:
    role: AuxRole
    clause_index: int
    literal_index: int
    label: str

    def describe(self) -> str:
        return f"{self.role.value} {self.label} (clause {self.clause_index}, literal {self.literal_index})"


@dataclass(frozen=True)
class AtomMap:
    entries: dict[int, AuxAtom] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, atom: int) -> AuxAtom:
        return self.entries[atom]

    def __contains__(self, atom: object) -> bool:
        return atom in self.entries

    def items(self) -> Iterable[tuple[int, AuxAtom]]:
        return sorted(self.entries.items())


@dataclass(frozen=True)
class CnfStats:
    clauses: int
    literals: int
    aux_atoms: int


# [VALUES] compiler output plus the map back to original atoms
@dataclass(frozen=True)
class CompiledCnf:
    method: str
    original_atoms: int
    num_atoms: int
    clauses: tuple[tuple[int, ...], ...]
    atom_map: AtomMap

    @property
    def stats(self) -> CnfStats:
        return CnfStats(
            clauses=len(self.clauses),
            literals=sum(len(cl) for cl in self.clauses),
            aux_atoms=self.num_atoms - self.original_atoms,
        )

    @property
    def cnf(self) -> Cnf:
        return Cnf(self.num_atoms, self.clauses)


def project(c: CompiledCnf, model: Assignment | Sequence[int]) -> Assignment:
    """Drop auxiliary atoms from a model of ``c``.

    ``model`` is an assignment over all atoms of ``c`` or a list of signed
    literals as SAT solvers report them.
    """
    if isinstance(model, Assignment):
        return Assignment(model.values[1 : c.original_atoms + 1])
    return Assignment.from_true_atoms(
        c.original_atoms, (lit for lit in model if 0 < lit <= c.original_atoms)
    )


def project_models(
    c: CompiledCnf, models: Iterable[Assignment | Sequence[int]]
) -> set[tuple[bool, ...]]:
    return {project(c, m).bits for m in models}
