"""Readers and writers: CCNF theories, DIMACS CNF, ``.col`` graphs, latin instances, models.

All readers accept a string, an open text stream or any iterable of lines and
raise :class:`~ccsat.errors.FormatError` with the offending line number.
Writers are deterministic and return text ending in a newline.
"""

from __future__ import annotations

import logging
import re
from collections.abc import Iterable, Iterator
from dataclasses import dataclass
from pathlib import Path
from typing import TextIO

from ccsat.cnf import Cnf, CompiledCnf
from ccsat.errors import FormatError, TheoryError
from ccsat.theory import Assignment, CAtom, Clause, Literal, Theory

logger = logging.getLogger(__name__)

Source = str | TextIO | Iterable[str]

_DECIMAL = re.compile(r"-?[0-9]+")
_NAME_COMMENT = re.compile(r"name ([1-9][0-9]*) (\S+)")
_ABSENT = -1  # CCNF token for a missing bound


# =========================
# Token helpers
# =========================


def _lines(source: Source) -> Iterator[tuple[int, str]]:
    """Yield ``(line_number, stripped_line)`` skipping blank lines."""
    lines = source.splitlines() if isinstance(source, str) else source
    for number, raw in enumerate(lines, start=1):
        line = raw.strip()
        if line:
            yield number, line


def _int(token: str, line: int) -> int:
    if not _DECIMAL.fullmatch(token):
        raise FormatError(f"expected a decimal integer, got {token!r}", line)
    return int(token)


def _is_comment(line: str) -> bool:
    return line == "c" or line.startswith(("c ", "c\t"))


def _header(tokens: list[str], kinds: tuple[str, ...], fields: int, line: int) -> list[int]:
    if len(tokens) != 2 + fields or tokens[1] not in kinds:
        raise FormatError(f"malformed header {' '.join(tokens)!r}, expected 'p {kinds[0]} ...'", line)
    values = [_int(t, line) for t in tokens[2:]]
    if any(v < 0 for v in values):
        raise FormatError("negative count in header", line)
    return values


# =========================
# CCNF
# =========================


@dataclass(frozen=True)
class CcnfDocument:
    theory: Theory
    comments: tuple[str, ...] = ()

    @property
    def num_atoms(self) -> int:
        return self.theory.num_atoms

    @property
    def num_clauses(self) -> int:
        return len(self.theory.clauses)


def _bound(token: str, line: int) -> int | None:
    value = _int(token, line)
    if value == _ABSENT:
        return None
    if value < 0:
        raise FormatError(f"bound must be non-negative or -1, got {value}", line)
    return value


def _parse_ccnf_clause(tokens: list[str], num_atoms: int, line: int) -> Clause:
    literals: list[Literal] = []
    i = 0
    terminated = False
    while i < len(tokens):
        token = tokens[i]
        if token in ("d", "nd"):
            if i + 4 > len(tokens):
                raise FormatError("truncated c-atom", line)
            lower = _bound(tokens[i + 1], line)
            upper = _bound(tokens[i + 2], line)
            count = _int(tokens[i + 3], line)
            if count < 0 or i + 4 + count > len(tokens):
                raise FormatError(f"c-atom announces {count} atoms", line)
            atoms = [_int(t, line) for t in tokens[i + 4 : i + 4 + count]]
            for a in atoms:
                if not 1 <= a <= num_atoms:
                    raise FormatError(f"atom {a} out of range 1..{num_atoms}", line)
            try:
                catom = CAtom(tuple(atoms), lower, upper)
            except TheoryError as exc:
                raise FormatError(str(exc), line) from exc
            literals.append(Literal(catom, token == "d"))
            i += 4 + count
            continue
        value = _int(token, line)
        if value == 0:
            if i != len(tokens) - 1:
                raise FormatError("tokens after the terminating 0", line)
            terminated = True
            break
        if abs(value) > num_atoms:
            raise FormatError(f"atom {abs(value)} out of range 1..{num_atoms}", line)
        literals.append(Literal.of(value))
        i += 1
    if not terminated:
        raise FormatError("clause not 0-terminated", line)
    if not literals:
        raise FormatError("empty clause", line)
    return Clause(tuple(literals))


# [WHAT] text in, values out; errors carry the line number
def read_ccnf(source: Source) -> CcnfDocument:
    header: list[int] | None = None
    clauses: list[Clause] = []
    comments: list[str] = []
    names: dict[int, str] = {}
    last = 0
    for number, line in _lines(source):
        last = number
        if _is_comment(line):
            body = line[2:]
            named = _NAME_COMMENT.fullmatch(body)
            if named:
                names[int(named[1])] = named[2]
            else:
                comments.append(body)
            continue
        tokens = line.split()
        if tokens[0] == "p":
            if header is not None:
                raise FormatError("second header line", number)
            header = _header(tokens, ("ccnf",), 2, number)
            continue
        if header is None:
            raise FormatError("clause before 'p ccnf' header", number)
        clauses.append(_parse_ccnf_clause(tokens, header[0], number))
    if header is None:
        raise FormatError("missing 'p ccnf' header", last or None)
    num_atoms, num_clauses = header
    if len(clauses) != num_clauses:
        raise FormatError(f"header declares {num_clauses} clauses, found {len(clauses)}", last)
    atom_names = None
    if names:
        if max(names) > num_atoms:
            raise FormatError(f"name given for atom {max(names)} beyond {num_atoms}")
        atom_names = tuple(names.get(a, f"x{a}") for a in range(1, num_atoms + 1))
    return CcnfDocument(Theory(num_atoms, tuple(clauses), atom_names), tuple(comments))


def parse_ccnf(source: Source) -> Theory:
    return read_ccnf(source).theory


def _ccnf_tokens(lit: Literal) -> list[str]:
    c = lit.payload
    if not isinstance(c, CAtom):
        return [str(lit.signed)]
    lower = _ABSENT if c.lower is None else c.lower
    upper = _ABSENT if c.upper is None else c.upper
    head = "d" if lit.positive else "nd"
    return [head, str(lower), str(upper), str(c.size), *map(str, c.atoms)]


def write_ccnf(t: Theory, comments: Iterable[str] = ()) -> str:
    out = [f"c {text}" if text else "c" for text in comments]
    if t.atom_names is not None:
        for atom, name in enumerate(t.atom_names, start=1):
            if not name or any(ch.isspace() for ch in name):
                raise FormatError(f"atom name {name!r} is empty or contains whitespace")
            out.append(f"c name {atom} {name}")
    out.append(f"p ccnf {t.num_atoms} {len(t.clauses)}")
    for cl in t.clauses:
        tokens = [tok for lit in cl.literals for tok in _ccnf_tokens(lit)]
        out.append(" ".join([*tokens, "0"]))
    return "\n".join(out) + "\n"


# =========================
# DIMACS CNF
# =========================


def write_dimacs(c: Cnf | CompiledCnf) -> str:
    out: list[str] = []
    if isinstance(c, CompiledCnf):
        out.append(f"c compiled by {c.method}, {c.original_atoms} original atoms")
        out.extend(f"c map {aux} {entry.describe()}" for aux, entry in c.atom_map.items())
    out.append(f"p cnf {c.num_atoms} {len(c.clauses)}")
    out.extend(" ".join([*map(str, cl), "0"]) for cl in c.clauses)
    return "\n".join(out) + "\n"


def parse_dimacs(source: Source) -> Cnf:
    header: list[int] | None = None
    clauses: list[tuple[int, ...]] = []
    pending: list[int] = []
    last = 0
    for number, line in _lines(source):
        last = number
        if line.startswith("c"):
            continue
        if line.startswith("%"):
            break
        tokens = line.split()
        if tokens[0] == "p":
            if header is not None:
                raise FormatError("second header line", number)
            header = _header(tokens, ("cnf",), 2, number)
            continue
        if header is None:
            raise FormatError("clause before 'p cnf' header", number)
        for token in tokens:
            lit = _int(token, number)
            if lit == 0:
                clauses.append(tuple(pending))
                pending = []
            elif abs(lit) > header[0]:
                raise FormatError(f"literal {lit} exceeds {header[0]} atoms", number)
            else:
                pending.append(lit)
    if header is None:
        raise FormatError("missing 'p cnf' header", last or None)
    if pending:
        raise FormatError("last clause not 0-terminated", last)
    if len(clauses) != header[1]:
        raise FormatError(f"header declares {header[1]} clauses, found {len(clauses)}", last)
    return Cnf(header[0], tuple(clauses))


# =========================
# Graphs (.col)
# =========================


@dataclass(frozen=True)
class GraphInstance:
    num_vertices: int
    edges: tuple[tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "edges", tuple((int(u), int(v)) for u, v in self.edges))
        seen: set[tuple[int, int]] = set()
        for u, v in self.edges:
            if not (1 <= u < v <= self.num_vertices):
                raise TheoryError(f"edge ({u}, {v}) is not an ordered pair in 1..{self.num_vertices}")
            if (u, v) in seen:
                raise TheoryError(f"duplicate edge ({u}, {v})")
            seen.add((u, v))

    @classmethod
    def from_edges(cls, num_vertices: int, edges: Iterable[tuple[int, int]]) -> GraphInstance:
        """Normalize pairs to ``u < v`` and collapse duplicates, keeping first occurrence."""
        kept: dict[tuple[int, int], None] = {}
        for u, v in edges:
            if u == v:
                raise TheoryError(f"self-loop on vertex {u}")
            kept.setdefault((min(u, v), max(u, v)), None)
        return cls(num_vertices, tuple(kept))

    @property
    def num_edges(self) -> int:
        return len(self.edges)


def parse_col_graph(source: Source) -> GraphInstance:
    n: int | None = None
    kept: dict[tuple[int, int], None] = {}
    for number, line in _lines(source):
        tokens = line.split()
        kind = tokens[0]
        if kind == "c" or kind == "n":
            continue
        if kind == "p":
            if n is not None:
                raise FormatError("second header line", number)
            n = _header(tokens, ("edge", "col"), 2, number)[0]
            continue
        if kind != "e":
            raise FormatError(f"unexpected line type {kind!r}", number)
        if n is None:
            raise FormatError("edge before 'p edge' header", number)
        if len(tokens) != 3:
            raise FormatError("edge line needs two vertices", number)
        u, v = _int(tokens[1], number), _int(tokens[2], number)
        for w in (u, v):
            if not 1 <= w <= n:
                raise FormatError(f"vertex {w} out of range 1..{n}", number)
        if u == v:
            logger.warning("line %d: dropping self-loop on vertex %d", number, u)
            continue
        kept.setdefault((min(u, v), max(u, v)), None)
    if n is None:
        raise FormatError("missing 'p edge' header")
    return GraphInstance(n, tuple(kept))


def write_col_graph(g: GraphInstance) -> str:
    out = [f"p edge {g.num_vertices} {g.num_edges}"]
    out.extend(f"e {u} {v}" for u, v in g.edges)
    return "\n".join(out) + "\n"


# =========================
# Latin squares
# =========================


@dataclass(frozen=True)
class LatinInstance:
    order: int
    givens: tuple[tuple[int, int, int], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "givens", tuple(tuple(g) for g in self.givens))
        cells: set[tuple[int, int]] = set()
        for given in self.givens:
            i, j, k = given
            if not all(1 <= x <= self.order for x in given):
                raise TheoryError(f"given {given} out of range 1..{self.order}")
            if (i, j) in cells:
                raise TheoryError(f"cell ({i}, {j}) given twice")
            cells.add((i, j))


def parse_latin(source: Source) -> LatinInstance:
    header: list[int] | None = None
    givens: list[tuple[int, int, int]] = []
    cells: set[tuple[int, int]] = set()
    last = 0
    for number, line in _lines(source):
        last = number
        if _is_comment(line):
            continue
        tokens = line.split()
        if tokens[0] == "p":
            if header is not None:
                raise FormatError("second header line", number)
            header = _header(tokens, ("latin",), 2, number)
            continue
        if header is None:
            raise FormatError("given before 'p latin' header", number)
        if len(tokens) != 3:
            raise FormatError("given line needs 'i j k'", number)
        i, j, k = (_int(t, number) for t in tokens)
        if not all(1 <= x <= header[0] for x in (i, j, k)):
            raise FormatError(f"given ({i}, {j}, {k}) out of range 1..{header[0]}", number)
        if (i, j) in cells:
            raise FormatError(f"cell ({i}, {j}) repeated", number)
        cells.add((i, j))
        givens.append((i, j, k))
    if header is None:
        raise FormatError("missing 'p latin' header", last or None)
    if len(givens) != header[1]:
        raise FormatError(f"header declares {header[1]} givens, found {len(givens)}", last)
    return LatinInstance(header[0], tuple(givens))


def write_latin(inst: LatinInstance) -> str:
    out = [f"p latin {inst.order} {len(inst.givens)}"]
    out.extend(f"{i} {j} {k}" for i, j, k in inst.givens)
    return "\n".join(out) + "\n"


# =========================
# Models
# =========================


def write_model(sigma: Assignment | None) -> str:
    if sigma is None:
        return "s UNKNOWN\n"
    return "s SATISFIABLE\nv " + " ".join([*map(str, sigma.signed()), "0"]) + "\n"


def parse_model(source: Source, num_atoms: int | None = None) -> Assignment | None:
    """Inverse of :func:`write_model`; ``None`` for a non-satisfiable status."""
    status: str | None = None
    literals: list[int] = []
    for number, line in _lines(source):
        tokens = line.split()
        if tokens[0] == "s":
            status = " ".join(tokens[1:])
        elif tokens[0] == "v":
            literals.extend(_int(t, number) for t in tokens[1:])
        elif tokens[0] != "c":
            raise FormatError(f"unexpected line type {tokens[0]!r}", number)
    if status is None:
        raise FormatError("missing status line")
    if status != "SATISFIABLE":
        return None
    literals = [lit for lit in literals if lit != 0]
    size = num_atoms if num_atoms is not None else max((abs(x) for x in literals), default=0)
    if any(abs(lit) > size for lit in literals):
        raise FormatError(f"model mentions atoms beyond {size}")
    return Assignment.from_true_atoms(size, (lit for lit in literals if lit > 0))


# =========================
# File edges
# =========================


def sniff_kind(text: str) -> str:
    """Return ``"ccnf"`` or ``"cnf"`` from the first header line."""
    for number, line in _lines(text):
        tokens = line.split()
        if tokens[0] == "p":
            if len(tokens) > 1 and tokens[1] in ("ccnf", "cnf"):
                return tokens[1]
            raise FormatError(f"unsupported problem kind {' '.join(tokens[1:2])!r}", number)
    raise FormatError("no header line found")


def parse_problem(text: str) -> Theory | Cnf:
    if sniff_kind(text) == "ccnf":
        return parse_ccnf(text)
    return parse_dimacs(text)


# [HOW] edge I/O. Converts a file to [VALUES] for the pure core.
def load_problem(path: Path) -> Theory | Cnf:
    return parse_problem(path.read_text(encoding="utf-8"))
