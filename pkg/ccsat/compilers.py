"""Eliminate c-atoms: subset expansion (basic), unary counters (uc), binary adders (bc).

Original atoms keep their ids; auxiliary atoms are allocated contiguously after
them and every one of them is described in the resulting :class:`AtomMap`.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from enum import Enum
from itertools import chain, combinations, product

from ccsat import settings as cfg
from ccsat.cnf import AtomMap, AuxAtom, AuxRole, CompiledCnf
from ccsat.errors import BudgetExceeded
from ccsat.theory import CAtom, Theory, normalize_theory

logger = logging.getLogger(__name__)


# =========================
# compile-basic
# =========================


def _positive_subset_size(c: CAtom) -> int:
    # lower bounds above |X|+1 behave as |X|+1: a single empty clause
    return c.size - min(c.effective_lower, c.size + 1) + 1


def basic_clause_count(c: CAtom) -> int:
    """C(n, m+1) + C(n, k-1): size of the subset expansion of ``c``."""
    n = c.size
    negative = math.comb(n, c.effective_upper + 1)
    positive = math.comb(n, _positive_subset_size(c)) if c.effective_lower > 0 else 0
    return negative + positive


def catom_basic_clauses(c: CAtom, budget: int | None = None) -> list[tuple[int, ...]]:
    """Negative clauses over (m+1)-subsets, then positive clauses over (n-k+1)-subsets."""
    count = basic_clause_count(c)
    if budget is not None and count > budget:
        raise BudgetExceeded(count, budget, f"c-atom {c}")
    clauses: list[tuple[int, ...]] = []
    r = c.effective_upper + 1
    if r <= c.size:
        clauses.extend(tuple(-a for a in subset) for subset in combinations(c.atoms, r))
    if c.effective_lower > 0:
        clauses.extend(combinations(c.atoms, _positive_subset_size(c)))
    return clauses


def compile_basic(t: Theory, budget: int = cfg.CLAUSE_BUDGET) -> CompiledCnf:
    t = normalize_theory(t)
    total = 0
    for index, clause in enumerate(t.clauses):
        sizes = [basic_clause_count(lit.payload) if isinstance(lit.payload, CAtom) else 1 for lit in clause]
        total += math.prod(sizes)
        if total > budget:
            raise BudgetExceeded(total, budget, f"compile-basic (reached at clause {index})")

    clauses: list[tuple[int, ...]] = []
    for clause in t.clauses:
        parts = [
            catom_basic_clauses(lit.payload) if isinstance(lit.payload, CAtom) else [(lit.signed,)]
            for lit in clause
        ]
        clauses.extend(tuple(chain.from_iterable(combo)) for combo in product(*parts))
    result = CompiledCnf("basic", t.num_atoms, t.num_atoms, tuple(clauses), AtomMap())
    _log_stats(result)
    return result


# =========================
# Gate builder (uc, bc)
# =========================


class Const(Enum):
    FALSE = 0
    TRUE = 1


Term = int | Const  # signed literal or constant


def neg(x: Term) -> Term:
    if x is Const.TRUE:
        return Const.FALSE
    if x is Const.FALSE:
        return Const.TRUE
    return -x


class _Builder:
    """Allocates auxiliary atoms and emits defining clauses, folding constants."""

    def __init__(self, method: str, original_atoms: int) -> None:
        self.method = method
        self.original_atoms = original_atoms
        self.next_atom = original_atoms + 1
        self.clauses: list[tuple[int, ...]] = []
        self.entries: dict[int, AuxAtom] = {}
        self.site = (0, 0)
        self.role = AuxRole.COUNTER
        self.label = ""

    def fresh(self) -> int:
        atom = self.next_atom
        self.next_atom += 1
        self.entries[atom] = AuxAtom(self.role, self.site[0], self.site[1], self.label or f"g{atom}")
        return atom

    def emit(self, *lits: int) -> None:
        self.clauses.append(lits)

    def and_(self, a: Term, b: Term) -> Term:
        if a is Const.FALSE or b is Const.FALSE:
            return Const.FALSE
        if a is Const.TRUE:
            return b
        if b is Const.TRUE or a == b:
            return a
        if a == -b:
            return Const.FALSE
        x = self.fresh()
        self.emit(-x, a)
        self.emit(-x, b)
        self.emit(x, -a, -b)
        return x

    def or_(self, a: Term, b: Term) -> Term:
        if a is Const.TRUE or b is Const.TRUE:
            return Const.TRUE
        if a is Const.FALSE:
            return b
        if b is Const.FALSE or a == b:
            return a
        if a == -b:
            return Const.TRUE
        x = self.fresh()
        self.emit(x, -a)
        self.emit(x, -b)
        self.emit(-x, a, b)
        return x

    def xor(self, a: Term, b: Term) -> Term:
        if isinstance(a, Const):
            return b if a is Const.FALSE else neg(b)
        if isinstance(b, Const):
            return a if b is Const.FALSE else neg(a)
        if a == b:
            return Const.FALSE
        if a == -b:
            return Const.TRUE
        x = self.fresh()
        self.emit(-x, a, b)
        self.emit(-x, -a, -b)
        self.emit(x, -a, b)
        self.emit(x, a, -b)
        return x

    def counter_step(self, same: Term, lower: Term, a: int) -> Term:
        """``same or (lower and a)``, the unary counter recurrence."""
        if same is Const.TRUE:
            return Const.TRUE
        if lower is Const.FALSE:
            return same
        if same is Const.FALSE:
            return self.and_(lower, a)
        if lower is Const.TRUE:
            return self.or_(same, a)
        x = self.fresh()
        self.emit(-x, same, lower)
        self.emit(-x, same, a)
        self.emit(x, -same)
        self.emit(x, -lower, -a)
        return x

    def full_add(self, a: Term, b: Term, c: Term, need_carry: bool = True) -> tuple[Term, Term]:
        terms = [x for x in (a, b, c) if x is not Const.FALSE]
        ones = sum(1 for x in terms if x is Const.TRUE)
        rest = [x for x in terms if x is not Const.TRUE]
        if not rest:
            return Const(ones % 2), Const(int(ones >= 2))
        if len(rest) == 1:
            x = rest[0]
            s = x if ones % 2 == 0 else neg(x)
            carry = Const.TRUE if ones >= 2 else (x if ones == 1 else Const.FALSE)
            return s, carry
        if len(rest) == 2:
            s = self.xor(*rest)
            if ones:
                s = neg(s)
            if not need_carry:
                return s, Const.FALSE
            return s, (self.or_(*rest) if ones else self.and_(*rest))
        x, y, z = rest
        s = self.fresh()
        for bits in product((0, 1), repeat=3):
            guard = [-v if bit else v for v, bit in zip((x, y, z), bits)]
            self.emit(*guard, s if sum(bits) % 2 else -s)
        if not need_carry:
            return s, Const.FALSE
        carry = self.fresh()
        for u, v in ((x, y), (x, z), (y, z)):
            self.emit(-u, -v, carry)
            self.emit(u, v, -carry)
        return s, carry

    def define(self, conjuncts: list[Term]) -> Term:
        """Literal equivalent to the conjunction; fresh only for two live conjuncts."""
        if any(x is Const.FALSE for x in conjuncts):
            return Const.FALSE
        live = [x for x in conjuncts if x is not Const.TRUE]
        if not live:
            return Const.TRUE
        if len(live) == 1:
            return live[0]
        self.role, self.label = AuxRole.DEFINITION, "d"
        d = self.fresh()
        for x in live:
            self.emit(-d, x)
        self.emit(d, *(-x for x in live))
        return d

    def result(self) -> CompiledCnf:
        return CompiledCnf(
            self.method,
            self.original_atoms,
            self.next_atom - 1,
            tuple(self.clauses),
            AtomMap(dict(self.entries)),
        )


def _compile_with(t: Theory, method: str, encode: Callable[[_Builder, CAtom], Term]) -> CompiledCnf:
    t = normalize_theory(t)
    builder = _Builder(method, t.num_atoms)
    for ci, clause in enumerate(t.clauses):
        out: list[int] = []
        satisfied = False
        for li, lit in enumerate(clause):
            c = lit.payload
            if not isinstance(c, CAtom):
                out.append(lit.signed)
                continue
            builder.site = (ci, li)
            term = encode(builder, c)
            if term is Const.TRUE:
                satisfied = True
                break
            if term is not Const.FALSE:
                out.append(term)
        if not satisfied:
            builder.emit(*out)
    result = builder.result()
    _log_stats(result)
    return result


# =========================
# compile-uc
# =========================


def _unary(b: _Builder, c: CAtom) -> Term:
    n, k, m = c.size, c.effective_lower, c.effective_upper
    need_lower, need_upper = k > 0, m < n
    if not (need_lower or need_upper):
        return Const.TRUE
    width = min(max(k if need_lower else 0, m + 1 if need_upper else 0), n + 1)
    b.role = AuxRole.COUNTER
    prev: list[Term] = [Const.TRUE] + [Const.FALSE] * width
    for i, a in enumerate(c.atoms, start=1):
        row: list[Term] = [Const.TRUE]
        for j in range(1, width + 1):
            b.label = f"b[{i},{j}]"
            row.append(b.counter_step(prev[j], prev[j - 1], a))
        prev = row

    def at_least(j: int) -> Term:
        return prev[j] if j <= width else Const.FALSE

    conjuncts: list[Term] = []
    if need_lower:
        conjuncts.append(at_least(k))
    if need_upper:
        conjuncts.append(neg(at_least(m + 1)))
    return b.define(conjuncts)


def compile_uc(t: Theory) -> CompiledCnf:
    return _compile_with(t, "uc", _unary)


# =========================
# compile-bc
# =========================


def _add_words(b: _Builder, u: list[Term], nu: int, v: list[Term], nv: int, width: int) -> list[Term]:
    """Sum of two counts, saturated to the all-ones word of ``width`` bits."""
    exact = (nu + nv).bit_length()
    span = max(len(u), len(v))
    bits: list[Term] = []
    carry: Term = Const.FALSE
    b.role = AuxRole.ADDER
    for i in range(span):
        x = u[i] if i < len(u) else Const.FALSE
        y = v[i] if i < len(v) else Const.FALSE
        b.label = f"sum[{i}]"
        s, carry = b.full_add(x, y, carry, need_carry=i + 1 < exact)
        bits.append(s)
    if exact > span:
        bits.append(carry)
    if len(bits) > width:
        overflow = bits[width]
        b.label = "sat"
        bits = [b.or_(bit, overflow) for bit in bits[:width]]
    return bits


def _count_bits(b: _Builder, atoms: tuple[int, ...], width: int) -> list[Term]:
    if len(atoms) == 1:
        return [atoms[0]]
    mid = len(atoms) // 2
    left = _count_bits(b, atoms[:mid], width)
    right = _count_bits(b, atoms[mid:], width)
    return _add_words(b, left, mid, right, len(atoms) - mid, width)


def _at_least(b: _Builder, bits: list[Term], bound: int) -> Term:
    """Comparator ``value(bits) >= bound`` built from the least significant bit up."""
    if bound <= 0:
        return Const.TRUE
    if bound >= 1 << len(bits):
        return Const.FALSE
    b.role, b.label = AuxRole.COMPARATOR, f"ge{bound}"
    result: Term = Const.TRUE
    for i, bit in enumerate(bits):
        result = b.and_(bit, result) if bound >> i & 1 else b.or_(bit, result)
    return result


def _binary(b: _Builder, c: CAtom) -> Term:
    n, k, m = c.size, c.effective_lower, c.effective_upper
    need_lower, need_upper = k > 0, m < n
    if not (need_lower or need_upper):
        return Const.TRUE
    if k > n:
        return Const.FALSE
    bound = max(k if need_lower else 0, m if need_upper else 0)
    width = (bound + 1).bit_length()  # ceil(log2(B + 2))
    bits = _count_bits(b, c.atoms, width) if n else []
    conjuncts: list[Term] = []
    if need_lower:
        conjuncts.append(_at_least(b, bits, k))
    if need_upper:
        conjuncts.append(neg(_at_least(b, bits, m + 1)))
    return b.define(conjuncts)


def compile_bc(t: Theory) -> CompiledCnf:
    return _compile_with(t, "bc", _binary)


# =========================
# Dispatch
# =========================

METHODS: dict[str, Callable[[Theory], CompiledCnf]] = {
    "basic": compile_basic,
    "uc": compile_uc,
    "bc": compile_bc,
}


# [WHAT] pure apart from the stats log line
def compile_theory(t: Theory, method: str, budget: int = cfg.CLAUSE_BUDGET) -> CompiledCnf:
    if method == "basic":
        return compile_basic(t, budget)
    try:
        compiler = METHODS[method]
    except KeyError:
        raise ValueError(f"unknown compile method {method!r}") from None
    return compiler(t)


def _log_stats(result: CompiledCnf) -> None:
    stats = result.stats
    logger.info(
        "compile-%s: %d clauses, %d literals, %d auxiliary atoms",
        result.method,
        stats.clauses,
        stats.literals,
        stats.aux_atoms,
    )
