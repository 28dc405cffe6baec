from __future__ import annotations

import functools
import math
import re

import numpy as np
import pytest

from ccsat.cnf import CompiledCnf, project
from ccsat.compilers import (
    basic_clause_count,
    catom_basic_clauses,
    compile_basic,
    compile_bc,
    compile_theory,
    compile_uc,
)
from ccsat.encoders import encode_coloring
from ccsat.errors import BudgetExceeded
from ccsat.theory import CAtom, Clause, Theory
from tests.randomgen import cnf_clause_table, random_theory, theory_models, truth_table

solvers = pytest.importorskip("pysat.solvers")

A, B, C = 1, 2, 3


def compiled_models(compiled: CompiledCnf) -> set[tuple[bool, ...]]:
    """Projected model set of ``compiled``, enumerated with blocking clauses over the original atoms."""
    if any(not cl for cl in compiled.clauses):
        return set()
    found: set[tuple[bool, ...]] = set()
    with solvers.Minisat22(bootstrap_with=[list(cl) for cl in compiled.clauses]) as oracle:
        while oracle.solve():
            sigma = project(compiled, oracle.get_model() or [])
            found.add(sigma.bits)
            if not sigma.num_atoms:
                break
            oracle.add_clause([-lit for lit in sigma.signed()])
    return found


def basic_models(compiled: CompiledCnf) -> set[tuple[bool, ...]]:
    table = truth_table(compiled.original_atoms)
    holds = cnf_clause_table(table, compiled.clauses).all(axis=1)
    return set(map(tuple, table[holds].tolist()))


def single(c: CAtom) -> Theory:
    return Theory(max(c.atoms), (Clause.of(c),))


# =========================
# compile-basic
# =========================


@pytest.mark.parametrize("n", range(1, 9))
def test_basic_clause_count_matches_binomials(n):
    atoms = tuple(range(1, n + 1))
    for k in [None, *range(0, n + 2)]:
        for m in [None, *range(0, n + 1)]:
            if k is None and m is None:
                continue
            c = CAtom(atoms, k, m)
            eff_k = 0 if k is None else k
            eff_m = n if m is None else m
            expected = math.comb(n, eff_m + 1) + (math.comb(n, eff_k - 1) if eff_k > 0 else 0)
            assert basic_clause_count(c) == expected
            assert len(catom_basic_clauses(c)) == expected


def test_exactly_one_of_three():
    assert catom_basic_clauses(CAtom((A, B, C), 1, 1)) == [(-A, -B), (-A, -C), (-B, -C), (A, B, C)]


def test_upper_zero_gives_negative_units():
    assert catom_basic_clauses(CAtom((A, B), upper=0)) == [(-A,), (-B,)]


def test_budget_is_checked_before_expanding():
    c = CAtom(tuple(range(1, 201)), upper=103)
    with pytest.raises(BudgetExceeded) as info:
        compile_basic(single(c), budget=10**6)
    assert info.value.required == math.comb(200, 104)
    with pytest.raises(BudgetExceeded):
        catom_basic_clauses(c, budget=10**6)


def test_k3_three_colors_expands_to_21_clauses(k3):
    compiled = compile_basic(encode_coloring(k3, 3))
    assert compiled.stats.clauses == 21
    assert compiled.stats.aux_atoms == 0


def test_catom_disjunct_distributes_over_its_expansion():
    t = Theory(3, (Clause.of(CAtom((A, B), 1, 1), 3),))
    assert compile_basic(t).clauses == ((-A, -B, 3), (A, B, 3))


def test_lower_bound_above_size_yields_empty_clause():
    compiled = compile_basic(single(CAtom((A, B), lower=5)))
    assert compiled.clauses == ((),)
    assert compiled.cnf.has_empty_clause


def test_unknown_method_is_rejected():
    with pytest.raises(ValueError):
        compile_theory(Theory(1), "sorting-network")


# =========================
# Model equivalence
# =========================


def test_basic_preserves_models_on_random_theories():
    rng = np.random.default_rng(101)
    for _ in range(200):
        t = random_theory(rng, max_atoms=12)
        assert basic_models(compile_basic(t)) == theory_models(t)


@pytest.mark.parametrize("compiler", [compile_uc, compile_bc], ids=["uc", "bc"])
def test_counter_compilers_preserve_models_on_random_theories(compiler):
    rng = np.random.default_rng(202)
    for _ in range(200):
        t = random_theory(rng, max_atoms=12)
        assert compiled_models(compiler(t)) == theory_models(t), str(t.clauses)


@pytest.mark.parametrize("method", ["basic", "uc", "bc"])
def test_unsatisfiable_catom_compiles_to_unsatisfiable_cnf(method):
    assert compiled_models(compile_theory(single(CAtom((A, B), 3, 3)), method)) == set()


@pytest.mark.parametrize("method", ["uc", "bc"])
def test_both_of_two(method):
    compiled = compile_theory(single(CAtom((A, B), lower=2)), method)
    assert compiled_models(compiled) == {(True, True)}


@pytest.mark.parametrize("method", ["uc", "bc"])
def test_exactly_one_of_two(method):
    compiled = compile_theory(single(CAtom((A, B), 1, 1)), method)
    assert compiled_models(compiled) == {(True, False), (False, True)}


@pytest.mark.parametrize("method", ["uc", "bc"])
def test_propositional_theory_is_unchanged(method):
    t = Theory(3, (Clause.of(1, -2), Clause.of(3)))
    compiled = compile_theory(t, method)
    assert compiled.clauses == ((1, -2), (3,))
    assert compiled.num_atoms == 3
    assert len(compiled.atom_map) == 0


@pytest.mark.parametrize("method", ["uc", "bc"])
def test_auxiliary_atoms_are_contiguous_and_described(method, k3):
    compiled = compile_theory(encode_coloring(k3, 3), method)
    aux = [atom for atom, _ in compiled.atom_map.items()]
    assert aux == list(range(compiled.original_atoms + 1, compiled.num_atoms + 1))
    assert compiled.stats.aux_atoms == len(aux) > 0
    assert all(compiled.atom_map[a].clause_index < 3 for a in aux)


def all_models(compiled: CompiledCnf) -> list[list[int]]:
    """Every model over all atoms, auxiliary ones included."""
    found = []
    with solvers.Minisat22(bootstrap_with=[list(cl) for cl in compiled.clauses]) as oracle:
        while oracle.solve():
            model = oracle.get_model()
            found.append(model)
            oracle.add_clause([-lit for lit in model])
    return found


@pytest.mark.parametrize("n", range(1, 7))
def test_unary_counter_atoms_track_prefix_counts(n):
    atoms = tuple(range(1, n + 1))
    for k in range(n + 1):
        for m in range(k, n + 1):
            if (k, m) == (0, n):
                continue
            compiled = compile_uc(single(CAtom(atoms, k, m)))
            counters = {}
            for atom, aux in compiled.atom_map.items():
                found = re.fullmatch(r"b\[(\d+),(\d+)\]", aux.label)
                if found:
                    counters[atom] = (int(found[1]), int(found[2]))
            models = all_models(compiled)
            assert len(models) == sum(math.comb(n, t) for t in range(k, m + 1))
            for model in models:
                bits = [lit > 0 for lit in model[:n]]
                for atom, (i, j) in counters.items():
                    assert (model[atom - 1] > 0) == (sum(bits[:i]) >= j), (k, m, i, j)


def test_projection_accepts_solver_literal_lists(k3):
    compiled = compile_uc(encode_coloring(k3, 3))
    sigma = project(compiled, [1, -2, -3, -4, 5, -6, -7, -8, 9, compiled.num_atoms])
    assert sigma.num_atoms == 9
    assert sigma.true_atoms() == [1, 5, 9]


# =========================
# Output size
# =========================

FAMILY = [4, 8, 16, 32, 64, 128, 256]


@functools.cache
def _family_counts(compiler) -> tuple[int, ...]:
    return tuple(compiler(single(CAtom(tuple(range(1, 2 * r + 1)), r, r))).stats.clauses for r in FAMILY)


def test_unary_counter_size_is_linear_in_bound_times_size():
    ratios = [count / (r * 2 * r) for r, count in zip(FAMILY, _family_counts(compile_uc))]
    assert max(ratios) <= 1.25 * min(ratios)


def test_binary_counter_size_is_logarithmic_in_bound():
    ratios = [count / (2 * r * math.log2(r + 1)) for r, count in zip(FAMILY, _family_counts(compile_bc))]
    assert max(ratios) <= 1.25 * ratios[0]


def test_binary_counter_beats_unary_on_large_bounds():
    uc, bc = _family_counts(compile_uc)[-1], _family_counts(compile_bc)[-1]
    assert bc < uc
