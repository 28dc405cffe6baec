from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
import pytest

from ccsat import settings as cfg
from ccsat.cnf import Cnf, project
from ccsat.compilers import compile_basic
from ccsat.encoders import decode_coloring, encode_coloring, encode_latin, plant_coloring
from ccsat.errors import NotSimpleError, TheoryError
from ccsat.formats import GraphInstance, LatinInstance
from ccsat.solvers import (
    DoubleFlip,
    Outcome,
    SearchState,
    SolveResult,
    SolverConfig,
    SolverKind,
    TheoryIndex,
    df_initial,
    df_wsat,
    falsecount,
    generic_wsat,
    single_flip,
    solve,
    try_rng,
    vb_breakcount,
    vb_wsat,
    virtual_unsat_count,
    wsat_cnf,
)
from ccsat.theory import (
    Assignment,
    CAtom,
    Clause,
    SimplePartition,
    Theory,
    classify_simple,
    eval_clause,
    eval_theory,
    true_count,
)
from tests.randomgen import cnf_clause_table, random_simple_theory, random_theory, truth_table

A, B, C, D = 1, 2, 3, 4


def state_of(t: Theory, *values: bool) -> SearchState:
    return SearchState(TheoryIndex(t), Assignment(values))


def double_flip(t: Theory, *values: bool, joint: bool = False) -> tuple[DoubleFlip, SearchState]:
    index = TheoryIndex(t)
    partition = classify_simple(index.theory)
    assert isinstance(partition, SimplePartition)
    return DoubleFlip(partition, index, joint=joint), SearchState(index, Assignment(values))


# =========================
# Counting
# =========================


@pytest.mark.parametrize(
    ("c", "t", "expected"),
    [
        (CAtom((A, B, C), 1, 1), 3, 3),
        (CAtom((A, B, C), 1, 1), 1, 0),
        (CAtom((A, B), upper=0), 1, 1),
        (CAtom((A, B, C), lower=2), 0, 3),
    ],
)
def test_falsecount(c, t, expected):
    assert falsecount(c, t) == expected


def test_falsecount_rejects_impossible_true_count():
    with pytest.raises(ValueError):
        falsecount(CAtom((A, B), 1, 1), 3)


def test_falsecount_is_exact_on_huge_expansions():
    c = CAtom(tuple(range(1, 201)), upper=103)
    assert falsecount(c, 150) == math.comb(150, 104) > 2**64


def test_virtual_unsat_count_examples():
    exactly_one = Clause.of(CAtom((A, B, C), 1, 1))
    t = Theory(3, (exactly_one,))
    assert virtual_unsat_count(exactly_one, state_of(t, True, True, True)) == 3
    assert virtual_unsat_count(exactly_one, state_of(t, False, True, False)) == 0

    q = 3
    d = Clause.of(CAtom((A, B), 1, 1), q)
    assert virtual_unsat_count(d, state_of(Theory(3, (d,)), True, True, False)) == 1


def test_vb_breakcount_examples():
    t = Theory(4, (Clause.of(CAtom((A, B, C), 1, 1)),))
    state = state_of(t, True, False, False, False)
    assert vb_breakcount(state, B) == 1
    assert vb_breakcount(state, D) == 0


def _expected_breaks(t: Theory) -> np.ndarray:
    """``out[row, a-1]``: expansion clauses true at ``row`` and false once atom ``a`` flips."""
    table = truth_table(t.num_atoms)
    holds = cnf_clause_table(table, compile_basic(t).clauses)
    rows = np.arange(table.shape[0])
    out = np.zeros(table.shape, dtype=np.int64)
    for a in range(t.num_atoms):
        out[:, a] = (holds & ~holds[rows ^ (1 << a)]).sum(axis=1)
    return out


def test_vb_breakcount_matches_explicit_expansion():
    rng = np.random.default_rng(31)
    for _ in range(500):
        t = random_theory(rng, max_atoms=10, max_clauses=5, max_size=5)
        expected = _expected_breaks(t)
        state = SearchState(TheoryIndex(t), Assignment.all_false(t.num_atoms))
        atoms = range(1, t.num_atoms + 1)
        for i in range(1 << t.num_atoms):
            row = i ^ (i >> 1)
            got = [vb_breakcount(state, a) for a in atoms]
            assert got == expected[row].tolist(), (str(t.clauses), row)
            step = (i + 1) & -(i + 1)
            if step < 1 << t.num_atoms:
                state.flip(step.bit_length())
        assert state.check()


def test_search_state_tracks_unsatisfied_clauses():
    rng = np.random.default_rng(17)
    for _ in range(50):
        t = random_theory(rng, max_atoms=8)
        index = TheoryIndex(t)
        state = SearchState(index, Assignment((rng.random(t.num_atoms) < 0.5).tolist()))
        for a in rng.integers(1, t.num_atoms + 1, size=40):
            state.flip(int(a))
            unsat = {ci for ci, cl in enumerate(index.theory.clauses) if not eval_clause(cl, state.sigma)}
            assert set(state.unsat) == unsat
        assert state.check()


def test_search_state_rejects_wrong_width():
    with pytest.raises(ValueError):
        state_of(Theory(3), True)


# =========================
# Double flips
# =========================


def test_df_flip_keeps_exactly_two_of_four():
    df, state = double_flip(Theory(4, (Clause.of(CAtom((A, B, C, D), 2, 2)),)), True, True, False, False)
    df.flip(state, A, np.random.default_rng(0))
    assert not state.sigma[A]
    assert state.sigma[B]
    assert state.sigma[C] != state.sigma[D]
    assert true_count(CAtom((A, B, C, D), 2, 2), state.sigma) == 2


def test_df_flip_forced_companion():
    df, state = double_flip(Theory(3, (Clause.of(CAtom((A, B, C), 1, 1)),)), True, False, False)
    df.flip(state, B, np.random.default_rng(0))
    assert state.sigma.true_atoms() == [B]


def test_df_flip_outside_cardinality_clauses_is_single():
    t = Theory(4, (Clause.of(CAtom((A, B, C), 1, 1)), Clause.of(D)))
    df, state = double_flip(t, True, False, False, False)
    df.flip(state, D, np.random.default_rng(0))
    assert state.sigma.true_atoms() == [A, D]


def test_df_flip_prefers_companion_that_breaks_nothing():
    # a going true would falsify (-a or d); b breaks nothing
    t = Theory(4, (Clause.of(CAtom((A, B, C), 1, 1)), Clause.of(-A, D)))
    index = TheoryIndex(t)
    df = DoubleFlip(classify_simple(t), index)
    for seed in range(20):
        state = SearchState(index, Assignment((False, False, True, False)))
        df.flip(state, C, np.random.default_rng(seed))
        assert state.sigma.true_atoms() == [B]


def test_df_breakcount_examples():
    df, state = double_flip(Theory(2, (Clause.of(A, B),)), True, False)
    assert df.breakcount(state, A) == 1
    assert df.breakcount(state, B) == 0

    t = Theory(4, (Clause.of(CAtom((A, B, C), 1, 1)), Clause.of(D)))
    df, state = double_flip(t, True, False, False, True)
    assert df.breakcount(state, A) == 0


def test_df_breakcount_matches_recount_on_cnf_part():
    rng = np.random.default_rng(23)
    for _ in range(100):
        t = random_simple_theory(rng)
        index = TheoryIndex(t)
        partition = classify_simple(index.theory)
        df = DoubleFlip(partition, index)
        state = SearchState(index, df.initial(rng))
        cnf_part = [index.theory.clauses[ci] for ci in partition.tcnf]
        for x in range(1, t.num_atoms + 1):
            before = [eval_clause(cl, state.sigma) for cl in cnf_part]
            after_sigma = state.sigma.copy()
            after_sigma.flip(x)
            after = [eval_clause(cl, after_sigma) for cl in cnf_part]
            assert df.breakcount(state, x) == sum(b and not a for b, a in zip(before, after))


def test_joint_breakcount_charges_the_cheapest_companion():
    E = 5
    t = Theory(5, (Clause.of(CAtom((A, B, C), 1, 1)), Clause.of(-B, D), Clause.of(-C, D), Clause.of(-C, E)))
    values = (True, False, False, False, False)
    single, state = double_flip(t, *values)
    assert single.breakcount(state, A) == 0
    joint, state = double_flip(t, *values, joint=True)
    assert joint.breakcount(state, A) == 1
    assert joint.breakcount(state, D) == 0


def test_joint_breakcount_matches_recount_of_both_flips():
    rng = np.random.default_rng(29)
    guarded = 0
    for _ in range(100):
        t = random_simple_theory(rng)
        index = TheoryIndex(t)
        partition = classify_simple(index.theory)
        df = DoubleFlip(partition, index, joint=True)
        state = SearchState(index, df.initial(rng))
        cnf_part = [index.theory.clauses[ci] for ci in partition.tcnf]
        before = [eval_clause(cl, state.sigma) for cl in cnf_part]

        def broken_by(*atoms: int) -> int:
            sigma = state.sigma.copy()
            for atom in atoms:
                sigma.flip(atom)
            return sum(b and not eval_clause(cl, sigma) for b, cl in zip(before, cnf_part))

        for x in range(1, t.num_atoms + 1):
            owner = next((c for _, c in partition.tcc if x in c.atoms), None)
            alone = state.sigma.copy()
            alone.flip(x)
            if owner is None or owner.holds(true_count(owner, alone)):
                assert df.breakcount(state, x) == broken_by(x)
                continue
            guarded += 1
            companions = [b for b in owner.atoms if state.sigma[b] != state.sigma[x]]
            assert df.breakcount(state, x) == min(broken_by(x, b) for b in companions)
    assert guarded > 0


def test_double_flips_never_falsify_cardinality_clauses():
    rng = np.random.default_rng(42)
    flips = 0
    while flips < 100_000:
        t = random_simple_theory(rng, groups=int(rng.integers(1, 5)))
        index = TheoryIndex(t)
        partition = classify_simple(index.theory)
        assert isinstance(partition, SimplePartition)
        df = DoubleFlip(partition, index, joint=bool(rng.random() < 0.5))
        state = SearchState(index, df.initial(rng))
        for a in rng.integers(1, t.num_atoms + 1, size=1000):
            df.flip(state, int(a), rng)
            for _, c in partition.tcc:
                assert c.effective_lower <= true_count(c, state.sigma) <= c.effective_upper
        flips += 1000
        assert state.check()


def test_df_initial_draws_cardinalities_uniformly():
    partition = classify_simple(Theory(5, (Clause.of(CAtom((1, 2, 3, 4, 5), upper=2)),)))
    rng = np.random.default_rng(3)
    counts = np.bincount([len(df_initial(partition, rng).true_atoms()) for _ in range(10_000)], minlength=4)
    assert counts[3] == 0
    assert all(3000 < n < 3700 for n in counts[:3])


def test_df_initial_exactly_one_is_uniform():
    partition = classify_simple(Theory(3, (Clause.of(CAtom((A, B, C), 1, 1)),)))
    rng = np.random.default_rng(4)
    picks = [df_initial(partition, rng).true_atoms() for _ in range(6000)]
    assert all(len(p) == 1 for p in picks)
    counts = np.bincount([p[0] for p in picks], minlength=4)[1:]
    assert all(1800 < n < 2200 for n in counts)


def test_df_initial_refuses_empty_cardinality_range():
    partition = classify_simple(Theory(4, (Clause.of(CAtom((A, B, C, D), 3, 2)),)))
    assert isinstance(partition, SimplePartition)
    with pytest.raises(TheoryError):
        df_initial(partition, np.random.default_rng(0))


# =========================
# Generic WSAT and its instantiations
# =========================


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(noise_p=1.5)
    with pytest.raises(ValueError):
        SolverConfig(max_tries=0)
    with pytest.raises(ValueError):
        SolverConfig(seed=-1)


def test_result_has_model_exactly_when_found():
    with pytest.raises(ValueError):
        SolveResult(Outcome.MODEL_FOUND, None, 1, 0, 0.0)


def test_try_streams_depend_on_seed_and_try_only():
    def draw(seed: int, k: int) -> list[int]:
        return try_rng(seed, k).integers(2**32, size=4).tolist()

    assert draw(5, 0) == draw(5, 0)
    assert draw(5, 0) != draw(5, 1)
    assert draw(5, 0) != draw(6, 0)


def test_satisfied_start_returns_before_any_flip(quick_config):
    t = Theory(2, (Clause.of(A),))
    result = generic_wsat(t, quick_config, single_flip, vb_breakcount, lambda rng: Assignment((True, False)))
    assert result.found
    assert (result.tries_used, result.flips_used) == (1, 0)


@pytest.mark.parametrize("kind", [SolverKind.VB, SolverKind.DF])
def test_k3_three_coloring(kind, k3, quick_config):
    t = encode_coloring(k3, 3)
    result = solve(t, replace(quick_config, solver=kind))
    assert result.found
    assert eval_theory(t, result.model)
    assert sorted(decode_coloring(k3, 3, result.model).colors) == [1, 2, 3]


def test_compiled_k3_through_cnf_walksat(k3, quick_config):
    compiled = compile_basic(encode_coloring(k3, 3))
    result = wsat_cnf(compiled.cnf, quick_config)
    assert result.found
    decode_coloring(k3, 3, project(compiled, result.model))


def test_contradiction_uses_whole_budget():
    config = SolverConfig(max_tries=3, max_flips=50, seed=1, solver=SolverKind.WSAT)
    result = solve(Cnf(1, ((1,), (-1,))), config)
    assert result.outcome is Outcome.UNKNOWN
    assert result.model is None
    assert (result.tries_used, result.flips_used) == (3, 150)


def test_empty_clause_skips_search(quick_config):
    result = wsat_cnf(Cnf(2, ((1, 2), ())), quick_config)
    assert not result.found
    assert (result.tries_used, result.flips_used) == (0, 0)


def test_unsatisfiable_theory_reports_unknown():
    t = Theory(3, (Clause.of(CAtom((A, B, C), 1, 1)), Clause.of(A), Clause.of(B)))
    seen: list[bool] = []
    config = SolverConfig(max_tries=2, max_flips=200, seed=9)
    result = vb_wsat(t, config, observer=lambda state, a: seen.append(state.check()))
    assert not result.found
    assert result.flips_used == 400
    assert len(seen) == 400 and all(seen)


@pytest.mark.parametrize("kind", [SolverKind.VB, SolverKind.DF])
def test_deadline_stops_search_at_a_flip_batch(kind):
    k4 = GraphInstance(4, ((1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)))
    config = SolverConfig(max_tries=10**6, max_flips=10**6, seed=2, solver=kind, timeout_s=0.2)
    result = solve(encode_coloring(k4, 3), config)
    assert result.timed_out
    assert result.outcome is Outcome.UNKNOWN
    assert result.flips_used > 0
    assert result.flips_used % cfg.FLIP_BATCH == 0
    assert 0.2 <= result.elapsed < 0.2 + 1.0


@pytest.mark.parametrize("kind", [SolverKind.VB, SolverKind.DF])
def test_same_seed_same_trace(kind):
    g, _ = plant_coloring(30, 3, 60, seed=8)
    t = encode_coloring(g, 3)
    config = SolverConfig(max_tries=5, max_flips=5000, noise_p=0.4, seed=123, solver=kind)
    runs = []
    for _ in range(2):
        trace: list[int] = []
        runner = vb_wsat if kind is SolverKind.VB else df_wsat
        result = runner(t, config, observer=lambda state, a: trace.append(a))
        runs.append((result.outcome, result.model, result.tries_used, result.flips_used, trace))
    assert runs[0] == runs[1]


def test_df_refuses_latin_squares(quick_config):
    with pytest.raises(NotSimpleError) as info:
        df_wsat(encode_latin(LatinInstance(3)), quick_config)
    assert info.value.verdict.condition == 1


def test_wsat_needs_propositional_theory(k3, quick_config):
    with pytest.raises(TheoryError):
        solve(encode_coloring(k3, 3), replace(quick_config, solver=SolverKind.WSAT))


def test_wsat_on_propositional_theory(quick_config):
    t = Theory(3, (Clause.of(A, B), Clause.of(-A), Clause.of(-B, C)))
    result = solve(t, replace(quick_config, solver=SolverKind.WSAT))
    assert result.found
    assert result.model.true_atoms() == [B, C]
