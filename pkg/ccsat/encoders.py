"""Problem encodings: graph coloring, vertex cover and open latin squares.

Atom numbering is fixed so decoders are deterministic:

    coloring   c_{i,j}   -> (i-1)*k + j
    cover      in_i      -> i
    latin      a_{i,j,k} -> ((i-1)*n + (j-1))*n + k

Generators plant a hidden witness, so their instances are satisfiable by
construction; ``gen_random_graph`` is the exception (uniform distinct edges,
no guarantee).
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from ccsat.errors import GeneratorError, TheoryError, ValidationFailed
from ccsat.formats import GraphInstance, LatinInstance
from ccsat.theory import Assignment, CAtom, Clause, Theory

logger = logging.getLogger(__name__)


# =========================
# Solutions (values only)
# =========================


@dataclass(frozen=True)
class ColoringSolution:
    colors: tuple[int, ...]  # colors[v-1] in 1..k

    def color_of(self, vertex: int) -> int:
        return self.colors[vertex - 1]


@dataclass(frozen=True)
class CoverSolution:
    chosen: frozenset[int]


@dataclass(frozen=True, eq=False)
class LatinSolution:
    square: np.ndarray  # order x order, entries 1..order

    @property
    def order(self) -> int:
        return int(self.square.shape[0])

    def __eq__(self, other: object) -> bool:
        return isinstance(other, LatinSolution) and np.array_equal(self.square, other.square)


# =========================
# Atom numbering
# =========================


def coloring_atom(k: int, vertex: int, color: int) -> int:
    return (vertex - 1) * k + color


def latin_atom(n: int, i: int, j: int, k: int) -> int:
    return ((i - 1) * n + (j - 1)) * n + k


# =========================
# Encoders
# =========================


# [WHAT]
def encode_coloring(g: GraphInstance, k: int) -> Theory:
    """col(G, k): one exactly-one c-atom per vertex, then one clause per edge and color."""
    if k < 1:
        raise TheoryError(f"need at least one color, got {k}")
    n = g.num_vertices
    clauses = [
        Clause.of(CAtom(tuple(coloring_atom(k, i, j) for j in range(1, k + 1)), 1, 1))
        for i in range(1, n + 1)
    ]
    for p, r in g.edges:
        clauses.extend(
            Clause.of(-coloring_atom(k, p, j), -coloring_atom(k, r, j)) for j in range(1, k + 1)
        )
    names = tuple(f"c_{i}_{j}" for i in range(1, n + 1) for j in range(1, k + 1))
    return Theory(n * k, tuple(clauses), names)


def encode_vertex_cover(g: GraphInstance, k: int) -> Theory:
    """vc(G, k): at most ``k`` chosen vertices, and every edge has a chosen end."""
    if k < 0:
        raise TheoryError(f"cover size must be non-negative, got {k}")
    n = g.num_vertices
    clauses = [Clause.of(CAtom(tuple(range(1, n + 1)), upper=k))]
    clauses.extend(Clause.of(p, r) for p, r in g.edges)
    return Theory(n, tuple(clauses), tuple(f"in_{i}" for i in range(1, n + 1)))


def encode_latin(inst: LatinInstance) -> Theory:
    """ls(n, D): givens, exactly one value per cell, each value at most once per row and column."""
    n = inst.order
    span = range(1, n + 1)
    clauses = [Clause.of(latin_atom(n, i, j, k)) for i, j, k in inst.givens]
    clauses.extend(
        Clause.of(CAtom(tuple(latin_atom(n, i, j, k) for k in span), 1, 1)) for i in span for j in span
    )
    clauses.extend(
        Clause.of(CAtom(tuple(latin_atom(n, i, j, k) for j in span), upper=1)) for i in span for k in span
    )
    clauses.extend(
        Clause.of(CAtom(tuple(latin_atom(n, i, j, k) for i in span), upper=1)) for j in span for k in span
    )
    names = tuple(f"a_{i}_{j}_{k}" for i in span for j in span for k in span)
    return Theory(n**3, tuple(clauses), names)


# =========================
# Validators
# =========================


def validate_coloring(g: GraphInstance, k: int, sol: ColoringSolution) -> None:
    if len(sol.colors) != g.num_vertices:
        raise ValidationFailed(f"{len(sol.colors)} colors for {g.num_vertices} vertices")
    for v, c in enumerate(sol.colors, start=1):
        if not 1 <= c <= k:
            raise ValidationFailed(f"vertex {v} has color {c} outside 1..{k}")
    for u, v in g.edges:
        if sol.color_of(u) == sol.color_of(v):
            raise ValidationFailed(f"edge ({u}, {v}) is monochromatic")


def validate_cover(g: GraphInstance, k: int, sol: CoverSolution) -> None:
    if len(sol.chosen) > k:
        raise ValidationFailed(f"cover has {len(sol.chosen)} vertices, allowed {k}")
    if any(not 1 <= v <= g.num_vertices for v in sol.chosen):
        raise ValidationFailed("cover mentions a vertex outside the graph")
    for u, v in g.edges:
        if u not in sol.chosen and v not in sol.chosen:
            raise ValidationFailed(f"edge ({u}, {v}) is not covered")


def validate_latin(inst: LatinInstance, sol: LatinSolution) -> None:
    n = inst.order
    square = sol.square
    if square.shape != (n, n):
        raise ValidationFailed(f"square has shape {square.shape}, expected ({n}, {n})")
    symbols = np.arange(1, n + 1)
    for what, lines in (("row", square), ("column", square.T)):
        ok = (np.sort(lines, axis=1) == symbols).all(axis=1)
        if not ok.all():
            raise ValidationFailed(f"{what} {int(np.argmin(ok)) + 1} is not a permutation of 1..{n}")
    for i, j, k in inst.givens:
        if square[i - 1, j - 1] != k:
            raise ValidationFailed(f"cell ({i}, {j}) holds {square[i - 1, j - 1]}, given {k}")


# =========================
# Decoders
# =========================


def _model_bits(sigma: Assignment, count: int) -> np.ndarray:
    if sigma.num_atoms < count:
        raise ValidationFailed(f"model covers {sigma.num_atoms} atoms, encoding needs {count}")
    return np.array(sigma.values[1 : count + 1], dtype=bool)


def decode_coloring(g: GraphInstance, k: int, sigma: Assignment) -> ColoringSolution:
    grid = _model_bits(sigma, g.num_vertices * k).reshape(g.num_vertices, k)
    counts = grid.sum(axis=1)
    if (counts != 1).any():
        v = int(np.argmax(counts != 1)) + 1
        raise ValidationFailed(f"vertex {v} has {counts[v - 1]} colors")
    sol = ColoringSolution(tuple(int(c) + 1 for c in grid.argmax(axis=1)))
    validate_coloring(g, k, sol)
    return sol


def decode_cover(g: GraphInstance, k: int, sigma: Assignment) -> CoverSolution:
    bits = _model_bits(sigma, g.num_vertices)
    sol = CoverSolution(frozenset(int(v) + 1 for v in np.flatnonzero(bits)))
    validate_cover(g, k, sol)
    return sol


def decode_latin(inst: LatinInstance, sigma: Assignment) -> LatinSolution:
    n = inst.order
    cube = _model_bits(sigma, n**3).reshape(n, n, n)
    counts = cube.sum(axis=2)
    if (counts != 1).any():
        i, j = np.argwhere(counts != 1)[0]
        raise ValidationFailed(f"cell ({i + 1}, {j + 1}) holds {counts[i, j]} values")
    sol = LatinSolution(cube.argmax(axis=2) + 1)
    validate_latin(inst, sol)
    return sol


# =========================
# Generators
# =========================


PairFilter = Callable[[np.ndarray, np.ndarray], np.ndarray]


def _sample_pairs(
    rng: np.random.Generator, n: int, keep: PairFilter | None, edges: int, what: str
) -> GraphInstance:
    """Sample ``edges`` distinct pairs among those ``keep`` selects from the upper triangle."""
    if n < 0 or edges < 0:
        raise GeneratorError("vertex and edge counts must be non-negative")
    us, vs = np.triu_indices(n, k=1)
    if keep is not None:
        mask = keep(us, vs)
        us, vs = us[mask], vs[mask]
    if edges > us.size:
        raise GeneratorError(f"{edges} edges requested, only {us.size} {what} pairs exist")
    picked = np.sort(rng.choice(us.size, size=edges, replace=False))
    return GraphInstance(n, tuple(zip((us[picked] + 1).tolist(), (vs[picked] + 1).tolist())))


# [WHAT] seeded, so repeatable
def gen_random_graph(n: int, edges: int, seed: int) -> GraphInstance:
    """Uniform over graphs with ``n`` vertices and ``edges`` distinct edges."""
    return _sample_pairs(np.random.default_rng(seed), n, None, edges, "vertex")


def plant_coloring(n: int, k: int, edges: int, seed: int) -> tuple[GraphInstance, ColoringSolution]:
    """Graph with only cross-class edges over ``k`` contiguous near-equal classes."""
    if k < 1:
        raise GeneratorError(f"need at least one color class, got {k}")
    classes = (np.arange(n) * k) // max(n, 1)
    g = _sample_pairs(
        np.random.default_rng(seed), n, lambda u, v: classes[u] != classes[v], edges, "cross-class"
    )
    witness = ColoringSolution(tuple(int(c) + 1 for c in classes))
    logger.debug("planted %d-coloring on %d vertices, %d edges", k, n, g.num_edges)
    return g, witness


def plant_cover(n: int, cover_size: int, edges: int, seed: int) -> tuple[GraphInstance, CoverSolution]:
    """Graph whose every edge touches a hidden cover of ``cover_size`` vertices."""
    if not 0 <= cover_size <= n:
        raise GeneratorError(f"cover size {cover_size} outside 0..{n}")
    rng = np.random.default_rng(seed)
    hidden = np.zeros(n, dtype=bool)
    hidden[rng.choice(n, size=cover_size, replace=False)] = True
    g = _sample_pairs(rng, n, lambda u, v: hidden[u] | hidden[v], edges, "cover-touching")
    return g, CoverSolution(frozenset(int(v) + 1 for v in np.flatnonzero(hidden)))


def random_latin_square(n: int, rng: np.random.Generator) -> np.ndarray:
    """Cyclic square with its rows, columns and symbols randomly permuted."""
    base = (np.arange(n)[:, None] + np.arange(n)[None, :]) % n
    base = base[rng.permutation(n)][:, rng.permutation(n)]
    return rng.permutation(n)[base] + 1


def plant_latin(n: int, givens: int, seed: int) -> tuple[LatinInstance, LatinSolution]:
    if n < 1:
        raise GeneratorError(f"latin square order must be positive, got {n}")
    if not 0 <= givens <= n * n:
        raise GeneratorError(f"{givens} givens requested for {n * n} cells")
    rng = np.random.default_rng(seed)
    square = random_latin_square(n, rng)
    cells = np.sort(rng.choice(n * n, size=givens, replace=False))
    revealed = tuple((int(c) // n + 1, int(c) % n + 1, int(square.flat[c])) for c in cells)
    return LatinInstance(n, revealed), LatinSolution(square)


def gen_planted_coloring_graph(n: int, k: int, edges: int, seed: int) -> GraphInstance:
    return plant_coloring(n, k, edges, seed)[0]


def gen_planted_cover_graph(n: int, cover_size: int, edges: int, seed: int) -> GraphInstance:
    return plant_cover(n, cover_size, edges, seed)[0]


def gen_latin_instance(n: int, givens: int, seed: int) -> LatinInstance:
    return plant_latin(n, givens, seed)[0]

