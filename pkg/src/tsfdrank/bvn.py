"""Diversity-aware Birkhoff-von Neumann decomposition.

A doubly stochastic matrix is peeled into permutation matrices: at every step
a perfect matching is chosen in the bipartite graph of positive residual
entries, weighted by the smallest residual entry on it, and subtracted.  Which
perfect matching is chosen is where diversity enters; the matchers below
trade search effort for diversity of the extracted rankings.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .core import DoublyStochasticMatrix, Ranking, RankingPolicy, RankingProblem, as_matrix, expected_relevance, population_intent
from .exceptions import DecompositionStalled, NoCompletion, NoPerfectMatching, ProblemError
from .functions import ConcaveFn

EDGE_EPS = 1e-9
INPUT_TOL = 1e-6
REPAIR_TOL = 1e-9
REPAIR_ROUNDS = 50
IMPROVE_EPS = 1e-12
MAX_LEVEL = 3


@dataclass(frozen=True)
class MatchGraph:
    """Bipartite item-position graph; ``allowed[m, k]`` marks a usable edge."""

    allowed: np.ndarray

    @classmethod
    def from_residual(cls, residual: np.ndarray, eps: float = EDGE_EPS) -> "MatchGraph":
        return cls(np.asarray(residual) > eps)

    @classmethod
    def full(cls, n: int) -> "MatchGraph":
        return cls(np.ones((n, n), dtype=bool))

    @property
    def n(self) -> int:
        return self.allowed.shape[0]

    def admits(self, ranking: Ranking) -> bool:
        return bool(self.allowed[np.arange(self.n), ranking.positions].all())


@dataclass(frozen=True)
class MatcherStrategy:
    """How the next permutation is picked during decomposition.

    ``kind`` is ``"lsi"`` (local search from the utility-max matching),
    ``"lsni"`` (local search from a random matching), ``"es"`` (exhaustive
    search over the top ``level`` positions) or ``"utility"`` (utility-max
    matching, no diversity search).
    """

    kind: str = "lsi"
    level: int = 0

    def __post_init__(self):
        if self.kind not in ("lsi", "lsni", "es", "utility"):
            raise ValueError(f"unknown matcher {self.kind!r}")
        if not 0 <= self.level <= MAX_LEVEL:
            raise ValueError(f"exhaustive-search level must be in 0..{MAX_LEVEL}")

    @classmethod
    def parse(cls, name: str) -> "MatcherStrategy":
        name = name.strip().lower()
        if name.startswith("es") and name[2:].isdigit():
            return cls("es", int(name[2:]))
        return cls(name)

    def __str__(self):
        return f"es{self.level}" if self.kind == "es" else self.kind


LSI = MatcherStrategy("lsi")
LSNI = MatcherStrategy("lsni")
UTILITY_ONLY = MatcherStrategy("utility")


def ES(level: int) -> MatcherStrategy:
    return MatcherStrategy("es", level)


# -- diversity evaluation ------------------------------------------------------


class _Diversity:
    """Vectorized ranking diversity for one problem and one ``g``."""

    def __init__(self, problem: RankingProblem, g: ConcaveFn):
        self.R = problem.relevance
        self.e = problem.exposure
        self.pop = population_intent(problem)
        self.g = g

    def of_utilities(self, U: np.ndarray) -> np.ndarray:
        """Diversity for each row of intent utilities; ``-inf`` outside g's domain."""
        U = np.atleast_2d(U)
        ok = np.all(U > self.g.lower, axis=1)
        out = np.full(U.shape[0], -np.inf)
        if ok.any():
            out[ok] = self.g(U[ok]) @ self.pop
        return out

    def utilities(self, pos: np.ndarray) -> np.ndarray:
        return self.R.T @ self.e[pos]

    def __call__(self, pos: np.ndarray) -> float:
        return float(self.of_utilities(self.utilities(pos))[0])


# -- matchings -----------------------------------------------------------------


def _as_graph(graph) -> MatchGraph:
    return graph if isinstance(graph, MatchGraph) else MatchGraph(np.asarray(graph, dtype=bool))


def _assignment(weights: np.ndarray, allowed: np.ndarray) -> np.ndarray:
    cost = np.where(allowed, -weights, np.inf)
    try:
        rows, cols = linear_sum_assignment(cost)
    except ValueError as exc:
        raise NoPerfectMatching("graph has no perfect matching") from exc
    pos = np.empty(len(rows), dtype=int)
    pos[rows] = cols
    return pos


def max_utility_perfect_matching(problem: RankingProblem, graph) -> Ranking:
    """Perfect matching of ``graph`` maximizing population-expected utility."""
    graph = _as_graph(graph)
    W = np.outer(expected_relevance(problem), problem.exposure)
    return Ranking(tuple(_assignment(W, graph.allowed)))


def random_perfect_matching(graph, rng) -> Ranking:
    graph = _as_graph(graph)
    rng = np.random.default_rng(rng)
    return Ranking(tuple(_assignment(rng.random(graph.allowed.shape), graph.allowed)))


def _hopcroft_karp(allowed: np.ndarray) -> np.ndarray:
    """Row-to-column maximum matching (-1 where unmatched)."""
    return maximum_bipartite_matching(csr_matrix(allowed.astype(np.int8)), perm_type="column")


def arbitrary_perfect_matching(graph) -> Ranking:
    graph = _as_graph(graph)
    match = _hopcroft_karp(graph.allowed)
    if np.any(match < 0):
        raise NoPerfectMatching("graph has no perfect matching")
    return Ranking(tuple(int(k) for k in match))


def local_search_match(problem: RankingProblem, g: ConcaveFn, graph, init: Ranking) -> Ranking:
    """Improve ``init`` by diversity-increasing item swaps along graph edges.

    Swaps are scanned in lexicographic item-pair order; the first strictly
    improving one is applied and the scan restarts, until no swap improves.
    """
    graph = _as_graph(graph)
    div = _Diversity(problem, g)
    allowed = graph.allowed
    pos = init.positions.copy()
    if not allowed[np.arange(len(pos)), pos].all():
        raise ProblemError("initial ranking uses edges outside the graph")
    n = len(pos)
    a, b = np.triu_indices(n, 1)
    dR = div.R[a] - div.R[b]
    U = div.utilities(pos)
    cur = float(div.of_utilities(U)[0])
    while True:
        pa, pb = pos[a], pos[b]
        legal = allowed[a, pb] & allowed[b, pa]
        if not legal.any():
            break
        idx = np.flatnonzero(legal)
        # item a moves from pa to pb and item b the other way
        dU = (div.e[pb[idx]] - div.e[pa[idx]])[:, None] * dR[idx]
        vals = div.of_utilities(U + dU)
        better = np.flatnonzero(vals > cur + IMPROVE_EPS)
        if len(better) == 0:
            break
        j = better[0]
        i = idx[j]
        pos[a[i]], pos[b[i]] = pos[b[i]], pos[a[i]]
        U = U + dU[j]
        cur = float(vals[j])
    return Ranking(tuple(pos))


def _top_assignments(allowed: np.ndarray, level: int):
    """All injective assignments of items to positions 0..level-1 along edges."""

    def rec(k, used):
        if k == level:
            yield ()
            return
        for m in np.flatnonzero(allowed[:, k]):
            if m not in used:
                for rest in rec(k + 1, used | {int(m)}):
                    yield (int(m),) + rest

    yield from rec(0, frozenset())


def _complete(allowed: np.ndarray, head: tuple) -> np.ndarray | None:
    n = allowed.shape[0]
    level = len(head)
    sub = allowed.copy()
    sub[list(head), :] = False
    sub[:, :level] = False
    for k, m in enumerate(head):
        sub[m, k] = True
    match = _hopcroft_karp(sub)
    if np.any(match < 0):
        return None
    return np.asarray(match, dtype=int)


def exhaustive_search_match(problem: RankingProblem, g: ConcaveFn, graph, level: int) -> Ranking:
    """Best-diversity perfect matching over all choices for the top ``level`` positions.

    Each feasible assignment of the first ``level`` positions is completed
    to a perfect matching; the most diverse completion wins.  The result of
    ``level - 1`` competes as well, so diversity never decreases with level.
    """
    graph = _as_graph(graph)
    if not 0 <= level <= min(MAX_LEVEL, graph.n):
        raise ValueError(f"level must be in 0..{min(MAX_LEVEL, graph.n)}")
    if level == 0:
        return arbitrary_perfect_matching(graph)
    div = _Diversity(problem, g)
    best = exhaustive_search_match(problem, g, graph, level - 1)
    best_pos, best_val = best.positions, div(best.positions)
    completed = 0
    for head in _top_assignments(graph.allowed, level):
        pos = _complete(graph.allowed, head)
        if pos is None:
            continue
        completed += 1
        val = div(pos)
        if val > best_val + IMPROVE_EPS:
            best_pos, best_val = pos, val
    if completed == 0:
        raise NoCompletion(f"no top-{level} matching extends to a perfect matching")
    return Ranking(tuple(int(k) for k in best_pos))


def _match(problem, g, graph, strategy: MatcherStrategy, rng) -> Ranking:
    if strategy.kind == "utility":
        return max_utility_perfect_matching(problem, graph)
    if strategy.kind == "lsi":
        return local_search_match(problem, g, graph, max_utility_perfect_matching(problem, graph))
    if strategy.kind == "lsni":
        return local_search_match(problem, g, graph, random_perfect_matching(graph, rng))
    return exhaustive_search_match(problem, g, graph, strategy.level)


# -- decomposition -------------------------------------------------------------


def repair(sigma, tol: float = INPUT_TOL) -> np.ndarray:
    """Clip and rebalance a nearly doubly stochastic matrix."""
    S = np.array(as_matrix(sigma), dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ProblemError(f"expected a square matrix, got shape {S.shape}")
    dev = max(np.abs(S.sum(0) - 1).max(), np.abs(S.sum(1) - 1).max(), -S.min(initial=0.0))
    if dev > tol:
        raise ProblemError(f"matrix is not doubly stochastic (deviation {dev:.3g})")
    S = np.clip(S, 0.0, None)
    for _ in range(REPAIR_ROUNDS):
        if max(np.abs(S.sum(0) - 1).max(), np.abs(S.sum(1) - 1).max()) <= REPAIR_TOL:
            break
        S /= S.sum(axis=1, keepdims=True)
        S /= S.sum(axis=0, keepdims=True)
    return S


def decompose(
    problem: RankingProblem,
    sigma,
    g: ConcaveFn,
    strategy: MatcherStrategy = LSI,
    seed=0,
    trace: list | None = None,
) -> RankingPolicy:
    """Decompose ``sigma`` into a ranking policy, choosing diverse rankings first.

    ``seed`` drives the random initial matchings of ``lsni``.  When ``trace``
    is a list, one record per extracted ranking is appended: the ranking, its
    weight, the smallest residual entry on it and whether every edge it uses
    was present in the residual graph.
    """
    if isinstance(strategy, str):
        strategy = MatcherStrategy.parse(strategy)
    S = repair(sigma)
    n = S.shape[0]
    if n != problem.n:
        raise ProblemError(f"matrix size {n} does not match {problem.n} items")
    rng = np.random.default_rng(seed)
    rows = np.arange(n)
    found: dict = {}
    stop_mass = n * 1e-7
    while S.sum() >= stop_mass:
        graph = MatchGraph.from_residual(S)
        try:
            ranking = _match(problem, g, graph, strategy, rng)
        except NoPerfectMatching as exc:
            if S.sum() < 1e-5 * n:
                break
            raise DecompositionStalled(
                f"no perfect matching with residual mass {S.sum():.3g}"
            ) from exc
        pos = ranking.positions
        entries = S[rows, pos]
        w = float(entries.min())
        if trace is not None:
            trace.append(
                {"ranking": ranking, "weight": w, "min_entry": w, "feasible": bool(graph.admits(ranking))}
            )
        if not w > 0:
            raise DecompositionStalled("matcher returned an edge with zero residual")
        S[rows, pos] -= w
        S[int(np.argmin(entries)), pos[int(np.argmin(entries))]] = 0.0
        S[S < EDGE_EPS] = 0.0
        found[ranking] = found.get(ranking, 0.0) + w
    if not found:
        raise DecompositionStalled("nothing to decompose")
    total = sum(found.values())
    return RankingPolicy(tuple(found), tuple(w / total for w in found.values()))


def random_doubly_stochastic(n: int, rng, rounds: int = 1000) -> DoublyStochasticMatrix:
    """Sinkhorn-normalized positive random matrix, for tests and benchmarks."""
    rng = np.random.default_rng(rng)
    S = rng.random((n, n)) + 1e-3
    for _ in range(rounds):
        S /= S.sum(axis=1, keepdims=True)
        S /= S.sum(axis=0, keepdims=True)
        if np.abs(S.sum(axis=1) - 1).max() < 1e-13:
            break
    return DoublyStochasticMatrix(S)
