"""Deterministic diversity-maximizing rankings.

Ranking diversity is monotone submodular in the set of (item, position)
assignments, and a ranking is a common independent set of two partition
matroids (each item once, each position once).  Greedy selection therefore
achieves at least a third of the optimum.
"""

from __future__ import annotations

import itertools

import numpy as np

from .core import Ranking, RankingProblem, population_intent
from .exceptions import InstanceTooLarge
from .functions import ConcaveFn

BRUTE_FORCE_MAX_N = 7


def _fill(n: int, placed: dict) -> Ranking:
    """Complete a partial item->position map; leftover items go, by id, to leftover positions."""
    free_items = [m for m in range(n) if m not in placed]
    free_pos = sorted(set(range(n)) - set(placed.values()))
    pos = dict(placed)
    pos.update(zip(free_items, free_pos))
    return Ranking(tuple(pos[m] for m in range(n)))


def greedy_with_gains(problem: RankingProblem, g: ConcaveFn) -> tuple[Ranking, list]:
    """Greedy ranking plus the marginal diversity gain of every selection."""
    R = problem.relevance
    e = problem.exposure
    pop = population_intent(problem)
    n = problem.n
    g.check_domain(np.zeros(1), "zero intent utility")
    exposed = np.flatnonzero(e > 0)
    U = np.zeros(len(problem.intents))
    base = float(pop @ g(U))
    free_items = np.ones(n, dtype=bool)
    free_pos = np.zeros(n, dtype=bool)
    free_pos[exposed] = True
    placed: dict = {}
    gains = []
    for _ in range(len(exposed)):
        ks = np.flatnonzero(free_pos)
        ms = np.flatnonzero(free_items)
        # candidate utilities [position, item, intent]
        cand = U + e[ks][:, None, None] * R[ms][None, :, :]
        vals = g(cand) @ pop
        gain = vals - base
        a, b = np.unravel_index(int(np.argmax(gain)), gain.shape)
        k, m = int(ks[a]), int(ms[b])
        placed[m] = k
        gains.append(float(gain[a, b]))
        U = cand[a, b]
        base = float(vals[a, b])
        free_items[m] = False
        free_pos[k] = False
    return _fill(n, placed), gains


def greedy_diverse_ranking(problem: RankingProblem, g: ConcaveFn) -> Ranking:
    """Greedily pick the (item, position) pair of largest diversity gain.

    Positions without exposure never change diversity; they are filled at
    the end with the remaining items in item order.  Ties go to the lower
    position, then the lower item index.
    """
    return greedy_with_gains(problem, g)[0]


def brute_force_diverse_ranking(problem: RankingProblem, g: ConcaveFn) -> Ranking:
    """Most diverse ranking by enumerating the items placed at exposed positions."""
    n = problem.n
    if n > BRUTE_FORCE_MAX_N:
        raise InstanceTooLarge(f"brute force limited to n <= {BRUTE_FORCE_MAX_N}")
    R = problem.relevance
    e = problem.exposure
    pop = population_intent(problem)
    g.check_domain(np.zeros(1), "zero intent utility")
    exposed = np.flatnonzero(e > 0)
    heads = np.array(list(itertools.permutations(range(n), len(exposed))), dtype=int).reshape(
        -1, len(exposed)
    )
    U = np.einsum("k,hki->hi", e[exposed], R[heads]) if len(exposed) else np.zeros((1, R.shape[1]))
    vals = g(U) @ pop
    best = heads[int(np.argmax(vals))] if len(exposed) else ()
    return _fill(n, {int(m): int(k) for m, k in zip(best, exposed)})
