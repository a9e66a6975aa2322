"""Utility, fairness and diversity measures of rankings and ranking policies.

Policy-level quantities that are linear in the marginal rank matrix take a
matrix (``ndarray`` or :class:`DoublyStochasticMatrix`); diversity, which is
not a function of the marginals, takes rankings or policies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .core import (
    DoublyStochasticMatrix,
    Ranking,
    RankingPolicy,
    RankingProblem,
    as_matrix,
    expected_relevance,
    population_intent,
)
from .exceptions import DomainError, InstanceTooLarge, MeritNonPositive, ProblemError
from .functions import ConcaveFn

COVER_EPS = 1e-12
MAX_COVERAGE_INTENTS = 12


def _check_size(problem: RankingProblem, S: np.ndarray) -> np.ndarray:
    if S.shape != (problem.n, problem.n):
        raise ProblemError(f"matrix shape {S.shape} does not match {problem.n} items")
    return S


def item_exposure(problem: RankingProblem, sigma) -> np.ndarray:
    """Expected exposure of every item, ``Sigma @ e``."""
    S = _check_size(problem, as_matrix(sigma))
    return S @ problem.exposure


def marginal_matrix(policy: RankingPolicy, n: int | None = None) -> DoublyStochasticMatrix:
    n = policy.n if n is None else n
    if n != policy.n:
        raise ProblemError(f"policy ranks {policy.n} items, expected {n}")
    S = np.zeros((n, n))
    rows = np.arange(n)
    for r, w in zip(policy.rankings, policy.weights):
        S[rows, r.positions] += w
    return DoublyStochasticMatrix(S, tolerance=1e-6)


def utility(problem: RankingProblem, sigma) -> float:
    return float(expected_relevance(problem) @ item_exposure(problem, sigma))


def group_utility(problem: RankingProblem, sigma, group: str) -> float:
    """Utility of one user group."""
    r = expected_relevance(problem, problem.user_group(group).id)
    return float(r @ item_exposure(problem, sigma))


def group_utilities(problem: RankingProblem, sigma) -> np.ndarray:
    x = item_exposure(problem, sigma)
    return np.array([problem.relevance @ ug.intent_dist @ x for ug in problem.user_groups])


def user_fairness(problem: RankingProblem, sigma, f: ConcaveFn) -> float:
    u = group_utilities(problem, sigma)
    f.check_domain(u, "user-group utility")
    rho = np.array([ug.proportion for ug in problem.user_groups])
    return float(rho @ f(u))


def group_exposure(problem: RankingProblem, sigma, group: str) -> float:
    mask = problem.group_mask(group)
    return float(item_exposure(problem, sigma)[mask].sum() / mask.sum())


def merit(problem: RankingProblem, group: str) -> float:
    """Average population-expected relevance of the items in ``group``."""
    mask = problem.group_mask(group)
    m = float(expected_relevance(problem)[mask].mean())
    if not m > 0:
        raise MeritNonPositive(f"item group {group!r} has merit {m}")
    return m


def merits(problem: RankingProblem, override=None) -> dict:
    if override is not None:
        out = {g: float(override[g]) for g in problem.item_group_ids}
        bad = [g for g, m in out.items() if not m > 0]
        if bad:
            raise MeritNonPositive(f"non-positive merit for {bad}")
        return out
    return {g: merit(problem, g) for g in problem.item_group_ids}


def item_unfairness(problem: RankingProblem, sigma, merit_override=None) -> float:
    """One-sided disparate-treatment violation.

    For each ordered pair with ``M(lo) < M(hi)`` the violation is
    ``max(0, E(hi)/M(hi) - E(lo)/M(lo))``; with more than two groups the
    largest pairwise violation is returned.  Equal merits impose nothing.
    """
    groups = problem.item_group_ids
    if len(groups) < 2:
        return 0.0
    M = merits(problem, merit_override)
    ratio = {g: group_exposure(problem, sigma, g) / M[g] for g in groups}
    worst = 0.0
    for a, b in combinations(groups, 2):
        if M[a] == M[b]:
            continue
        lo, hi = (a, b) if M[a] < M[b] else (b, a)
        worst = max(worst, ratio[hi] - ratio[lo])
    return worst


def item_group_utility(problem: RankingProblem, sigma, group: str) -> float:
    mask = problem.group_mask(group)
    r = expected_relevance(problem) * mask
    return float(r @ item_exposure(problem, sigma))


def ranking_intent_utilities(problem: RankingProblem, ranking: Ranking) -> np.ndarray:
    """Utility of ``ranking`` for every intent."""
    e = problem.exposure[ranking.positions]
    return problem.relevance.T @ e


def ranking_intent_utility(problem: RankingProblem, ranking: Ranking, intent: str) -> float:
    return float(ranking_intent_utilities(problem, ranking)[problem.intents.index(intent)])


def ranking_diversity(problem: RankingProblem, ranking: Ranking, g: ConcaveFn) -> float:
    u = ranking_intent_utilities(problem, ranking)
    g.check_domain(u, "intent utility")
    return float(population_intent(problem) @ g(u))


def policy_diversity(problem: RankingProblem, policy: RankingPolicy, g: ConcaveFn) -> float:
    return math.fsum(
        w * ranking_diversity(problem, r, g) for r, w in zip(policy.rankings, policy.weights)
    )


def diversity_upper_bound(problem: RankingProblem, sigma, g: ConcaveFn) -> float:
    """Diversity bound from moving the expectation over rankings inside ``g``."""
    u = problem.relevance.T @ item_exposure(problem, sigma)
    g.check_domain(u, "intent utility")
    return float(population_intent(problem) @ g(u))


def intent_coverage(problem: RankingProblem, ranking: Ranking) -> float:
    """Population intent mass of the intents with positive utility under ``ranking``."""
    u = ranking_intent_utilities(problem, ranking)
    return float(population_intent(problem)[u > COVER_EPS].sum())


def max_intent_coverage(problem: RankingProblem) -> float:
    """Largest intent coverage of any ranking, by exact search over intent subsets.

    A set of intents is coverable iff some set of at most ``K`` items (``K`` =
    number of positions with positive exposure) is jointly relevant to all of
    them.  The minimal item count per covered-intent set is found by a
    breadth-first search over intent bitmasks, exponential only in the number
    of intents.
    """
    n_int = len(problem.intents)
    if n_int > MAX_COVERAGE_INTENTS:
        raise InstanceTooLarge(f"{n_int} intents > {MAX_COVERAGE_INTENTS}")
    K = int(np.count_nonzero(problem.exposure > 0))
    rel = problem.relevance > 0
    masks = {int(sum(1 << i for i in np.flatnonzero(row))) for row in rel}
    masks.discard(0)
    best_count = {0: 0}
    frontier = [0]
    for depth in range(1, min(K, len(masks)) + 1):
        nxt = []
        for cur in frontier:
            for m in masks:
                new = cur | m
                if new not in best_count:
                    best_count[new] = depth
                    nxt.append(new)
        if not nxt:
            break
        frontier = nxt
    pop = population_intent(problem)
    return max(float(sum(pop[i] for i in range(n_int) if c >> i & 1)) for c in best_count)


def policy_intent_coverage(problem: RankingProblem, policy: RankingPolicy) -> np.ndarray:
    return np.array([intent_coverage(problem, r) for r in policy.rankings])


# -- report --------------------------------------------------------------------


@dataclass
class MetricReport:
    """All headline metrics of one policy on one problem.

    ``user_fairness``, ``diversity`` and ``diversity_ub`` are raw objective
    values; :meth:`scaled` maps them back to the utility scale through the
    inverse of ``f`` and ``g``.
    """

    utility: float
    user_fairness: float
    item_unfairness: float
    diversity: float
    diversity_ub: float
    per_user_group_utility: dict = field(default_factory=dict)
    per_item_group_utility: dict = field(default_factory=dict)
    per_item_group_exposure: dict = field(default_factory=dict)

    def scaled(self, f: ConcaveFn, g: ConcaveFn) -> dict:
        return {
            "utility": self.utility,
            "item_unfairness": self.item_unfairness,
            "user_fairness": float(f.inverse(self.user_fairness)),
            "diversity": float(g.inverse(self.diversity)),
            "diversity_ub": float(g.inverse(self.diversity_ub)),
        }

    def check_invariants(self, f: ConcaveFn, g: ConcaveFn, tol: float = 1e-9) -> list[str]:
        bad = []
        if self.diversity > self.diversity_ub + tol:
            bad.append("diversity exceeds its upper bound")
        if f.inverse(self.user_fairness) > self.utility + tol:
            bad.append("f^-1(user fairness) exceeds utility")
        if g.inverse(self.diversity) > self.utility + tol:
            bad.append("g^-1(diversity) exceeds utility")
        return bad

    def columns(self, f: ConcaveFn, g: ConcaveFn) -> dict:
        """Flat column dict in the fixed CSV order (headline metrics on utility scale)."""
        out = self.scaled(f, g)
        for prefix, d in (
            ("ug_utility", self.per_user_group_utility),
            ("dg_utility", self.per_item_group_utility),
            ("dg_exposure", self.per_item_group_exposure),
        ):
            for k in sorted(d):
                out[f"{prefix}:{k}"] = d[k]
        return out


def evaluate(
    problem: RankingProblem,
    policy: RankingPolicy,
    f: ConcaveFn,
    g: ConcaveFn,
    merit_override=None,
    strict: bool = True,
) -> MetricReport:
    """All metrics of ``policy``.

    With ``strict=False`` an undefined user fairness (some group utility
    outside the domain of ``f``) is reported as NaN instead of raising.
    """
    S = marginal_matrix(policy, problem.n)
    try:
        uf = user_fairness(problem, S, f)
    except DomainError:
        if strict:
            raise
        uf = math.nan
    return MetricReport(
        utility=utility(problem, S),
        user_fairness=uf,
        item_unfairness=item_unfairness(problem, S, merit_override),
        diversity=policy_diversity(problem, policy, g),
        diversity_ub=diversity_upper_bound(problem, S, g),
        per_user_group_utility={
            ug.id: group_utility(problem, S, ug.id) for ug in problem.user_groups
        },
        per_item_group_utility={
            dg: item_group_utility(problem, S, dg) for dg in problem.item_group_ids
        },
        per_item_group_exposure={
            dg: group_exposure(problem, S, dg) for dg in problem.item_group_ids
        },
    )
