"""The five ranking methods: TSFD Rank and the four single-goal baselines."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .bvn import LSI, MatcherStrategy, decompose
from .core import RankingPolicy, RankingProblem
from .diversity import greedy_diverse_ranking
from .fairopt import FairOptConfig, ItemConstraint, SolveResult, UserFairness, Utility, prp_policy, solve_fair
from .core import RankingPolicy as _Policy
from .functions import ConcaveFn, ShiftedLog

DEFAULT_F = ShiftedLog(-0.6)
DEFAULT_G = ShiftedLog(0.0001)

METHODS = ("tsfd", "utility", "userfair", "itemfair", "diversity")
_BASELINE_ALIASES = {"user_fairness": "userfair", "item_fairness": "itemfair"}


@dataclass
class MethodRun:
    policy: RankingPolicy
    solve: Optional[SolveResult] = None


def run_method(
    problem: RankingProblem,
    method: str,
    f: ConcaveFn = DEFAULT_F,
    g: ConcaveFn = DEFAULT_G,
    strategy: MatcherStrategy = LSI,
    item_constraint=ItemConstraint.ONE_SIDED,
    merit=None,
    max_iterations: int = 2000,
    duality_gap_tol: float = 1e-6,
    seed=0,
) -> MethodRun:
    """Run one method and keep the first-step solver result, if any."""
    method = _BASELINE_ALIASES.get(method, method)
    if isinstance(strategy, str):
        strategy = MatcherStrategy.parse(strategy)
    if method == "utility":
        return MethodRun(prp_policy(problem))
    if method == "diversity":
        return MethodRun(_Policy.deterministic(greedy_diverse_ranking(problem, g)))
    if method == "tsfd":
        objective, constraint = UserFairness(f), item_constraint
    elif method == "userfair":
        objective, constraint = UserFairness(f), ItemConstraint.NONE
    elif method == "itemfair":
        objective, constraint = Utility(), ItemConstraint.ONE_SIDED
    else:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    config = FairOptConfig(
        objective=objective,
        item_constraint=constraint,
        max_iterations=max_iterations,
        duality_gap_tol=duality_gap_tol,
        merit=merit,
    )
    result = solve_fair(problem, config)
    return MethodRun(decompose(problem, result.sigma, g, strategy, seed=seed), result)


def tsfd_rank(
    problem: RankingProblem,
    f: ConcaveFn = DEFAULT_F,
    g: ConcaveFn = DEFAULT_G,
    item_constraint=ItemConstraint.ONE_SIDED,
    strategy: MatcherStrategy = LSI,
    merit=None,
    seed=0,
) -> RankingPolicy:
    """Maximize user fairness under item-fairness constraints, then decompose for diversity."""
    return run_method(
        problem, "tsfd", f, g, strategy, item_constraint=item_constraint, merit=merit, seed=seed
    ).policy


def baseline(
    problem: RankingProblem,
    which: str,
    f: ConcaveFn = DEFAULT_F,
    g: ConcaveFn = DEFAULT_G,
    strategy: MatcherStrategy = LSI,
    merit=None,
    seed=0,
) -> RankingPolicy:
    """Single-goal policy: ``utility``, ``user_fairness``, ``item_fairness`` or ``diversity``."""
    which = _BASELINE_ALIASES.get(which, which)
    if which not in ("utility", "userfair", "itemfair", "diversity"):
        raise ValueError(f"unknown baseline {which!r}")
    return run_method(problem, which, f, g, strategy, merit=merit, seed=seed).policy
