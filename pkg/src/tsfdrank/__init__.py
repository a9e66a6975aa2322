"""Fair and diverse stochastic ranking for two-sided markets.

Step one maximizes a concave welfare of user-group utilities over marginal
rank matrices, subject to item-group exposure constraints; step two peels
the optimal matrix into rankings, preferring diverse ones.
"""

__version__ = "0.1.0"

from .core import (
    DoublyStochasticMatrix,
    Ranking,
    RankingPolicy,
    RankingProblem,
    UserGroup,
    expected_relevance,
    population_intent,
    validate,
)
from .functions import ConcaveFn, PiecewiseLinear, ShiftedLog, parse_concave
from .fairopt import (
    FairOptConfig,
    ItemConstraint,
    SolveResult,
    UserFairness,
    Utility,
    brute_force_optimum,
    prp_policy,
    solve_fair,
)
from .bvn import ES, LSI, LSNI, UTILITY_ONLY, MatchGraph, MatcherStrategy, decompose
from .diversity import brute_force_diverse_ranking, greedy_diverse_ranking
from .metrics import MetricReport, evaluate, marginal_matrix
from .policies import DEFAULT_F, DEFAULT_G, baseline, tsfd_rank
from .bench import BenchConfig, fixture, generate_universe, sample_problem, apply_bias
from .estimators import TSFDRanker

__all__ = [name for name in dir() if not name.startswith("_")]
