"""scikit-learn style wrapper around the ranking methods.

A ranking problem is a single structured object rather than a feature
matrix, so ``fit`` takes the problem itself; hyper-parameters follow the
usual ``get_params``/``set_params`` conventions and fitted state ends in ``_``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .bvn import MatcherStrategy
from .core import RankingProblem
from .exceptions import ProblemError
from .fairopt import ItemConstraint
from .functions import ConcaveFn, parse_concave
from .metrics import evaluate, marginal_matrix
from .policies import METHODS, run_method


def check_problem(problem) -> RankingProblem:
    if not isinstance(problem, RankingProblem):
        raise ProblemError(f"expected a RankingProblem, got {type(problem).__name__}")
    return problem


def _fn(v) -> ConcaveFn:
    return v if isinstance(v, ConcaveFn) else parse_concave(v)


class TSFDRanker(BaseEstimator):
    """Learn a stochastic ranking policy for one ranking problem.

    Parameters
    ----------
    method : {"tsfd", "utility", "userfair", "itemfair", "diversity"}
    f, g : ConcaveFn or str
        User-fairness and diversity functions, e.g. ``"log:-0.6"``.
    item_constraint : {"none", "one_sided", "two_sided"}
        Constraint used by ``tsfd``; ``itemfair`` is always one-sided.
    matcher : str
        Decomposition strategy (``lsi``, ``lsni``, ``es0``..``es3``, ``utility``).
    merit : dict, optional
        Per-item-group merit replacing average relevance.
    """

    def __init__(
        self,
        method="tsfd",
        f="log:-0.6",
        g="log:0.0001",
        item_constraint="one_sided",
        matcher="lsi",
        merit=None,
        max_iter=2000,
        gap_tol=1e-6,
        random_state=0,
    ):
        self.method = method
        self.f = f
        self.g = g
        self.item_constraint = item_constraint
        self.matcher = matcher
        self.merit = merit
        self.max_iter = max_iter
        self.gap_tol = gap_tol
        self.random_state = random_state

    def fit(self, problem, y=None):
        problem = check_problem(problem)
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        run = run_method(
            problem,
            self.method,
            f=_fn(self.f),
            g=_fn(self.g),
            strategy=MatcherStrategy.parse(self.matcher),
            item_constraint=ItemConstraint(self.item_constraint),
            merit=self.merit,
            max_iterations=self.max_iter,
            duality_gap_tol=self.gap_tol,
            seed=self.random_state,
        )
        self.problem_ = problem
        self.policy_ = run.policy
        self.solve_result_ = run.solve
        self.sigma_ = marginal_matrix(run.policy, problem.n)
        return self

    def predict(self, problem=None):
        """Item indices in rank order for the most probable ranking."""
        check_is_fitted(self, "policy_")
        self._check_same(problem)
        best = int(np.argmax(self.policy_.weights))
        return np.array(self.policy_.rankings[best].order)

    def sample(self, size=None, random_state=None):
        check_is_fitted(self, "policy_")
        return self.policy_.sample(size, random_state)

    def score(self, problem=None, y=None):
        """Expected utility of the fitted policy."""
        return self.report(problem).utility

    def report(self, problem=None):
        check_is_fitted(self, "policy_")
        self._check_same(problem)
        return evaluate(self.problem_, self.policy_, _fn(self.f), _fn(self.g), self.merit)

    def _check_same(self, problem):
        if problem is not None and check_problem(problem) != self.problem_:
            raise ProblemError("a fitted policy only applies to the problem it was fitted on")
