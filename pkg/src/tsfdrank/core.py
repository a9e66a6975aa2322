"""Domain types for two-sided ranking problems and the quantities derived from them."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .exceptions import ProblemError

PROB_TOL = 1e-9


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class UserGroup:
    id: str
    proportion: float
    intent_dist: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "id", str(self.id))
        object.__setattr__(self, "proportion", float(self.proportion))
        object.__setattr__(self, "intent_dist", _frozen(self.intent_dist))

    def __eq__(self, other):
        if not isinstance(other, UserGroup):
            return NotImplemented
        return (
            self.id == other.id
            and self.proportion == other.proportion
            and np.array_equal(self.intent_dist, other.intent_dist)
        )


@dataclass(frozen=True, eq=False)
class RankingProblem:
    """Items, intents, user groups, relevance and position exposure for one query.

    ``relevance[m, i]`` is the relevance of item ``m`` to intent ``i`` and
    ``exposure[k]`` the exposure of rank position ``k`` (0-based).  Arrays are
    copied and made read-only on construction.
    """

    items: tuple
    item_groups: tuple
    intents: tuple
    relevance: np.ndarray
    user_groups: tuple
    exposure: np.ndarray

    def __post_init__(self):
        items = tuple(str(d) for d in self.items)
        groups = tuple(str(g) for g in self.item_groups)
        intents = tuple(str(i) for i in self.intents)
        rel = _frozen(self.relevance)
        exp_ = _frozen(self.exposure)
        ugs = tuple(
            ug if isinstance(ug, UserGroup) else UserGroup(**ug) for ug in self.user_groups
        )
        for name, val in (
            ("items", items),
            ("item_groups", groups),
            ("intents", intents),
            ("relevance", rel),
            ("user_groups", ugs),
            ("exposure", exp_),
        ):
            object.__setattr__(self, name, val)
        n = len(items)
        if n == 0:
            raise ProblemError("problem has no items")
        if len(set(items)) != n:
            raise ProblemError("item ids must be unique")
        if len(groups) != n:
            raise ProblemError("every item needs an item group")
        if not intents or len(set(intents)) != len(intents):
            raise ProblemError("intent ids must be non-empty and unique")
        if rel.shape != (n, len(intents)):
            raise ProblemError(f"relevance shape {rel.shape} != {(n, len(intents))}")
        if not np.all(np.isfinite(rel)) or np.any(rel < 0):
            raise ProblemError("relevance entries must be finite and non-negative")
        if exp_.shape != (n,):
            raise ProblemError(f"exposure must have length {n}")
        if not np.all(np.isfinite(exp_)) or np.any(exp_ < 0):
            raise ProblemError("exposure entries must be finite and non-negative")
        if not exp_.sum() > 0:
            raise ProblemError("total exposure must be positive")
        if np.any(np.diff(exp_) > 0):
            raise ProblemError("exposure must be non-increasing in rank")
        if not ugs:
            raise ProblemError("need at least one user group")
        if len({ug.id for ug in ugs}) != len(ugs):
            raise ProblemError("user group ids must be unique")
        for ug in ugs:
            if not 0 < ug.proportion <= 1:
                raise ProblemError(f"user group {ug.id}: proportion must be in (0, 1]")
            d = ug.intent_dist
            if d.shape != (len(intents),) or np.any(d < 0) or abs(d.sum() - 1) > PROB_TOL:
                raise ProblemError(f"user group {ug.id}: intent_dist is not a probability vector")
        if abs(sum(ug.proportion for ug in ugs) - 1) > PROB_TOL:
            raise ProblemError("user group proportions must sum to 1")

    # -- convenience -------------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.items)

    @property
    def item_group_of(self) -> dict:
        return dict(zip(self.items, self.item_groups))

    @property
    def item_group_ids(self) -> tuple:
        """Item group ids in order of first appearance."""
        return tuple(dict.fromkeys(self.item_groups))

    @property
    def user_group_ids(self) -> tuple:
        return tuple(ug.id for ug in self.user_groups)

    def group_mask(self, group: str) -> np.ndarray:
        if group not in self.item_group_ids:
            raise KeyError(f"unknown item group {group!r}")
        return np.array([g == group for g in self.item_groups])

    def user_group(self, gid: str) -> UserGroup:
        for ug in self.user_groups:
            if ug.id == gid:
                return ug
        raise KeyError(f"unknown user group {gid!r}")

    def replace(self, **changes) -> "RankingProblem":
        fields = dict(
            items=self.items,
            item_groups=self.item_groups,
            intents=self.intents,
            relevance=self.relevance,
            user_groups=self.user_groups,
            exposure=self.exposure,
        )
        fields.update(changes)
        return RankingProblem(**fields)

    def __eq__(self, other):
        if not isinstance(other, RankingProblem):
            return NotImplemented
        return (
            self.items == other.items
            and self.item_groups == other.item_groups
            and self.intents == other.intents
            and self.user_groups == other.user_groups
            and np.array_equal(self.relevance, other.relevance)
            and np.array_equal(self.exposure, other.exposure)
        )

    __hash__ = None  # type: ignore[assignment]


def validate(problem: RankingProblem) -> list[str]:
    """Return the non-degeneracy violations of ``problem`` (empty if non-degenerate)."""
    report = []
    for ug in problem.user_groups:
        if not ug.proportion > 0:
            report.append(f"(1) user group {ug.id} has zero proportion")
    pop = population_intent(problem)
    for i, iid in enumerate(problem.intents):
        if not pop[i] > 0:
            report.append(f"(2) intent {iid} has zero population mass")
        if not np.any(problem.relevance[:, i] > 0):
            report.append(f"(3) intent {iid} has no positively relevant item")
    r_pop = problem.relevance @ pop
    for g in problem.item_group_ids:
        if not np.any(r_pop[problem.group_mask(g)] > 0):
            report.append(f"(4) item group {g} has no item with positive expected relevance")
    return report


def population_intent(problem: RankingProblem) -> np.ndarray:
    """Intent distribution of the whole population, a proportion-weighted mixture."""
    # exact summation keeps the result independent of user-group order
    return np.array(
        [
            math.fsum(ug.proportion * ug.intent_dist[i] for ug in problem.user_groups)
            for i in range(len(problem.intents))
        ]
    )


def expected_relevance(problem: RankingProblem, scope: str = "population") -> np.ndarray:
    """Per-item relevance averaged over the intents of ``scope``.

    ``scope`` is ``"population"``, a user-group id or an intent id (user-group
    ids take precedence over intent ids on a clash).
    """
    if scope == "population":
        return problem.relevance @ population_intent(problem)
    for ug in problem.user_groups:
        if ug.id == scope:
            return problem.relevance @ ug.intent_dist
    if scope in problem.intents:
        return problem.relevance[:, problem.intents.index(scope)].copy()
    raise KeyError(f"unknown scope {scope!r}")


# -- rankings and policies ----------------------------------------------------


@dataclass(frozen=True)
class Ranking:
    """A permutation; ``position_of[m]`` is the 0-based rank of item ``m``."""

    position_of: tuple

    def __post_init__(self):
        pos = tuple(int(p) for p in self.position_of)
        if sorted(pos) != list(range(len(pos))):
            raise ProblemError("ranking is not a permutation")
        object.__setattr__(self, "position_of", pos)

    @classmethod
    def from_order(cls, order: Sequence[int]) -> "Ranking":
        """Build from item indices listed in rank order."""
        pos = [0] * len(order)
        for k, m in enumerate(order):
            pos[m] = k
        return cls(tuple(pos))

    @property
    def order(self) -> tuple:
        out = [0] * len(self.position_of)
        for m, k in enumerate(self.position_of):
            out[k] = m
        return tuple(out)

    @property
    def positions(self) -> np.ndarray:
        return np.asarray(self.position_of, dtype=int)

    def matrix(self) -> np.ndarray:
        n = len(self.position_of)
        P = np.zeros((n, n))
        P[np.arange(n), self.positions] = 1.0
        return P

    def __len__(self):
        return len(self.position_of)


@dataclass(frozen=True)
class RankingPolicy:
    """A finite distribution over distinct rankings."""

    rankings: tuple
    weights: tuple

    def __post_init__(self):
        rankings = tuple(r if isinstance(r, Ranking) else Ranking(r) for r in self.rankings)
        weights = tuple(float(w) for w in self.weights)
        object.__setattr__(self, "rankings", rankings)
        object.__setattr__(self, "weights", weights)
        if not rankings or len(rankings) != len(weights):
            raise ProblemError("policy needs one weight per ranking")
        if len({len(r) for r in rankings}) != 1:
            raise ProblemError("rankings have different lengths")
        if any(not (0 < w <= 1 + PROB_TOL) for w in weights):
            raise ProblemError("policy weights must lie in (0, 1]")
        if abs(sum(weights) - 1) > PROB_TOL:
            raise ProblemError(f"policy weights sum to {sum(weights)!r}, not 1")
        if len(set(rankings)) != len(rankings):
            raise ProblemError("policy rankings must be pairwise distinct")

    @classmethod
    def deterministic(cls, ranking: Ranking) -> "RankingPolicy":
        return cls((ranking,), (1.0,))

    @property
    def n(self) -> int:
        return len(self.rankings[0])

    def __len__(self):
        return len(self.rankings)

    def sample(self, size: int | None = None, random_state=None):
        rng = np.random.default_rng(random_state)
        idx = rng.choice(len(self.rankings), size=size, p=np.asarray(self.weights))
        if size is None:
            return self.rankings[int(idx)]
        return [self.rankings[int(i)] for i in idx]


@dataclass(frozen=True, eq=False)
class DoublyStochasticMatrix:
    """Marginal rank probabilities; ``entries[m, k] = P(item m at rank k)``."""

    entries: np.ndarray
    tolerance: float = 1e-7

    def __post_init__(self):
        S = _frozen(self.entries)
        object.__setattr__(self, "entries", S)
        tol = self.tolerance
        if S.ndim != 2 or S.shape[0] != S.shape[1]:
            raise ProblemError(f"expected a square matrix, got shape {S.shape}")
        if np.any(S < -tol) or np.any(S > 1 + tol):
            raise ProblemError("entries outside [0, 1]")
        if np.abs(S.sum(axis=0) - 1).max() > tol or np.abs(S.sum(axis=1) - 1).max() > tol:
            raise ProblemError("row or column sums differ from 1")

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


def as_matrix(sigma) -> np.ndarray:
    if isinstance(sigma, DoublyStochasticMatrix):
        return sigma.entries
    if isinstance(sigma, RankingPolicy):
        raise TypeError("pass marginal_matrix(policy) rather than a policy")
    return np.asarray(sigma, dtype=float)


def group_label_vectors(problem: RankingProblem) -> Mapping[str, np.ndarray]:
    return {g: problem.group_mask(g).astype(float) for g in problem.item_group_ids}
