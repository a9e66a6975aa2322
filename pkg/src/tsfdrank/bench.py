"""Synthetic movie benchmark, bias injection and small hand-built problems.

The benchmark universe has 100 movies in five genres, each led by a black or
a white lead actor.  A genre is an intent; male and female users prefer
different genre mixes, controlled by a similarity knob ``s``.  Ratings are
synthetic (uniform on [6, 10]) and relevance is the rating minus 6 for the
movie's own genre.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .core import RankingProblem, UserGroup
from .functions import PiecewiseLinear

GENRES = ("Romance", "Comedy", "Action", "Thriller", "SciFi")
INTENT_1 = np.array([0.5, 0.5, 0.0, 0.0, 0.0])
INTENT_2 = np.array([0.0, 0.0, 0.5, 0.25, 0.25])


def _default_genres():
    return {"Romance": 20, "Comedy": 25, "Action": 25, "Thriller": 15, "SciFi": 15}


@dataclass(frozen=True)
class BenchConfig:
    n_movies: int = 100
    genre_counts: dict = field(default_factory=_default_genres)
    black_lead: int = 20
    white_lead: int = 80
    rho_male: float = 0.6
    s: float = 0.5
    eta: float = 1.0
    sample_size: int = 15
    rating_range: tuple = (6.0, 10.0)
    seed: int = 0
    #: relative relevance boost of black-lead movies
    bias: float = 0.0
    #: genres merged into this many contiguous intents
    n_intents: int = 5

    def __post_init__(self):
        if sum(self.genre_counts.values()) != self.n_movies:
            raise ValueError("genre counts must sum to n_movies")
        if self.black_lead + self.white_lead != self.n_movies:
            raise ValueError("lead-group counts must sum to n_movies")
        if not 0 <= self.rho_male <= 1 or not 0 <= self.s <= 1:
            raise ValueError("rho_male and s must lie in [0, 1]")
        if self.eta < 0:
            raise ValueError("eta must be non-negative")
        if not 1 <= self.sample_size <= self.n_movies:
            raise ValueError("sample_size must be in 1..n_movies")
        if self.bias <= -1:
            raise ValueError("bias must exceed -1")
        if not 1 <= self.n_intents <= len(self.genre_counts):
            raise ValueError("n_intents must be between 1 and the number of genres")

    def replace(self, **changes) -> "BenchConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["rating_range"] = list(self.rating_range)
        return d


def intent_distributions(s: float, genres=GENRES) -> tuple[np.ndarray, np.ndarray]:
    """(male, female) intent distributions over the default genres."""
    if tuple(genres) != GENRES:
        raise ValueError("intent distributions are defined for the default genres")
    male = (1 - 0.5 * s) * INTENT_1 + 0.5 * s * INTENT_2
    female = (1 - 0.5 * s) * INTENT_2 + 0.5 * s * INTENT_1
    return male, female


def position_exposure(n: int, eta: float) -> np.ndarray:
    return (1.0 / np.arange(1, n + 1)) ** eta


def generate_universe(config: BenchConfig = BenchConfig()) -> RankingProblem:
    """All ``n_movies`` movies with sampled ratings, as one ranking problem."""
    genres = list(config.genre_counts)
    genre_of = np.repeat(np.arange(len(genres)), list(config.genre_counts.values()))
    starts = np.concatenate([[0], np.cumsum(list(config.genre_counts.values()))[:-1]])
    # black leads spread round-robin over genres, first movies of each block
    lead = np.array(["white"] * config.n_movies, dtype=object)
    taken = [0] * len(genres)
    placed, gi = 0, 0
    while placed < config.black_lead:
        if taken[gi] < config.genre_counts[genres[gi]]:
            lead[starts[gi] + taken[gi]] = "black"
            taken[gi] += 1
            placed += 1
        gi = (gi + 1) % len(genres)
    rng = np.random.default_rng(config.seed)
    lo, hi = config.rating_range
    rating = rng.uniform(lo, hi, config.n_movies)
    relevance = np.zeros((config.n_movies, len(genres)))
    relevance[np.arange(config.n_movies), genre_of] = rating - lo
    male, female = intent_distributions(config.s, tuple(genres))
    problem = RankingProblem(
        items=[f"m{j:03d}" for j in range(config.n_movies)],
        item_groups=list(lead),
        intents=genres,
        relevance=relevance,
        user_groups=[
            UserGroup("male", config.rho_male, male),
            UserGroup("female", 1.0 - config.rho_male, female),
        ] if 0 < config.rho_male < 1 else [
            UserGroup("male" if config.rho_male == 1 else "female", 1.0,
                      male if config.rho_male == 1 else female)
        ],
        exposure=position_exposure(config.n_movies, config.eta),
    )
    if config.bias:
        problem = apply_bias(problem, config.bias)
    if config.n_intents != len(genres):
        problem = merge_intents(problem, config.n_intents)
    return problem


def sample_seed(master: int, index: int) -> np.random.Generator:
    """Generator for sample ``index``; independent of how samples are scheduled."""
    return np.random.default_rng(np.random.SeedSequence([int(master), int(index)]))


def sample_problem(universe: RankingProblem, k: int = 15, seed=None) -> RankingProblem:
    """Uniform ``k``-item subset (kept in universe order) with the top-``k`` exposures."""
    if not 1 <= k <= universe.n:
        raise ValueError(f"k must be in 1..{universe.n}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    idx = np.sort(rng.choice(universe.n, size=k, replace=False))
    return universe.replace(
        items=[universe.items[i] for i in idx],
        item_groups=[universe.item_groups[i] for i in idx],
        relevance=universe.relevance[idx],
        exposure=universe.exposure[:k],
    )


def apply_bias(problem: RankingProblem, b: float, group: str = "black") -> RankingProblem:
    """Scale the relevance rows of ``group`` by ``1 + b``."""
    if not b > -1:
        raise ValueError("bias must exceed -1")
    scale = np.where(np.array(problem.item_groups) == group, 1.0 + b, 1.0)
    return problem.replace(relevance=problem.relevance * scale[:, None])


def merge_intents(problem: RankingProblem, n_intents: int) -> RankingProblem:
    """Merge consecutive intents into ``n_intents`` blocks of near-equal size."""
    blocks = np.array_split(np.arange(len(problem.intents)), n_intents)
    rel = np.stack([problem.relevance[:, b].sum(axis=1) for b in blocks], axis=1)
    ugs = [
        UserGroup(ug.id, ug.proportion, np.array([ug.intent_dist[b].sum() for b in blocks]))
        for ug in problem.user_groups
    ]
    ids = ["+".join(problem.intents[i] for i in b) for b in blocks]
    return problem.replace(intents=ids, relevance=rel, user_groups=ugs)


def benchmark_samples(config: BenchConfig, n_samples: int, start: int = 0):
    """Yield ``(index, problem)`` for the configured benchmark."""
    universe = generate_universe(config)
    for i in range(start, start + n_samples):
        yield i, sample_problem(universe, config.sample_size, sample_seed(config.seed, i))


# -- hand-built problems ---------------------------------------------------------


def _fig1() -> tuple[RankingProblem, dict]:
    rel_of = {1: (0, 1.0), 2: (1, 1.0), 3: (2, 1.0), 4: (0, 0.9), 5: (1, 0.9), 6: (2, 0.9)}
    items, groups, rows = [], [], []
    for m in range(1, 7):
        for j in range(1, 4):
            items.append(f"d{m}_{j}")
            groups.append("DG1" if m <= 3 else "DG2")
            row = [0.0, 0.0, 0.0]
            row[rel_of[m][0]] = rel_of[m][1]
            rows.append(row)
    problem = RankingProblem(
        items=items,
        item_groups=groups,
        intents=["i1", "i2", "i3"],
        relevance=np.array(rows),
        user_groups=[UserGroup("UG1", 0.5, [0.6, 0.4, 0.0]), UserGroup("UG2", 0.5, [0.0, 0.0, 1.0])],
        exposure=[1.0, 1.0, 1.0] + [0.0] * 15,
    )
    expected = {
        "population_intent": [0.3, 0.2, 0.5],
        "merit": {"DG1": 1 / 3, "DG2": 0.3},
        "max_intent_coverage": 1.0,
        "utility": {"U:UG1": 0.0, "U:DG2": 0.0, "coverage": 0.5, "utility": 1.5, "U:UG2": 3.0},
        "item_fairness": {"U:UG1": 0.0, "coverage": 0.5},
        "user_fairness": {"U:DG2": 0.0, "uncovered_intents": ["i2"]},
        "diversity_top1": {"exposure": [1.0] + [0.0] * 17, "U:UG1": 0.0, "U:DG2": 0.0},
        "tsfd_equal_merit": {"merit": {"DG1": 1.0, "DG2": 1.0}, "all_group_utilities_positive": True},
    }
    return problem, expected


def _ex2() -> tuple[RankingProblem, dict]:
    e = [1.0, 0.5]
    problem = RankingProblem(
        items=["d1", "d2"],
        item_groups=["DG1", "DG1"],
        intents=["i1", "i2"],
        relevance=np.array([[1.0, 0.0], [0.0, 0.9]]),
        user_groups=[UserGroup("UG1", 0.5, [1.0, 0.0]), UserGroup("UG2", 0.5, [0.0, 1.0])],
        exposure=e,
    )
    s = e[0] + e[1]
    expected = {
        "user_fairness_log": {
            "x": 0.5,
            "sigma": [[0.5, 0.5], [0.5, 0.5]],
            "value": 0.5 * np.log(0.5 * s) + 0.5 * np.log(0.45 * s),
        },
        "prp_order": ["d1", "d2"],
    }
    return problem, expected


def _ex3() -> tuple[RankingProblem, dict]:
    problem = RankingProblem(
        items=["d1", "d2"],
        item_groups=["DG1", "DG2"],
        intents=["i1"],
        relevance=np.array([[1.0], [0.9]]),
        user_groups=[UserGroup("UG1", 1.0, [1.0])],
        exposure=[1.0, 0.5],
    )
    expected = {
        "merit": {"DG1": 1.0, "DG2": 0.9},
        "two_sided_utility": {"sigma11": 11 / 19},
        # d1 first: E(DG1)/M(DG1) - E(DG2)/M(DG2) = 1 - 0.5/0.9
        "item_unfairness": {"d1_first": 1 - 0.5 / 0.9, "d2_first": 0.0},
    }
    return problem, expected


def _ex4() -> tuple[RankingProblem, dict]:
    problem = RankingProblem(
        items=["d1", "d2", "d3"],
        item_groups=["DG1", "DG1", "DG1"],
        intents=["i1", "i2"],
        relevance=np.array([[1.0, 0.0], [0.9, 0.0], [0.0, 0.8]]),
        user_groups=[UserGroup("UG1", 1.0, [0.5, 0.5])],
        exposure=[1.0, 1.0, 0.0],
    )
    expected = {
        "tsfd_order": ["d1", "d2", "d3"],
        "tsfd_coverage": 0.5,
        "max_intent_coverage": 1.0,
        "diversity_d3_exposed": True,
    }
    return problem, expected


FIXTURES = {"fig1": _fig1, "ex2": _ex2, "ex3": _ex3, "ex4": _ex4}


def fixture(name: str) -> tuple[RankingProblem, dict]:
    """A small hand-built problem and the outcomes predicted for it."""
    try:
        return FIXTURES[name]()
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; choose from {sorted(FIXTURES)}") from None


def nonzero_utility_fn(problem: RankingProblem, reference_sigma=None, k2: float = 1.0) -> PiecewiseLinear:
    """Two-piece concave ``f`` under which no policy leaving a user group at zero beats ``reference_sigma``.

    The breakpoint sits at the smallest group utility of the reference
    (default: uniform) matrix, and the slope below it is large enough that
    any zero-utility group costs more than every other group could gain.
    """
    n = problem.n
    S = np.full((n, n), 1.0 / n) if reference_sigma is None else np.asarray(reference_sigma, dtype=float)
    x = S @ problem.exposure
    R = np.array([problem.relevance @ ug.intent_dist for ug in problem.user_groups])
    u = R @ x
    u_min = float(u.min())
    if not u_min > 0:
        raise ValueError("reference matrix leaves a user group at zero utility")
    e_sorted = np.sort(problem.exposure)[::-1]
    u_max = max(float(np.sort(r)[::-1] @ e_sorted) for r in R)
    rho_min = min(ug.proportion for ug in problem.user_groups)
    k1 = 2.0 * max(k2, (1 - rho_min) * (u_max - u_min) / (rho_min * u_min) * k2)
    return PiecewiseLinear((k1, k2), (u_min,))


def random_problem(
    rng,
    n: int,
    n_intents: int = 3,
    n_user_groups: int = 2,
    n_item_groups: int = 2,
    zero_exposure: bool = True,
) -> RankingProblem:
    """Random non-degenerate problem for property tests."""
    rng = np.random.default_rng(rng)
    rel = rng.random((n, n_intents)) * (rng.random((n, n_intents)) < 0.6)
    for i in range(n_intents):
        if not rel[:, i].any():
            rel[rng.integers(n), i] = rng.uniform(0.1, 1.0)
    groups = [f"G{m % n_item_groups}" for m in range(n)]
    for gname in set(groups):
        idx = [m for m in range(n) if groups[m] == gname]
        if not rel[idx].any():
            rel[idx[0], rng.integers(n_intents)] = rng.uniform(0.1, 1.0)
    e = np.sort(rng.random(n))[::-1]
    if zero_exposure and n > 1 and rng.random() < 0.3:
        e[rng.integers(1, n):] = 0.0
    e[0] = max(e[0], 0.2)
    rho = rng.dirichlet(np.ones(n_user_groups))
    rho = np.maximum(rho, 0.05)
    rho /= rho.sum()
    ugs = [UserGroup(f"U{j}", rho[j], rng.dirichlet(np.ones(n_intents))) for j in range(n_user_groups)]
    return RankingProblem(
        items=[f"d{m}" for m in range(n)],
        item_groups=groups,
        intents=[f"i{i}" for i in range(n_intents)],
        relevance=rel,
        user_groups=ugs,
        exposure=e,
    )
