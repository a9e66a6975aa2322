import numpy as np
import pytest

from tsfdrank.bench import fixture, random_problem
from tsfdrank.bvn import (
    ES,
    LSI,
    LSNI,
    UTILITY_ONLY,
    MatchGraph,
    MatcherStrategy,
    decompose,
    exhaustive_search_match,
    local_search_match,
    max_utility_perfect_matching,
    random_doubly_stochastic,
)
from tsfdrank.core import Ranking, RankingProblem, UserGroup
from tsfdrank.exceptions import NoPerfectMatching, ProblemError
from tsfdrank.fairopt import prp_policy
from tsfdrank.functions import ShiftedLog
from tsfdrank.metrics import marginal_matrix, policy_diversity, ranking_diversity

G = ShiftedLog(0.0001)


def _problem(n, rng):
    return random_problem(rng, n)


def test_identity_single_atom(rng):
    p = _problem(4, rng)
    pol = decompose(p, np.eye(4), G)
    assert len(pol) == 1 and pol.weights == (1.0,)
    assert pol.rankings[0] == Ranking((0, 1, 2, 3))


def test_half_matrix_two_atoms(rng):
    pol = decompose(_problem(2, rng), np.full((2, 2), 0.5), G)
    assert sorted(pol.weights) == pytest.approx([0.5, 0.5])


def test_thirds_three_atoms(rng):
    pol = decompose(_problem(3, rng), np.full((3, 3), 1 / 3), G)
    assert len(pol) == 3
    assert pol.weights == pytest.approx((1 / 3,) * 3)


@pytest.mark.parametrize("strategy", [LSI, LSNI, UTILITY_ONLY, ES(0), ES(1), ES(2), ES(3)])
def test_reconstruction_for_every_strategy(strategy, rng):
    for n in (3, 6):
        p = _problem(n, rng)
        S = random_doubly_stochastic(n, rng)
        trace = []
        pol = decompose(p, S, G, strategy, trace=trace)
        err = np.abs(marginal_matrix(pol, n).entries - S.entries).max()
        assert err <= 1e-6
        assert len(pol) <= (n - 1) ** 2 + 1
        assert all(t["feasible"] and t["weight"] > 0 for t in trace)


def test_repair_rejects_non_stochastic(rng):
    with pytest.raises(ProblemError):
        decompose(_problem(2, rng), np.array([[1.0, 0.0], [1.0, 0.0]]), G)


def test_local_search_keeps_only_legal_matching(rng):
    p = _problem(4, rng)
    init = Ranking((2, 0, 3, 1))
    assert local_search_match(p, G, MatchGraph(init.matrix().astype(bool)), init) == init


def test_local_search_no_strict_improvement_keeps_init():
    p = RankingProblem(
        items=["a", "b"], item_groups=["G", "G"], intents=["x", "y"],
        relevance=[[1.0, 0.0], [0.0, 1.0]],
        user_groups=[UserGroup("U", 1.0, [0.5, 0.5])], exposure=[1.0, 1.0],
    )
    init = Ranking((1, 0))
    assert local_search_match(p, G, MatchGraph.full(2), init) == init


def test_local_search_improving_swap():
    # init puts both i1 items on top; swapping the i2 item up covers a second intent
    p = RankingProblem(
        items=["a", "b", "c"], item_groups=["G"] * 3, intents=["x", "y"],
        relevance=[[1.0, 0.0], [0.9, 0.0], [0.0, 0.8]],
        user_groups=[UserGroup("U", 1.0, [0.5, 0.5])], exposure=[1.0, 1.0, 0.0],
    )
    init = Ranking((0, 1, 2))
    out = local_search_match(p, G, MatchGraph.full(3), init)
    assert ranking_diversity(p, out, G) > ranking_diversity(p, init, G)
    assert out.position_of[2] < 2


def test_exhaustive_levels(rng):
    unique = Ranking((1, 2, 0))
    p = _problem(3, rng)
    assert exhaustive_search_match(p, G, MatchGraph(unique.matrix().astype(bool)), 1) == unique
    for _ in range(10):
        p = _problem(5, rng)
        graph = MatchGraph.from_residual(random_doubly_stochastic(5, rng).entries * (rng.random((5, 5)) < 0.8) + np.eye(5))
        vals = [ranking_diversity(p, exhaustive_search_match(p, G, graph, l), G) for l in range(4)]
        assert all(graph.admits(exhaustive_search_match(p, G, graph, l)) for l in range(4))
        assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


def test_max_utility_matching(rng):
    p = _problem(6, rng)
    assert max_utility_perfect_matching(p, MatchGraph.full(6)) == prp_policy(p).rankings[0]
    only = Ranking((3, 1, 0, 5, 2, 4))
    assert max_utility_perfect_matching(p, MatchGraph(only.matrix().astype(bool))) == only
    with pytest.raises(NoPerfectMatching):
        max_utility_perfect_matching(p, MatchGraph(np.zeros((6, 6), dtype=bool)))


def test_strategy_does_not_change_marginals(rng):
    p = _problem(5, rng)
    S = random_doubly_stochastic(5, rng)
    mats = [marginal_matrix(decompose(p, S, G, s), 5).entries for s in (LSI, LSNI, ES(2), UTILITY_ONLY)]
    for M in mats[1:]:
        np.testing.assert_allclose(M, mats[0], atol=1e-9)


def test_local_search_not_worse_than_utility_only(rng):
    for _ in range(10):
        p = _problem(6, rng)
        S = random_doubly_stochastic(6, rng)
        util = decompose(p, S, G, UTILITY_ONLY)
        ls = decompose(p, S, G, LSI)
        first_util, first_ls = util.rankings[0], ls.rankings[0]
        assert ranking_diversity(p, first_ls, G) >= ranking_diversity(p, first_util, G) - 1e-12


def test_strategy_parse():
    assert MatcherStrategy.parse("es2") == ES(2)
    assert str(LSNI) == "lsni"
    with pytest.raises(ValueError):
        MatcherStrategy.parse("es4")
    with pytest.raises(ValueError):
        MatcherStrategy.parse("hungarian")


def test_fig1_decomposition_diversity_below_bound(fig1):
    from tsfdrank.metrics import diversity_upper_bound

    S = np.full((fig1.n, fig1.n), 1 / fig1.n)
    pol = decompose(fig1, S, G)
    assert policy_diversity(fig1, pol, G) <= diversity_upper_bound(fig1, S, G) + 1e-9
