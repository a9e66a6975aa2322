import math

import numpy as np
import pytest

from tsfdrank.bench import fixture, random_problem
from tsfdrank.bvn import decompose, random_doubly_stochastic
from tsfdrank.core import Ranking, RankingPolicy, expected_relevance
from tsfdrank.exceptions import DomainError, InstanceTooLarge, MeritNonPositive
from tsfdrank.fairopt import prp_policy
from tsfdrank.functions import PiecewiseLinear, ShiftedLog
from tsfdrank.metrics import (
    diversity_upper_bound,
    evaluate,
    group_exposure,
    group_utility,
    intent_coverage,
    item_group_utility,
    item_unfairness,
    marginal_matrix,
    max_intent_coverage,
    merit,
    policy_diversity,
    ranking_diversity,
    ranking_intent_utility,
    user_fairness,
    utility,
)

G = ShiftedLog(0.0001)


def _fig1_prp(fig1):
    return marginal_matrix(prp_policy(fig1), fig1.n)


def test_marginal_matrix_examples():
    ident = RankingPolicy.deterministic(Ranking((0, 1, 2)))
    np.testing.assert_array_equal(marginal_matrix(ident).entries, np.eye(3))
    half = RankingPolicy((Ranking((0, 1)), Ranking((1, 0))), (0.5, 0.5))
    np.testing.assert_allclose(marginal_matrix(half).entries, 0.5)
    cyc = RankingPolicy(tuple(Ranking(tuple((m + s) % 3 for m in range(3))) for s in range(3)), (1 / 3,) * 3)
    np.testing.assert_allclose(marginal_matrix(cyc).entries, 1 / 3)


def test_fig1_utility_max_quantities(fig1):
    S = _fig1_prp(fig1)
    assert utility(fig1, S) == pytest.approx(1.5)
    assert group_utility(fig1, S, "UG1") == pytest.approx(0.0, abs=1e-12)
    assert group_utility(fig1, S, "UG2") == pytest.approx(3.0)
    assert group_exposure(fig1, S, "DG1") == pytest.approx(1 / 3)
    assert group_exposure(fig1, S, "DG2") == 0.0
    assert item_group_utility(fig1, S, "DG2") == 0.0
    assert item_group_utility(fig1, S, "DG1") == pytest.approx(1.5)
    ranking = prp_policy(fig1).rankings[0]
    assert intent_coverage(fig1, ranking) == pytest.approx(0.5)
    assert max_intent_coverage(fig1) == pytest.approx(1.0)


def test_uniform_sigma_identities(rng):
    p = random_problem(rng, 5)
    U = np.full((5, 5), 0.2)
    assert utility(p, U) == pytest.approx(p.exposure.mean() * expected_relevance(p).sum())
    for dg in p.item_group_ids:
        assert group_exposure(p, U, dg) == pytest.approx(p.exposure.mean())


def test_partition_identities(rng):
    for _ in range(20):
        p = random_problem(rng, 6)
        S = random_doubly_stochastic(6, rng).entries
        total = sum(item_group_utility(p, S, dg) for dg in p.item_group_ids)
        assert total == pytest.approx(utility(p, S), abs=1e-12)
        exp_total = sum(p.group_mask(dg).sum() * group_exposure(p, S, dg) for dg in p.item_group_ids)
        assert exp_total == pytest.approx(p.exposure.sum(), abs=1e-12)


def test_merit_examples(fig1):
    assert merit(fig1, "DG1") == pytest.approx(1 / 3)
    assert merit(fig1, "DG2") == pytest.approx(0.3)
    ex3, _ = fixture("ex3")
    assert merit(ex3, "DG1") == pytest.approx(1.0)
    assert merit(ex3, "DG2") == pytest.approx(0.9)
    zero = ex3.replace(relevance=[[1.0], [0.0]])
    with pytest.raises(MeritNonPositive):
        merit(zero, "DG2")


def test_item_unfairness_ex3():
    p, exp = fixture("ex3")
    d1_first, d2_first = np.eye(2), np.eye(2)[::-1]
    assert item_unfairness(p, d1_first) == pytest.approx(exp["item_unfairness"]["d1_first"], abs=1e-12)
    assert item_unfairness(p, d2_first) == pytest.approx(0.0, abs=1e-12)
    x = 11 / 19
    fair = np.array([[x, 1 - x], [1 - x, x]])
    assert item_unfairness(p, fair) == pytest.approx(0.0, abs=1e-12)


def test_user_fairness_examples():
    p, exp = fixture("ex2")
    S = np.full((2, 2), 0.5)
    assert user_fairness(p, S, ShiftedLog(0.0)) == pytest.approx(exp["user_fairness_log"]["value"])
    with pytest.raises(DomainError):
        user_fairness(p.replace(exposure=[1.0, 0.0]), np.eye(2), ShiftedLog(0.0))


def test_equal_group_utilities_give_f_of_u():
    p, _ = fixture("ex2")
    p = p.replace(relevance=[[1.0, 0.0], [0.0, 1.0]])
    f = ShiftedLog(0.0)
    S = np.full((2, 2), 0.5)
    u = group_utility(p, S, "UG1")
    assert user_fairness(p, S, f) == pytest.approx(f(u))


def test_ranking_intent_utility_fig1(fig1):
    order = [0, 3, 6] + [m for m in range(fig1.n) if m not in (0, 3, 6)]
    r = Ranking.from_order(order)
    for i in ("i1", "i2", "i3"):
        assert ranking_intent_utility(fig1, r, i) == pytest.approx(1.0)


def test_diversity_examples(fig1):
    r = prp_policy(fig1).rankings[0]
    none = fig1.replace(relevance=np.zeros((fig1.n, 3)))
    assert ranking_diversity(none, r, G) == pytest.approx(math.log(0.0001))
    r2 = Ranking.from_order(list(range(fig1.n)))
    mix = RankingPolicy((r, r2), (0.5, 0.5))
    assert policy_diversity(fig1, mix, G) == pytest.approx(
        0.5 * ranking_diversity(fig1, r, G) + 0.5 * ranking_diversity(fig1, r2, G)
    )
    S = r.matrix()
    assert diversity_upper_bound(fig1, S, G) == pytest.approx(ranking_diversity(fig1, r, G))


def test_coverage_of_zero_relevance_ranking():
    p, _ = fixture("ex4")
    p = p.replace(relevance=np.zeros((3, 2)))
    assert intent_coverage(p, Ranking((0, 1, 2))) == 0.0


def test_max_coverage_limits():
    p, _ = fixture("ex4")
    assert max_intent_coverage(p) == pytest.approx(1.0)
    wide = p.replace(
        intents=[f"i{k}" for k in range(13)],
        relevance=np.ones((3, 13)),
        user_groups=[p.user_groups[0].__class__("UG1", 1.0, np.full(13, 1 / 13))],
    )
    with pytest.raises(InstanceTooLarge):
        max_intent_coverage(wide)


def test_bound_invariants_on_random_policies(rng):
    for _ in range(30):
        p = random_problem(rng, 5)
        S = random_doubly_stochastic(5, rng)
        pol = decompose(p, S, G)
        f = ShiftedLog(1.0)
        rep = evaluate(p, pol, f, G)
        assert rep.check_invariants(f, G) == []
        r_pop = expected_relevance(p)
        direct = sum(w * float(p.exposure[r.positions] @ r_pop) for r, w in zip(pol.rankings, pol.weights))
        assert rep.utility == pytest.approx(direct, abs=1e-9)


def test_upper_bound_tight_without_envy():
    # Relabelings of identical items give every intent the same utility in every atom.
    p, _ = fixture("ex2")
    p = p.replace(relevance=[[1.0, 0.5], [1.0, 0.5]], exposure=[1.0, 0.3])
    pol = RankingPolicy((Ranking((0, 1)), Ranking((1, 0))), (0.4, 0.6))
    S = marginal_matrix(pol)
    assert policy_diversity(p, pol, G) == pytest.approx(diversity_upper_bound(p, S, G), abs=1e-12)


def test_pwl_user_fairness_lower_bound(rng):
    f = PiecewiseLinear((3.0, 1.0), (0.2,))
    for _ in range(20):
        p = random_problem(rng, 4)
        S = random_doubly_stochastic(4, rng).entries
        assert f.inverse(user_fairness(p, S, f)) <= utility(p, S) + 1e-9


def test_columns_order(fig1):
    rep = evaluate(fig1, prp_policy(fig1), ShiftedLog(0.0001), G, strict=False)
    cols = list(rep.columns(ShiftedLog(0.0001), G))
    assert cols[:5] == ["utility", "item_unfairness", "user_fairness", "diversity", "diversity_ub"]
    assert cols[5:7] == ["ug_utility:UG1", "ug_utility:UG2"]
