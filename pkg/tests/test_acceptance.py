"""Acceptance criteria, one test each, with a PASS/FAIL line per criterion.

Run directly (``python3 tests/test_acceptance.py``) or under pytest, where
the lines are repeated in the terminal summary.
"""

import math
import time
import warnings

import numpy as np
import pytest

from tsfdrank.bench import BenchConfig, fixture, nonzero_utility_fn, random_problem
from tsfdrank.bvn import decompose, random_doubly_stochastic
from tsfdrank.diversity import brute_force_diverse_ranking, greedy_diverse_ranking
from tsfdrank.exceptions import DomainError, Infeasible, NotConvergedWarning
from tsfdrank.experiments import compare_strategies, run_sweep, run_table
from tsfdrank.fairopt import (
    FairOptConfig,
    ItemConstraint,
    UserFairness,
    Utility,
    brute_force_optimum,
    pareto_dominators,
    solve_fair,
)
from tsfdrank.functions import ShiftedLog
from tsfdrank.metrics import (
    group_utility,
    intent_coverage,
    item_group_utility,
    marginal_matrix,
    ranking_diversity,
)
from tsfdrank.policies import DEFAULT_F, DEFAULT_G, METHODS, baseline, tsfd_rank

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # run as a script
    ACCEPTANCE_LINES = []

ZERO_TOL = 1e-9


def report(tag, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} [{tag}] {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def _r2(x, y):
    x, y = np.asarray(x, float), np.asarray(y, float)
    slope, icpt = np.polyfit(x, y, 1)
    resid = y - (slope * x + icpt)
    return 1.0 - resid @ resid / ((y - y.mean()) @ (y - y.mean())), np.abs(resid).max()


def _coverage(problem, policy):
    return max(intent_coverage(problem, r) for r in policy.rankings)


def test_1_fig1_zero_utility_matrix():
    t0 = time.perf_counter()
    p, exp = fixture("fig1")
    g = DEFAULT_G
    out = {}

    def S(pol, prob=p):
        return marginal_matrix(pol, prob.n)

    pol = baseline(p, "utility", g=g)
    out["utility"] = (group_utility(p, S(pol), "UG1"), item_group_utility(p, S(pol), "DG2"), _coverage(p, pol))
    pol = baseline(p, "item_fairness", g=g)
    out["itemfair"] = (group_utility(p, S(pol), "UG1"), _coverage(p, pol))
    pol = baseline(p, "user_fairness", f=ShiftedLog(0.0), g=g)
    out["userfair"] = (item_group_utility(p, S(pol), "DG2"), _coverage(p, pol))
    top1 = p.replace(exposure=exp["diversity_top1"]["exposure"])
    pol = baseline(top1, "diversity", g=g)
    out["diversity"] = (group_utility(top1, S(pol, top1), "UG1"), item_group_utility(top1, S(pol, top1), "DG2"))
    pol = tsfd_rank(p, f=nonzero_utility_fn(p), g=g, item_constraint="two_sided",
                    merit=exp["tsfd_equal_merit"]["merit"])
    tsfd = [group_utility(p, S(pol), u) for u in ("UG1", "UG2")] + [
        item_group_utility(p, S(pol), d) for d in ("DG1", "DG2")
    ]
    elapsed = time.perf_counter() - t0

    checks = {
        "utility U(UG1)=0": abs(out["utility"][0]) <= ZERO_TOL,
        "utility U(DG2)=0": abs(out["utility"][1]) <= ZERO_TOL,
        "utility coverage=0.5": abs(out["utility"][2] - 0.5) <= ZERO_TOL,
        "itemfair U(UG1)=0": abs(out["itemfair"][0]) <= ZERO_TOL,
        "itemfair coverage=0.5": abs(out["itemfair"][1] - 0.5) <= ZERO_TOL,
        "userfair U(DG2)=0": abs(out["userfair"][0]) <= ZERO_TOL,
        "userfair coverage<=0.5": out["userfair"][1] <= 0.5 + 1e-9,
        "diversity U(UG1)=0": abs(out["diversity"][0]) <= ZERO_TOL,
        "diversity U(DG2)=0": abs(out["diversity"][1]) <= ZERO_TOL,
        "tsfd all four > 0": min(tsfd) > ZERO_TOL,
        "runtime < 1 s": elapsed < 1.0,
    }
    bad = [k for k, v in checks.items() if not v]
    ok = report("1", not bad, f"fig1 zero-utility matrix: {len(checks) - len(bad)}/{len(checks)} checks"
                + (f"; failed {bad}" if bad else "")
                + f"; userfair coverage {out['userfair'][1]:.3f} (i1+i3 mass; max coverage 1)"
                + f"; tsfd min group utility {min(tsfd):.4f}; {elapsed:.2f} s")
    assert ok, bad


def test_2_ex2_even_mixture():
    t0 = time.perf_counter()
    p, _ = fixture("ex2")
    res = solve_fair(p, FairOptConfig(UserFairness(ShiftedLog(0.0))))
    err = np.abs(res.sigma.entries - 0.5).max()
    elapsed = time.perf_counter() - t0
    ok = report("2", err <= 1e-4 and elapsed < 1.0, f"ex2 max |Sigma-0.5| = {err:.2e} (tol 1e-4); {elapsed:.3f} s")
    assert ok


def test_3_ex3_two_sided():
    t0 = time.perf_counter()
    p, _ = fixture("ex3")
    res = solve_fair(p, FairOptConfig(Utility(), ItemConstraint.TWO_SIDED))
    s11 = res.sigma.entries[0, 0]
    elapsed = time.perf_counter() - t0
    ok = report("3", abs(s11 - 11 / 19) <= 1e-4 and elapsed < 1.0,
                f"ex3 Sigma11 = {s11:.8f} vs 11/19 = {11 / 19:.8f} (tol 1e-4); {elapsed:.3f} s")
    assert ok


def test_4_bvn_reconstruction():
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    worst_err, worst_atoms = 0.0, 0
    over = 0
    for n in range(2, 11):
        for _ in range(100):
            p = random_problem(rng, n)
            S = random_doubly_stochastic(n, rng)
            pol = decompose(p, S, DEFAULT_G)
            worst_err = max(worst_err, np.abs(marginal_matrix(pol, n).entries - S.entries).max())
            worst_atoms = max(worst_atoms, len(pol) - ((n - 1) ** 2 + 1))
            over += len(pol) > (n - 1) ** 2 + 1
    elapsed = time.perf_counter() - t0
    ok = report("4", worst_err <= 1e-6 and over == 0 and elapsed < 30,
                f"BvN 900 matrices: max error {worst_err:.2e} (tol 1e-6), atom-bound violations {over}; "
                f"{elapsed:.1f} s")
    assert ok


def test_5_oracle_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    objectives = {"utility": Utility(), "log": UserFairness(ShiftedLog(0.0))}
    worst, dominated, mismatched, solved = math.inf, 0, 0, 0
    for name, obj in objectives.items():
        for k in range(50):
            p = random_problem(rng, int(rng.integers(2, 5)))
            kind = list(ItemConstraint)[k % 3]
            cfg = FairOptConfig(obj, kind)
            try:
                res = solve_fair(p, cfg)
            except (Infeasible, DomainError) as exc:
                try:
                    brute_force_optimum(p, cfg)
                    mismatched += 1
                except type(exc):
                    pass
                continue
            oracle = brute_force_optimum(p, cfg)
            worst = min(worst, res.objective_value - oracle.objective_value)
            dominated += len(pareto_dominators(p, cfg, res.sigma, tol=1e-3)) > 0
            solved += 1
    elapsed = time.perf_counter() - t0
    ok = report("5", worst >= -1e-3 and dominated == 0 and mismatched == 0 and elapsed < 120,
                f"oracle: {solved} solved, min(solver - oracle) = {worst:.2e} (tol -1e-3), "
                f"Pareto-dominated {dominated}, infeasibility disagreements {mismatched}; {elapsed:.1f} s")
    assert ok


def test_6_submodular_guarantee():
    t0 = time.perf_counter()
    rng = np.random.default_rng(6)
    g = DEFAULT_G
    base = float(g(0.0))
    ratios = []
    for _ in range(200):
        p = random_problem(rng, int(rng.integers(2, 7)))
        d_greedy = ranking_diversity(p, greedy_diverse_ranking(p, g), g) - base
        d_best = ranking_diversity(p, brute_force_diverse_ranking(p, g), g) - base
        ratios.append(1.0 if d_best <= 0 else d_greedy / d_best)
    ratios = np.array(ratios)
    elapsed = time.perf_counter() - t0
    share = float(np.mean(ratios > 0.95))
    ok = report("6", ratios.min() >= 1 / 3 and share >= 0.95 and elapsed < 60,
                f"greedy/optimal diversity over 200 instances: min {ratios.min():.4f} (>= 1/3), "
                f"share > 0.95 = {share:.3f} (>= 0.95); {elapsed:.1f} s")
    assert ok


def test_7_table_shape():
    t0 = time.perf_counter()
    table = run_table(BenchConfig(), n_samples=500, methods=METHODS)
    elapsed = time.perf_counter() - t0
    rows = {r["method"]: r for r in table.rows}
    problems = []
    for method, col, sense in (("utility", "utility", max), ("userfair", "user_fairness", max),
                             ("itemfair", "item_unfairness", min), ("diversity", "diversity", max)):
        best = sense(r[col] for r in rows.values())
        if (sense is max and rows[method][col] < best - 1e-6) or (sense is min and rows[method][col] > best + 1e-6):
            problems.append(f"{method} not best on {col}")
    if rows["tsfd"]["item_unfairness"] > 1e-6:
        problems.append(f"tsfd item_unfairness {rows['tsfd']['item_unfairness']:.2e}")
    for m, r in rows.items():
        if r["diversity"] > r["diversity_ub"] + 1e-9:
            problems.append(f"{m} diversity > ub")
        if r["user_fairness"] > r["utility"] + 1e-9:
            problems.append(f"{m} f^-1(UF) > U")
        if r["diversity"] > r["utility"] + 1e-9:
            problems.append(f"{m} g^-1(D) > U")
    if elapsed >= 600:
        problems.append(f"runtime {elapsed:.0f} s")
    n_ok = rows["tsfd"]["n_samples"]
    ok = report("7", not problems,
                f"summary-table shape on {n_ok}/500 samples ({rows['tsfd']['n_failed']} dropped): "
                + ("bold diagonal, tsfd item_unfairness "
                   f"{rows['tsfd']['item_unfairness']:.1e}, bound inequalities hold" if not problems else str(problems))
                + f"; {elapsed:.1f} s")
    assert ok, problems


@pytest.fixture(scope="module")
def sweeps():
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NotConvergedWarning)
        out = {
            "bias": run_sweep(BenchConfig(), "bias_b", [0.0, 0.2, 0.4, 0.6, 0.8, 1.0], "exposure_ratio",
                              n_samples=200, methods=["itemfair"]),
            "eta": run_sweep(BenchConfig(), "eta", [0.5, 1.0, 2.0], "ug_ratio", n_samples=200,
                             methods=["userfair"]),
            "s": run_sweep(BenchConfig(), "s", [0.0, 0.25, 0.5, 0.75, 1.0], "ug_ratio", n_samples=200,
                           methods=["userfair", "tsfd"]),
        }
    out["elapsed"] = time.perf_counter() - t0
    return out


def test_8a_bias_linear(sweeps):
    rows = sweeps["bias"].rows
    r2, resid = _r2([r["value"] for r in rows], [r["mean"] for r in rows])
    ok = report("8a", r2 > 0.999 and sweeps["elapsed"] < 900,
                f"itemfair exposure ratio vs bias: {[round(r['mean'], 4) for r in rows]}, "
                f"R^2 = {r2:.5f} (> 0.999), max residual {resid:.4f}")
    assert ok


def test_8b_eta_flat(sweeps):
    vals = [r["mean"] for r in sweeps["eta"].rows]
    spread = max(vals) - min(vals)
    ok = report("8b", spread < 0.02, f"userfair U_female/U_male over eta (0.5, 1, 2): "
                f"{[round(v, 4) for v in vals]}, spread {spread:.4f} (< 0.02)")
    assert ok


def test_8c_s_tracking(sweeps):
    by = {}
    for r in sweeps["s"].rows:
        by.setdefault(r["value"], {})[r["method"]] = r["mean"]
    gap = max(abs(v["tsfd"] - v["userfair"]) for v in by.values())
    ok = report("8c", gap <= 0.03 and sweeps["elapsed"] < 900,
                f"tsfd vs userfair U_female/U_male over s: max gap {gap:.4f} (<= 0.03); "
                f"all sweeps {sweeps['elapsed']:.0f} s")
    assert ok


@pytest.fixture(scope="module")
def strategies():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NotConvergedWarning)
        return compare_strategies(BenchConfig(), n_samples=100)


def test_9a_strategies_close_and_bounded(strategies):
    table, per = strategies
    rows = {r["matcher"]: r for r in table.rows}
    names = ["es0", "es1", "es2", "es3", "lsi", "lsni"]
    scaled = [rows[m]["diversity_scaled"] for m in names]
    spread = max(scaled) - min(scaled)
    ub = np.asarray(per["diversity_ub"])
    above = sum(int(np.any(np.asarray(per[m]) > ub + 1e-9)) for m in names)
    below = all(rows[m]["diversity"] <= rows["diversity_ub"]["diversity"] for m in names)
    ok = report("9a", spread < 0.01 and below and above == 0,
                f"strategy mean diversity (utility scale) { {m: round(v, 5) for m, v in zip(names, scaled)} }, "
                f"bound {rows['diversity_ub']['diversity_scaled']:.5f}; spread {spread:.2e} (< 0.01)")
    assert ok


def test_9b_es_monotone_per_sample(strategies):
    _, per = strategies
    es = np.array([per[f"es{l}"] for l in range(4)])
    drops = np.diff(es, axis=0)
    bad = int(np.sum(drops < -1e-12))
    ok = report("9b", bad == 0, f"ES diversity non-decreasing in level per sample: {bad} decreases over "
                f"{drops.size} level steps (largest {-drops.min():.2e})")
    assert ok


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-s"]))
