"""Benchmark tables and parameter sweeps over sampled ranking problems.

Every sample is drawn from its own seed derived from the master seed and
the sample index, so results do not depend on how many worker processes run
or in which order samples finish.  Means are exact sums in index order.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .bench import BenchConfig, generate_universe, sample_problem, sample_seed
from .bvn import MatcherStrategy, decompose
from .exceptions import NotConvergedWarning, TSFDError
from .fairopt import FairOptConfig, ItemConstraint, UserFairness, solve_fair
from .functions import ConcaveFn, parse_concave
from .metrics import (
    evaluate,
    group_exposure,
    marginal_matrix,
    policy_diversity,
    diversity_upper_bound,
)
from .policies import DEFAULT_F, DEFAULT_G, METHODS, run_method

HEADLINE = ("utility", "item_unfairness", "user_fairness", "diversity", "diversity_ub")
SWEEP_AXES = {"s": "s", "rho_male": "rho_male", "bias_b": "bias", "eta": "eta", "n_intents": "n_intents"}
SWEEP_METRICS = ("ug_ratio", "exposure_ratio", "diversity_ratio", "fairness_ratio")


@dataclass
class Table:
    """Rows of results plus the configuration that produced them."""

    columns: list
    rows: list
    meta: dict = field(default_factory=dict)

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        for key in sorted(self.meta):
            buf.write(f"# {key}: {json.dumps(self.meta[key], sort_keys=True)}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(row.get(c, "")) for c in self.columns])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        return text

    def row(self, **match) -> dict:
        for r in self.rows:
            if all(r.get(k) == v for k, v in match.items()):
                return r
        raise KeyError(match)


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def read_csv(path) -> Table:
    """Parse a CSV written by :meth:`Table.to_csv`."""
    meta, body = {}, []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition(": ")
                try:
                    meta[key] = json.loads(val)
                except json.JSONDecodeError:
                    meta[key] = val
            elif line.strip():
                body.append(line)
    rows = list(csv.reader(body))
    if not rows:
        raise ValueError(f"{path}: no CSV header")
    columns, data = rows[0], rows[1:]
    out = []
    for r in data:
        if len(r) != len(columns):
            raise ValueError(f"{path}: row has {len(r)} fields, expected {len(columns)}")
        rec = {}
        for c, v in zip(columns, r):
            try:
                rec[c] = float(v)
            except ValueError:
                rec[c] = v
        out.append(rec)
    return Table(columns, out, meta)


# -- per-sample work -------------------------------------------------------------


@dataclass(frozen=True)
class _Job:
    config: BenchConfig
    methods: tuple
    f: dict
    g: dict
    matcher: str
    item_constraint: str


def _sample(job: _Job, index: int):
    """Metric columns of every method on sample ``index``, or the failure reason."""
    f, g = ConcaveFn.from_dict(job.f), ConcaveFn.from_dict(job.g)
    universe = _universe(job.config)
    problem = sample_problem(universe, job.config.sample_size, sample_seed(job.config.seed, index))
    out, nonconv = {}, 0
    try:
        for m in job.methods:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always", NotConvergedWarning)
                run = run_method(
                    problem, m, f, g, MatcherStrategy.parse(job.matcher),
                    item_constraint=ItemConstraint(job.item_constraint), seed=index,
                )
            nonconv += sum(issubclass(w.category, NotConvergedWarning) for w in caught)
            rep = evaluate(problem, run.policy, f, g, strict=False)
            cols = rep.columns(f, g)
            S = marginal_matrix(run.policy, problem.n)
            for dg in ("black", "white"):
                if dg in problem.item_group_ids:
                    cols[f"dg_exposure:{dg}"] = group_exposure(problem, S, dg)
            out[m] = cols
    except (TSFDError, ValueError) as exc:
        return index, None, f"{type(exc).__name__}: {exc}", nonconv
    return index, out, None, nonconv


_UNIVERSES: dict = {}


def _universe(config: BenchConfig):
    key = json.dumps(config.to_dict(), sort_keys=True)
    if key not in _UNIVERSES:
        _UNIVERSES.clear()
        _UNIVERSES[key] = generate_universe(config)
    return _UNIVERSES[key]


def _run_job(args):
    job, index = args
    return _sample(job, index)


def _collect(job: _Job, n_samples: int, workers: int):
    tasks = [(job, i) for i in range(n_samples)]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_job, tasks, chunksize=max(1, n_samples // (4 * workers))))
    else:
        results = [_run_job(t) for t in tasks]
    results.sort(key=lambda r: r[0])
    ok = [(i, rec) for i, rec, err, _ in results if rec is not None]
    failures = [(i, err) for i, rec, err, _ in results if rec is None]
    nonconv = sum(r[3] for r in results)
    return ok, failures, nonconv


def _mean_se(values):
    v = [x for x in values if x is not None and math.isfinite(x)]
    if not v:
        return math.nan, math.nan, 0
    mean = math.fsum(v) / len(v)
    if len(v) < 2:
        return mean, math.nan, len(v)
    var = math.fsum((x - mean) ** 2 for x in v) / (len(v) - 1)
    return mean, math.sqrt(var / len(v)), len(v)


def _fn_dict(fn) -> dict:
    return (fn if isinstance(fn, ConcaveFn) else parse_concave(fn)).to_dict()


# -- public entry points ---------------------------------------------------------


def run_table(
    config: BenchConfig = BenchConfig(),
    n_samples: int = 500,
    methods=METHODS,
    f: ConcaveFn = DEFAULT_F,
    g: ConcaveFn = DEFAULT_G,
    matcher: str = "lsi",
    item_constraint: str = "one_sided",
    workers: int = 1,
) -> Table:
    """Mean metrics (and standard errors) per method over benchmark samples.

    A sample on which any method fails is dropped for every method so that
    all rows average over the same samples; the drop count is recorded.
    """
    job = _Job(config, tuple(methods), _fn_dict(f), _fn_dict(g), str(matcher), str(item_constraint))
    ok, failures, nonconv = _collect(job, n_samples, workers)
    # averages must cover the same samples for every method
    for i, rec in list(ok):
        bad = [m for m in methods if any(not math.isfinite(rec[m][c]) for c in HEADLINE)]
        if bad:
            failures.append((i, f"user fairness undefined for {bad}"))
    ok = [(i, rec) for i, rec in ok if all(math.isfinite(rec[m][c]) for m in methods for c in HEADLINE)]
    failures.sort()
    group_cols = sorted({c for _, rec in ok for m in rec for c in rec[m] if ":" in c})
    columns = ["method", *HEADLINE, *group_cols, "n_samples", "n_failed"]
    columns += [f"se:{c}" for c in HEADLINE]
    rows = []
    for m in methods:
        row = {"method": m, "n_samples": len(ok), "n_failed": len(failures)}
        for c in (*HEADLINE, *group_cols):
            mean, se, _ = _mean_se([rec[m].get(c) for _, rec in ok])
            row[c] = mean
            if c in HEADLINE:
                row[f"se:{c}"] = se
        rows.append(row)
    meta = {
        "command": "table",
        "config": config.to_dict(),
        "f": job.f,
        "g": job.g,
        "matcher": job.matcher,
        "item_constraint": job.item_constraint,
        "requested_samples": n_samples,
        "non_converged_solves": nonconv,
        "failures": [f"{i}: {e}" for i, e in failures[:20]],
    }
    return Table(columns, rows, meta)


def sweep_metric(metric: str, rec: dict, m: str):
    """Per-sample ratio for ``metric`` (None when undefined on this sample)."""
    cols = rec[m]
    if metric == "ug_ratio":
        num, den = cols.get("ug_utility:female"), cols.get("ug_utility:male")
    elif metric == "exposure_ratio":
        num, den = cols.get("dg_exposure:black"), cols.get("dg_exposure:white")
    elif metric == "diversity_ratio":
        num, den = cols["diversity"], rec["diversity"]["diversity"]
    elif metric == "fairness_ratio":
        num, den = cols["user_fairness"], rec["userfair"]["user_fairness"]
    else:
        raise ValueError(f"unknown sweep metric {metric!r}")
    if num is None or den is None or not den or not (math.isfinite(num) and math.isfinite(den)):
        return None
    return num / den


def run_sweep(
    config: BenchConfig,
    axis: str,
    values,
    metric: str,
    n_samples: int = 200,
    methods=METHODS,
    f: ConcaveFn = DEFAULT_F,
    g: ConcaveFn = DEFAULT_G,
    matcher: str = "lsi",
    item_constraint: str = "one_sided",
    workers: int = 1,
) -> Table:
    """One row per (axis value, method) with the mean of a per-sample ratio.

    ``ug_ratio`` is female over male user-group utility, ``exposure_ratio``
    black-lead over white-lead per-item exposure; ``diversity_ratio`` and
    ``fairness_ratio`` divide each method's scaled diversity or user
    fairness by that of the diversity or user-fairness specialist on the
    same sample.  Samples where a ratio is undefined (e.g. no black-lead
    movie drawn) are left out of that mean; ``n_samples`` counts the rest.
    """
    if axis not in SWEEP_AXES:
        raise ValueError(f"axis must be one of {sorted(SWEEP_AXES)}")
    if metric not in SWEEP_METRICS:
        raise ValueError(f"metric must be one of {SWEEP_METRICS}")
    needed = list(methods)
    for extra, want in (("diversity", "diversity_ratio"), ("userfair", "fairness_ratio")):
        if metric == want and extra not in needed:
            needed.append(extra)
    rows, failed, nonconv_total = [], {}, 0
    for v in values:
        cfg = config.replace(**{SWEEP_AXES[axis]: type(getattr(config, SWEEP_AXES[axis]))(v)})
        job = _Job(cfg, tuple(needed), _fn_dict(f), _fn_dict(g), str(matcher), str(item_constraint))
        ok, failures, nonconv = _collect(job, n_samples, workers)
        failed[str(v)] = len(failures)
        nonconv_total += nonconv
        for m in methods:
            value, se, cnt = _mean_se([sweep_metric(metric, rec, m) for _, rec in ok])
            rows.append(
                {"axis": axis, "value": float(v), "method": m, "metric": metric,
                 "mean": value, "se": se, "n_samples": cnt, "n_failed": len(failures)}
            )
    meta = {
        "command": "sweep",
        "config": config.to_dict(),
        "axis": axis,
        "values": [float(v) for v in values],
        "metric": metric,
        "f": _fn_dict(f),
        "g": _fn_dict(g),
        "matcher": str(matcher),
        "requested_samples": n_samples,
        "non_converged_solves": nonconv_total,
        "failed_per_value": failed,
    }
    columns = ["axis", "value", "method", "metric", "mean", "se", "n_samples", "n_failed"]
    return Table(columns, rows, meta)


def compare_strategies(
    config: BenchConfig = BenchConfig(),
    n_samples: int = 100,
    matchers=("es0", "es1", "es2", "es3", "lsi", "lsni"),
    f: ConcaveFn = DEFAULT_F,
    g: ConcaveFn = DEFAULT_G,
    item_constraint: str = "one_sided",
) -> tuple[Table, dict]:
    """Decompose each sample's TSFD marginal matrix with every matcher.

    Returns the mean-diversity table (plus the bound) and the per-sample
    diversities keyed by matcher name.
    """
    universe = generate_universe(config)
    per = {m: [] for m in matchers}
    per["diversity_ub"] = []
    skipped = 0
    for i in range(n_samples):
        problem = sample_problem(universe, config.sample_size, sample_seed(config.seed, i))
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", NotConvergedWarning)
                res = solve_fair(problem, FairOptConfig(UserFairness(f), ItemConstraint(item_constraint)))
            divs = {
                m: policy_diversity(problem, decompose(problem, res.sigma, g, m, seed=i), g)
                for m in matchers
            }
        except (TSFDError, ValueError):
            skipped += 1
            continue
        for m, d in divs.items():
            per[m].append(d)
        per["diversity_ub"].append(diversity_upper_bound(problem, res.sigma, g))
    rows = []
    for m in (*matchers, "diversity_ub"):
        mean, se, cnt = _mean_se(per[m])
        rows.append({"matcher": m, "diversity": mean, "diversity_scaled": float(g.inverse(mean)),
                     "se": se, "n_samples": cnt, "n_failed": skipped})
    meta = {"command": "strategies", "config": config.to_dict(), "g": g.to_dict(), "f": f.to_dict()}
    return Table(["matcher", "diversity", "diversity_scaled", "se", "n_samples", "n_failed"], rows, meta), per
