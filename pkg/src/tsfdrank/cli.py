"""Command-line interface.

Exit codes: 0 success, 2 invalid input (malformed or degenerate problem,
undefined objective, unsatisfiable constraints), 3 solver did not reach the
requested duality gap (output is still written).
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

from . import __version__
from .bench import BenchConfig, fixture, generate_universe, sample_problem, sample_seed
from .bvn import MatcherStrategy
from .core import validate
from .exceptions import NotConvergedWarning, TSFDError
from .experiments import SWEEP_AXES, SWEEP_METRICS, compare_strategies, run_sweep, run_table
from .fairopt import ItemConstraint
from .functions import parse_concave
from .io import load_policy, load_problem, save_policy, save_problem
from .metrics import evaluate
from .plot import plot
from .policies import METHODS, run_method

EXIT_INVALID = 2
EXIT_NOT_CONVERGED = 3
MATCHERS = ("lsi", "lsni", "es0", "es1", "es2", "es3", "utility")


def _bench_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with benchmark settings; flags override it")
    p.add_argument("--seed", type=int)
    p.add_argument("--s", type=float, help="intent similarity of the two user groups")
    p.add_argument("--rho", type=float, help="proportion of male users")
    p.add_argument("--eta", type=float, help="exposure steepness")
    p.add_argument("--bias", type=float, help="relevance boost of black-lead movies")
    p.add_argument("--n-intents", type=int)


def _bench_config(args) -> BenchConfig:
    base = {}
    if args.config:
        base = json.loads(Path(args.config).read_text(encoding="utf-8"))
        if "rating_range" in base:
            base["rating_range"] = tuple(base["rating_range"])
    for flag, name in (("seed", "seed"), ("s", "s"), ("rho", "rho_male"), ("eta", "eta"),
                       ("bias", "bias"), ("n_intents", "n_intents")):
        v = getattr(args, flag)
        if v is not None:
            base[name] = v
    return BenchConfig(**base)


def _fg_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--f", default="log:-0.6", help="user-fairness function, e.g. log:-0.6 or pwl:4,1;0.95")
    p.add_argument("--g", default="log:0.0001", help="diversity function")


def _merit(text):
    return None if text is None else {str(k): float(v) for k, v in json.loads(text).items()}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tsfdrank", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate-dataset", help="write the benchmark universe or one sample")
    _bench_args(p)
    p.add_argument("--sample-index", type=int, help="write this 15-item sample instead of the universe")
    p.add_argument("--out", required=True)

    p = sub.add_parser("fixture", help="write a hand-built problem and its expected outcomes")
    p.add_argument("--name", required=True, choices=("fig1", "ex2", "ex3", "ex4"))
    p.add_argument("--out", required=True)

    p = sub.add_parser("rank", help="compute a ranking policy for a problem file")
    p.add_argument("--method", required=True, choices=METHODS)
    p.add_argument("--problem", required=True)
    p.add_argument("--out", required=True)
    _fg_args(p)
    p.add_argument("--matcher", default="lsi", choices=MATCHERS)
    p.add_argument("--constraint", default="one_sided", choices=[c.value for c in ItemConstraint])
    p.add_argument("--merit", help='JSON map of item-group merits, e.g. \'{"DG1": 1, "DG2": 1}\'')
    p.add_argument("--max-iter", type=int, default=2000)
    p.add_argument("--gap-tol", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--allow-degenerate", action="store_true")

    p = sub.add_parser("evaluate", help="print the metrics of a policy as a CSV row")
    p.add_argument("--problem", required=True)
    p.add_argument("--policy", required=True)
    p.add_argument("--label", default=None)
    p.add_argument("--merit")
    _fg_args(p)

    p = sub.add_parser("table", help="mean metrics of all methods over benchmark samples")
    _bench_args(p)
    p.add_argument("--samples", type=int, default=500)
    p.add_argument("--methods", default=",".join(METHODS))
    p.add_argument("--matcher", default="lsi", choices=MATCHERS)
    p.add_argument("--workers", type=int, default=1)
    _fg_args(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("sweep", help="ratio metrics along one benchmark parameter")
    _bench_args(p)
    p.add_argument("--axis", required=True, choices=sorted(SWEEP_AXES))
    p.add_argument("--values", required=True, help="comma-separated axis values")
    p.add_argument("--metric", required=True, choices=SWEEP_METRICS)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--methods", default=",".join(METHODS))
    p.add_argument("--matcher", default="lsi", choices=MATCHERS)
    p.add_argument("--workers", type=int, default=1)
    _fg_args(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("strategies", help="compare decomposition matchers on TSFD solutions")
    _bench_args(p)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--matchers", default="es0,es1,es2,es3,lsi,lsni")
    _fg_args(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("plot", help="render a result CSV as SVG")
    p.add_argument("--csv", required=True)
    p.add_argument("--kind", required=True, choices=("lines", "bars"))
    p.add_argument("--metric", default="utility", help="column to draw for bar charts")
    p.add_argument("--out", required=True)
    return ap


def _cmd_generate(args) -> int:
    config = _bench_config(args)
    universe = generate_universe(config)
    if args.sample_index is not None:
        universe = sample_problem(universe, config.sample_size, sample_seed(config.seed, args.sample_index))
    save_problem(universe, args.out)
    return 0


def _cmd_fixture(args) -> int:
    problem, expected = fixture(args.name)
    save_problem(problem, args.out)
    side = Path(args.out).with_suffix(".expected.json")
    side.write_text(json.dumps(expected, indent=1, default=float), encoding="utf-8")
    return 0


def _cmd_rank(args) -> int:
    problem = load_problem(args.problem)
    report = validate(problem)
    if report and not args.allow_degenerate:
        for line in report:
            print(f"degenerate problem: {line}", file=sys.stderr)
        return EXIT_INVALID
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", NotConvergedWarning)
        run = run_method(
            problem,
            args.method,
            parse_concave(args.f),
            parse_concave(args.g),
            MatcherStrategy.parse(args.matcher),
            item_constraint=ItemConstraint(args.constraint),
            merit=_merit(args.merit),
            max_iterations=args.max_iter,
            duality_gap_tol=args.gap_tol,
            seed=args.seed,
        )
    save_policy(problem, run.policy, args.out)
    if run.solve is not None:
        print(
            f"objective={run.solve.objective_value!r} gap={run.solve.duality_gap!r} "
            f"iterations={run.solve.iterations} violation={run.solve.constraint_violation!r}",
            file=sys.stderr,
        )
    if any(issubclass(w.category, NotConvergedWarning) for w in caught):
        print(f"warning: {caught[-1].message}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return 0


def _cmd_evaluate(args) -> int:
    problem = load_problem(args.problem)
    policy = load_policy(problem, args.policy)
    f, g = parse_concave(args.f), parse_concave(args.g)
    cols = evaluate(problem, policy, f, g, _merit(args.merit)).columns(f, g)
    label = args.label or Path(args.policy).stem
    print(",".join(["method", *cols]))
    print(",".join([label, *(repr(float(v)) for v in cols.values())]))
    return 0


def _methods(text: str) -> list:
    methods = [m.strip() for m in text.split(",") if m.strip()]
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise ValueError(f"unknown methods {bad}")
    return methods


def _cmd_table(args) -> int:
    table = run_table(
        _bench_config(args), args.samples, _methods(args.methods),
        parse_concave(args.f), parse_concave(args.g), args.matcher, workers=args.workers,
    )
    table.to_csv(args.out)
    return 0


def _cmd_sweep(args) -> int:
    values = [float(v) for v in args.values.split(",")]
    table = run_sweep(
        _bench_config(args), args.axis, values, args.metric, args.samples, _methods(args.methods),
        parse_concave(args.f), parse_concave(args.g), args.matcher, workers=args.workers,
    )
    table.to_csv(args.out)
    return 0


def _cmd_strategies(args) -> int:
    matchers = tuple(m.strip() for m in args.matchers.split(",") if m.strip())
    for m in matchers:
        MatcherStrategy.parse(m)
    table, _ = compare_strategies(
        _bench_config(args), args.samples, matchers, parse_concave(args.f), parse_concave(args.g)
    )
    table.to_csv(args.out)
    return 0


def _cmd_plot(args) -> int:
    plot(args.csv, args.kind, args.out, args.metric)
    return 0


COMMANDS = {
    "generate-dataset": _cmd_generate,
    "fixture": _cmd_fixture,
    "rank": _cmd_rank,
    "evaluate": _cmd_evaluate,
    "table": _cmd_table,
    "sweep": _cmd_sweep,
    "strategies": _cmd_strategies,
    "plot": _cmd_plot,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (TSFDError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
