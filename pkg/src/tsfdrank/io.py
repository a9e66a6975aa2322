"""JSON problem and policy files.

Floats are written with Python's shortest round-trip representation, so a
load after a save reproduces every field bit for bit.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .core import Ranking, RankingPolicy, RankingProblem, UserGroup
from .exceptions import ProblemError


def problem_to_dict(problem: RankingProblem) -> dict:
    return {
        "items": [{"id": d, "group": g} for d, g in zip(problem.items, problem.item_groups)],
        "intents": list(problem.intents),
        "relevance": problem.relevance.tolist(),
        "user_groups": [
            {"id": ug.id, "proportion": ug.proportion, "intent_dist": ug.intent_dist.tolist()}
            for ug in problem.user_groups
        ],
        "exposure": problem.exposure.tolist(),
    }


def problem_from_dict(d: dict) -> RankingProblem:
    try:
        items = d["items"]
        return RankingProblem(
            items=[it["id"] for it in items],
            item_groups=[it["group"] for it in items],
            intents=d["intents"],
            relevance=np.asarray(d["relevance"], dtype=float),
            user_groups=[
                UserGroup(ug["id"], ug["proportion"], np.asarray(ug["intent_dist"], dtype=float))
                for ug in d["user_groups"]
            ],
            exposure=np.asarray(d["exposure"], dtype=float),
        )
    except (KeyError, TypeError) as exc:
        raise ProblemError(f"malformed problem document: {exc}") from exc


def save_problem(problem: RankingProblem, path) -> None:
    Path(path).write_text(json.dumps(problem_to_dict(problem), indent=1), encoding="utf-8")


def load_problem(path) -> RankingProblem:
    return problem_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def policy_to_dict(problem: RankingProblem, policy: RankingPolicy) -> dict:
    return {
        "rankings": [[problem.items[m] for m in r.order] for r in policy.rankings],
        "weights": list(policy.weights),
    }


def policy_from_dict(problem: RankingProblem, d: dict) -> RankingPolicy:
    index = {d_: m for m, d_ in enumerate(problem.items)}
    try:
        rankings = [Ranking.from_order([index[str(x)] for x in order]) for order in d["rankings"]]
    except KeyError as exc:
        raise ProblemError(f"policy refers to unknown item {exc}") from exc
    return RankingPolicy(tuple(rankings), tuple(d["weights"]))


def save_policy(problem: RankingProblem, policy: RankingPolicy, path) -> None:
    Path(path).write_text(json.dumps(policy_to_dict(problem, policy), indent=1), encoding="utf-8")


def load_policy(problem: RankingProblem, path) -> RankingPolicy:
    return policy_from_dict(problem, json.loads(Path(path).read_text(encoding="utf-8")))
