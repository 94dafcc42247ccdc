"""Exhaustive search for the least risky placement of deployable devices."""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Mapping

from .analysis import DEFAULT_K, RiskScore, enumerate_proofs, score
from .errors import EnumerationLimitExceeded, NoDeploymentVariables
from .scenario import NetworkModel
from .temporal import evaluate_schedule

DEFAULT_LIMIT = 10**6

Placement = Mapping[str, str]


@dataclass(frozen=True)
class DeploymentReport:
    assignments: tuple[tuple[Placement, RiskScore], ...]  # safest first
    best: Placement
    best_score: RiskScore
    total_evaluated: int


def placements(model: NetworkModel) -> list[dict[str, str]]:
    """Cartesian product of candidate zones, devices sorted by name."""
    dvs = sorted(model.deployment_vars, key=lambda d: d.device)
    return [
        {dv.device: zone for dv, zone in zip(dvs, combo)}
        for combo in itertools.product(*(dv.candidates for dv in dvs))
    ]


def placement_rank(model: NetworkModel, placement: Placement) -> tuple[int, ...]:
    """Tie-break key: zone declaration index per device, devices sorted by name."""
    dvs = sorted(model.deployment_vars, key=lambda d: d.device)
    return tuple(dv.candidates.index(placement[dv.device]) for dv in dvs)


def evaluate_placement(model: NetworkModel, placement: Placement, k: int = DEFAULT_K) -> RiskScore:
    result = evaluate_schedule(model, placement)
    return score(result, enumerate_proofs(result, result.graph, k), k)


def _evaluate(args: tuple[NetworkModel, dict[str, str], int]) -> RiskScore:
    return evaluate_placement(*args)


def optimize_deployment(
    model: NetworkModel,
    k: int = DEFAULT_K,
    limit: int = DEFAULT_LIMIT,
    workers: int = 1,
) -> DeploymentReport:
    """Score every placement and pick the safest.

    Ties go to the placement that comes first with devices sorted by name and
    zones in declaration order. ``workers > 1`` fans the evaluations out to a
    process pool; the report is identical either way.
    """
    if not model.deployment_vars:
        raise NoDeploymentVariables("model declares no deployable devices")
    size = math.prod(len(dv.candidates) for dv in model.deployment_vars)
    if size > limit:
        raise EnumerationLimitExceeded(size, limit)

    combos = placements(model)
    jobs = [(model, p, k) for p in combos]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            scores = list(pool.map(_evaluate, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        scores = [_evaluate(j) for j in jobs]

    order = sorted(range(len(combos)), key=lambda i: (scores[i], placement_rank(model, combos[i])))
    ranked = tuple((combos[i], scores[i]) for i in order)
    return DeploymentReport(
        assignments=ranked,
        best=ranked[0][0],
        best_score=ranked[0][1],
        total_evaluated=len(combos),
    )
