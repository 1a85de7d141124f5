"""Benchmark aggregates: success rate, relative time and average rank."""

from __future__ import annotations

from collections import defaultdict
from statistics import fmean
from typing import Iterable, Sequence

from .records import RUNS_PER_DATASET, RunRecord

INVALID_POLICIES = ("tie_average", "worst")


def _datasets(records: Iterable[RunRecord]) -> list[str]:
    return sorted({r.dataset for r in records})


def success_rate(records: Sequence[RunRecord], agent: str, datasets: Sequence[str] | None = None) -> float:
    """Percentage of dataset-run slots with a valid result (missing rows are failures)."""
    datasets = list(datasets) if datasets is not None else _datasets(records)
    if not datasets:
        return 0.0
    wanted = set(datasets)
    valid = {(r.dataset, r.run_index) for r in records if r.agent == agent and r.valid and r.dataset in wanted}
    return 100.0 * len(valid) / (len(datasets) * RUNS_PER_DATASET)


def mean_valid_times(records: Iterable[RunRecord], agent: str) -> dict[str, float]:
    """Per dataset, the mean time over the agent's valid runs that have a time."""
    times: dict[str, list[float]] = defaultdict(list)
    for r in records:
        if r.agent == agent and r.valid and r.time_seconds is not None:
            times[r.dataset].append(r.time_seconds)
    return {d: fmean(ts) for d, ts in times.items()}


def relative_time(records: Sequence[RunRecord], agent: str, reference_agent: str) -> float | None:
    """Mean per-dataset time ratio against the reference; None when no dataset is shared."""
    mine = mean_valid_times(records, agent)
    ref = mean_valid_times(records, reference_agent)
    common = sorted(d for d in mine if d in ref and ref[d] > 0)
    if not common:
        return None
    return fmean(mine[d] / ref[d] for d in common)


def tie_average_ranks(scores: dict[str, float], higher_is_better: bool) -> dict[str, float]:
    """1-based ranks, best first; tied scores share the mean of their positions."""
    ordered = sorted(scores.items(), key=lambda kv: -kv[1] if higher_is_better else kv[1])
    ranks: dict[str, float] = {}
    i = 0
    while i < len(ordered):
        j = i
        while j + 1 < len(ordered) and ordered[j + 1][1] == ordered[i][1]:
            j += 1
        shared = (i + 1 + j + 1) / 2
        for name, _ in ordered[i:j + 1]:
            ranks[name] = shared
        i = j + 1
    return ranks


def dataset_ranks(
    records: Sequence[RunRecord],
    dataset: str,
    agents: Sequence[str],
    *,
    invalid_policy: str = "tie_average",
    decimals: int | None = None,
) -> dict[str, float]:
    """Rank every agent on one dataset by its mean valid score."""
    if invalid_policy not in INVALID_POLICIES:
        raise ValueError(f"invalid_policy must be one of {INVALID_POLICIES}")
    values: dict[str, list[float]] = defaultdict(list)
    higher = True
    for r in records:
        if r.dataset == dataset:
            higher = r.higher_is_better
            if r.agent in agents and r.valid:
                values[r.agent].append(r.metric_value)
    scores = {}
    for agent, vs in values.items():
        score = fmean(vs)
        scores[agent] = round(score, decimals) if decimals is not None else score
    ranks = tie_average_ranks(scores, higher)
    n, n_valid = len(agents), len(scores)
    invalid = [a for a in agents if a not in scores]
    bottom = (n_valid + 1 + n) / 2 if invalid_policy == "tie_average" else float(n)
    for agent in invalid:
        ranks[agent] = bottom
    return ranks


def average_rank(
    records: Sequence[RunRecord],
    agents: Sequence[str],
    *,
    datasets: Sequence[str] | None = None,
    invalid_policy: str = "tie_average",
    decimals: int | None = None,
) -> dict[str, float]:
    """Mean over datasets of each agent's per-dataset rank."""
    agents = list(agents)
    datasets = list(datasets) if datasets is not None else _datasets(records)
    if not datasets:
        raise ValueError("no datasets to rank")
    totals = {a: 0.0 for a in agents}
    for dataset in datasets:
        for agent, rank in dataset_ranks(
            records, dataset, agents, invalid_policy=invalid_policy, decimals=decimals
        ).items():
            totals[agent] += rank
    return {a: totals[a] / len(datasets) for a in agents}


def summary_table(
    records: Sequence[RunRecord],
    agents: Sequence[str],
    reference_agent: str,
    *,
    invalid_policy: str = "tie_average",
    decimals: int | None = 2,
) -> list[dict]:
    """One row per agent with success, average rank and relative time."""
    ranks = average_rank(records, agents, invalid_policy=invalid_policy, decimals=decimals)
    datasets = _datasets(records)
    rows = []
    for agent in agents:
        rows.append(
            {
                "agent": agent,
                "success": success_rate(records, agent, datasets),
                "avg_rank": ranks[agent],
                "rel_time": relative_time(records, agent, reference_agent),
            }
        )
    return rows
