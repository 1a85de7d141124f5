"""Medal classification against per-competition leaderboard thresholds."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path


class Medal(str, Enum):
    GOLD = "Gold"
    SILVER = "Silver"
    BRONZE = "Bronze"
    ABOVE_MEDIAN = "AboveMedian"
    BELOW_MEDIAN = "BelowMedian"


@dataclass(frozen=True)
class MedalThresholds:
    dataset_id: str
    gold: float
    silver: float
    bronze: float
    median: float
    higher_is_better: bool = True
    name: str = ""

    def __post_init__(self) -> None:
        levels = [self.gold, self.silver, self.bronze, self.median]
        ordered = levels == sorted(levels, reverse=self.higher_is_better)
        if not ordered:
            raise ValueError(f"{self.dataset_id}: thresholds are not ordered best to worst")


def classify_medal(value: float, thresholds: MedalThresholds, negated_input: bool = False) -> Medal:
    """Highest level that ``value`` meets or beats.

    With ``negated_input``, lower-is-better values arrive sign-flipped (as in
    leaderboards that negate error metrics) and are restored first.
    """
    if negated_input and not thresholds.higher_is_better:
        value = -value

    def reaches(level: float) -> bool:
        return value >= level if thresholds.higher_is_better else value <= level

    for level, medal in (
        (thresholds.gold, Medal.GOLD),
        (thresholds.silver, Medal.SILVER),
        (thresholds.bronze, Medal.BRONZE),
        (thresholds.median, Medal.ABOVE_MEDIAN),
    ):
        if reaches(level):
            return medal
    return Medal.BELOW_MEDIAN


def _text(path: str | Path | None, name: str) -> str:
    if path is None:
        return resources.files("automl_agent").joinpath(f"data/{name}").read_text()
    return Path(path).read_text()


def load_thresholds(path: str | Path | None = None) -> dict[str, MedalThresholds]:
    rows = csv.DictReader(io.StringIO(_text(path, "mlebench_thresholds.csv")))
    return {
        row["dataset_id"]: MedalThresholds(
            dataset_id=row["dataset_id"],
            gold=float(row["gold"]),
            silver=float(row["silver"]),
            bronze=float(row["bronze"]),
            median=float(row["median"]),
            higher_is_better=row["higher_is_better"].strip().lower() == "true",
            name=row.get("name", ""),
        )
        for row in rows
    }


@dataclass(frozen=True)
class LeaderboardEntry:
    method: str
    dataset_id: str
    value: float | None  # None when the method produced no valid submission
    highlight: str = "none"


def load_leaderboard(path: str | Path | None = None) -> list[LeaderboardEntry]:
    rows = csv.DictReader(io.StringIO(_text(path, "mlebench_results.csv")))
    return [
        LeaderboardEntry(
            row["method"],
            row["dataset_id"],
            float(row["value"]) if row["value"].strip() else None,
            row.get("highlight", "none") or "none",
        )
        for row in rows
    ]


def medal_counts(
    entries: list[LeaderboardEntry], thresholds: dict[str, MedalThresholds], method: str
) -> dict[str, int]:
    """Medal tallies plus the number of valid submissions for one method."""
    counts = {medal.value: 0 for medal in Medal}
    valid = 0
    for entry in entries:
        if entry.method != method or entry.value is None:
            continue
        valid += 1
        counts[classify_medal(entry.value, thresholds[entry.dataset_id], negated_input=True).value] += 1
    counts["valid"] = valid
    counts["total"] = sum(1 for e in entries if e.method == method)
    return counts
