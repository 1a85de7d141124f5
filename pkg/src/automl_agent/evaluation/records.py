"""Run records and the shipped benchmark fixtures."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

# agents of the main results table, in its column order
MAAB_AGENTS = (
    "mlzero_def",
    "mlzero_8b",
    "mlzero_noext",
    "mlzero_noepi",
    "codex_def",
    "codex_rea",
    "aide_def",
    "aide_ext",
    "dsagent_def",
    "dsagent_zeroshot",
    "autokaggle_def",
)
REFERENCE_AGENT = "mlzero_def"
RUNS_PER_DATASET = 3


class FixtureError(ValueError):
    """A fixture file is malformed."""


@dataclass(frozen=True)
class RunRecord:
    agent: str
    dataset: str
    run_index: int
    metric_value: float | None
    higher_is_better: bool = True
    time_seconds: float | None = None

    @property
    def valid(self) -> bool:
        return self.metric_value is not None


def _read_text(path: str | Path | None, default_name: str) -> str:
    if path is None:
        return resources.files("automl_agent").joinpath(f"data/{default_name}").read_text()
    return Path(path).read_text()


def _optional_float(text: str, where: str) -> float | None:
    text = text.strip()
    if not text:
        return None
    try:
        return float(text)
    except ValueError as exc:
        raise FixtureError(f"{where}: not a number: {text!r}") from exc


def load_dataset_directions(path: str | Path | None = None) -> dict[str, bool]:
    """dataset -> higher_is_better, from a CSV with dataset,metric,higher_is_better."""
    rows = csv.DictReader(io.StringIO(_read_text(path, "maab_datasets.csv")))
    return {row["dataset"]: row["higher_is_better"].strip().lower() == "true" for row in rows}


def load_run_records(
    path: str | Path | None = None, directions: dict[str, bool] | None = None
) -> list[RunRecord]:
    """Parse a fixture CSV with header agent,dataset,run,value,time,valid.

    Error metrics (lower is better) are non-negative, but some source
    tables print them negated; their magnitudes are used.
    """
    directions = load_dataset_directions() if directions is None else directions
    reader = csv.DictReader(io.StringIO(_read_text(path, "maab_runs.csv")))
    expected = {"agent", "dataset", "run", "value", "time", "valid"}
    if reader.fieldnames is None or not expected <= set(reader.fieldnames):
        raise FixtureError(f"fixture header must contain {sorted(expected)}")
    records = []
    for line_no, row in enumerate(reader, start=2):
        where = f"line {line_no}"
        higher = directions.get(row["dataset"], True)
        value = _optional_float(row["value"], where)
        valid = row["valid"].strip().lower() == "true"
        if valid != (value is not None):
            raise FixtureError(f"{where}: valid flag disagrees with value")
        if value is not None and not higher:
            value = abs(value)
        records.append(
            RunRecord(
                agent=row["agent"],
                dataset=row["dataset"],
                run_index=int(row["run"]),
                metric_value=value,
                higher_is_better=higher,
                time_seconds=_optional_float(row["time"], where),
            )
        )
    return records


def write_run_records(records: list[RunRecord], path: str | Path) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["agent", "dataset", "run", "value", "time", "valid"])
        for r in records:
            writer.writerow(
                [
                    r.agent,
                    r.dataset,
                    r.run_index,
                    "" if r.metric_value is None else repr(r.metric_value),
                    "" if r.time_seconds is None else repr(r.time_seconds),
                    "true" if r.valid else "false",
                ]
            )
