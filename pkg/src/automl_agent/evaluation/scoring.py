"""Score a results file against ground truth under strict format rules."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

KNOWN_METRICS = (
    "rmse",
    "f1",
    "auroc",
    "mase",
    "iou",
    "recall@10",
    "r2",
    "accuracy",
    "s_alpha",
    "f1_weighted",
)


class FormatError(ValueError):
    """The results file does not follow the required output format."""


class UnsupportedMetricError(ValueError):
    """The metric is known but has no scorer here."""


@dataclass(frozen=True)
class DatasetMetadata:
    dataset_name: str
    metric_name: str
    problem_type: str
    label_column: str
    modality: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.metric_name not in KNOWN_METRICS:
            raise ValueError(f"unknown metric {self.metric_name!r}; expected one of {KNOWN_METRICS}")

    @classmethod
    def from_json(cls, path: str | Path) -> "DatasetMetadata":
        data = json.loads(Path(path).read_text())
        expected = {"dataset_name", "metric_name", "problem_type", "label_column", "modality"}
        if set(data) != expected:
            raise ValueError(f"metadata keys must be exactly {sorted(expected)}, got {sorted(data)}")
        return cls(
            data["dataset_name"],
            data["metric_name"].lower(),
            data["problem_type"],
            data["label_column"],
            tuple(data["modality"]),
        )


def _read(path: Path) -> pd.DataFrame:
    sep = "\t" if path.suffix.lower() == ".tsv" else ","
    if path.suffix.lower() not in (".csv", ".tsv"):
        raise FormatError(f"unsupported results format {path.suffix!r}")
    return pd.read_csv(path, sep=sep)


def _positive_label(truth: pd.Series):
    labels = sorted(pd.unique(truth).tolist(), key=str)
    if set(labels) <= {0, 1}:
        return 1
    return labels[-1]


def _rmse(y_true, y_pred) -> float:
    return float(np.sqrt(np.mean((np.asarray(y_true, float) - np.asarray(y_pred, float)) ** 2)))


def _sklearn(name: str, **kwargs):
    def score(y_true, y_pred) -> float:
        from sklearn import metrics  # imported lazily; it is slow to load

        return float(getattr(metrics, name)(y_true, y_pred, **kwargs))

    return score


def _binary_f1(y_true, y_pred) -> float:
    return _sklearn("f1_score", pos_label=_positive_label(y_true))(y_true, y_pred)


_SCORERS = {
    "rmse": _rmse,
    "r2": _sklearn("r2_score"),
    "accuracy": _sklearn("accuracy_score"),
    "f1_weighted": _sklearn("f1_score", average="weighted"),
    "f1": _binary_f1,
}


def score_predictions(
    results_file: str | Path, ground_truth: str | Path, metadata: DatasetMetadata
) -> float:
    """Check the results file's structure against the truth, then compute the metric."""
    results_path, truth_path = Path(results_file), Path(ground_truth)
    if not results_path.is_file():
        raise FormatError(f"results file {results_path} does not exist")
    if results_path.suffix.lower() != truth_path.suffix.lower():
        raise FormatError(
            f"results extension {results_path.suffix!r} differs from test data {truth_path.suffix!r}"
        )
    if metadata.metric_name not in _SCORERS:
        raise UnsupportedMetricError(f"metric {metadata.metric_name!r} is not supported")

    results, truth = _read(results_path), _read(truth_path)
    prefixed = [c for c in results.columns if str(c).startswith("predicted_")]
    if prefixed:
        raise FormatError(f"columns must not carry a 'predicted_' prefix: {prefixed}")
    if set(results.columns) != set(truth.columns):
        missing = sorted(set(truth.columns) - set(results.columns))
        extra = sorted(set(results.columns) - set(truth.columns))
        raise FormatError(f"column-name mismatch: missing {missing}, unexpected {extra}")
    if metadata.label_column not in truth.columns:
        raise FormatError(f"label column {metadata.label_column!r} absent from ground truth")
    if len(results) != len(truth):
        raise FormatError(f"row-count mismatch: {len(results)} predictions for {len(truth)} rows")

    y_true = truth[metadata.label_column]
    y_pred = results[metadata.label_column]
    if y_pred.isna().any():
        raise FormatError("predictions contain missing values")
    return _SCORERS[metadata.metric_name](y_true, y_pred)
