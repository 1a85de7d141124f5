from .medals import Medal, MedalThresholds, classify_medal, load_leaderboard, load_thresholds, medal_counts
from .metrics import average_rank, dataset_ranks, relative_time, success_rate, summary_table, tie_average_ranks
from .records import MAAB_AGENTS, REFERENCE_AGENT, RunRecord, load_dataset_directions, load_run_records
from .scoring import DatasetMetadata, FormatError, UnsupportedMetricError, score_predictions

__all__ = [
    "MAAB_AGENTS",
    "REFERENCE_AGENT",
    "DatasetMetadata",
    "FormatError",
    "Medal",
    "MedalThresholds",
    "RunRecord",
    "UnsupportedMetricError",
    "average_rank",
    "classify_medal",
    "dataset_ranks",
    "load_dataset_directions",
    "load_leaderboard",
    "load_run_records",
    "load_thresholds",
    "medal_counts",
    "relative_time",
    "score_predictions",
    "success_rate",
    "summary_table",
    "tie_average_ranks",
]
