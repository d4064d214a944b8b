"""Benchmark ingestion, end-to-end evaluation runs, and reported metrics."""

from .localize import HunkLocation, NoChangeError, localize_from_diff, localize_from_texts
from .metrics import (
    bleu,
    compilable_rate,
    corpus_bleu,
    exact_match,
    objective_metric,
    ranking_thresholds,
)
from .run import incremental_checkpoint_analysis

__all__ = [
    "HunkLocation",
    "NoChangeError",
    "localize_from_diff",
    "localize_from_texts",
    "bleu",
    "corpus_bleu",
    "exact_match",
    "objective_metric",
    "compilable_rate",
    "ranking_thresholds",
    "incremental_checkpoint_analysis",
]
