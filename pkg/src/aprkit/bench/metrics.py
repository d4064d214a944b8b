"""Evaluation metrics: exact match, BLEU, the tuning objective, and the
patch-level rates reported per benchmark.

BLEU here is corpus-style with n-gram order 4, a brevity penalty against the
closest reference length, and additive smoothing that floors zero n-gram counts
at 0.1. Report headers record these parameters.
"""

from __future__ import annotations

import math
from collections import Counter
from typing import Iterable, Sequence

from ..ranking import normalize_patch_text

BLEU_ORDER = 4
BLEU_SMOOTHING_FLOOR = 0.1

DEFAULT_THRESHOLDS = (1, 5, 10, 100, 200)


def exact_match(pred: str, ref: str) -> int:
    """1 iff pred equals ref after whitespace normalization."""
    return int(normalize_patch_text(pred) == normalize_patch_text(ref))


def _ngrams(tokens: Sequence[str], order: int) -> Counter:
    return Counter(
        tuple(tokens[i : i + order]) for i in range(len(tokens) - order + 1)
    )


def _closest_ref_length(hyp_len: int, ref_lengths: Sequence[int]) -> int:
    return min(ref_lengths, key=lambda r: (abs(r - hyp_len), r))


def corpus_bleu(
    predictions: Sequence[str], references: Sequence[Sequence[str]]
) -> float:
    """Aggregate clipped n-gram counts over all pairs, then score once."""
    correct = [0] * BLEU_ORDER
    total = [0] * BLEU_ORDER
    hyp_len = 0
    ref_len = 0

    for pred, refs in zip(predictions, references):
        hyp_tokens = pred.split()
        ref_tokens_list = [ref.split() for ref in refs]
        hyp_len += len(hyp_tokens)
        if ref_tokens_list:
            ref_len += _closest_ref_length(
                len(hyp_tokens), [len(r) for r in ref_tokens_list]
            )
        for order in range(1, BLEU_ORDER + 1):
            hyp_counts = _ngrams(hyp_tokens, order)
            if not hyp_counts:
                continue
            clip: Counter = Counter()
            for ref_tokens in ref_tokens_list:
                ref_counts = _ngrams(ref_tokens, order)
                for gram, count in ref_counts.items():
                    clip[gram] = max(clip[gram], count)
            correct[order - 1] += sum(
                min(count, clip[gram]) for gram, count in hyp_counts.items()
            )
            total[order - 1] += len(hyp_tokens) - order + 1

    if hyp_len == 0:
        return 0.0
    log_sum = 0.0
    effective = 0
    for matches, possible in zip(correct, total):
        if possible == 0:
            continue
        effective += 1
        numerator = matches if matches > 0 else BLEU_SMOOTHING_FLOOR
        log_sum += math.log(numerator / possible)
    if effective == 0:
        return 0.0
    brevity = 1.0 if hyp_len >= ref_len else math.exp(1.0 - ref_len / hyp_len)
    return 100.0 * brevity * math.exp(log_sum / effective)


def bleu(pred: str, refs: Sequence[str]) -> float:
    """Single-pair BLEU in [0, 100]."""
    return corpus_bleu([pred], [list(refs)])


def objective_metric(exact_match_rate: float, bleu_score: float) -> float:
    """Tuning objective: exact-match rate scaled to [0, 100] plus BLEU."""
    return exact_match_rate * 100.0 + bleu_score


def compilable_rate(reports: Iterable, x: int) -> float:
    """Mean over bugs of the compilable fraction among the top-``x`` candidates.

    Each report needs ``candidate_verdicts`` (position -> verdict) and
    ``synthetic_positions`` (injected empty-patch positions, excluded from both
    counts). A candidate counts as compilable if its verdict is anything but
    compile_error. Bugs with no counted candidates in the window are skipped.
    """
    rates = []
    for report in reports:
        verdicts = report.candidate_verdicts
        synthetic = set(report.synthetic_positions)
        window = [
            verdict
            for position, verdict in sorted(verdicts.items())
            if position <= x and position not in synthetic
        ]
        if not window:
            continue
        compiled = sum(1 for verdict in window if verdict != "compile_error")
        rates.append(compiled / len(window))
    return sum(rates) / len(rates) if rates else 0.0


def ranking_thresholds(reports: Iterable, thresholds: Sequence[int]) -> dict[int, int]:
    """Per threshold X, the number of bugs whose correct patch ranks <= X.

    ``reports`` may be plain positions (int or None) or objects with a
    ``correct_position`` attribute.
    """
    positions = []
    for report in reports:
        if report is None or isinstance(report, int):
            positions.append(report)
        else:
            positions.append(report.correct_position)
    return {
        threshold: sum(1 for p in positions if p is not None and p <= threshold)
        for threshold in thresholds
    }
