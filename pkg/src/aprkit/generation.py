"""Patch generators and the checkpoint-ensemble fan-out.

A generator handle wraps one checkpoint and turns an encoded sample into a beam
of scored candidate patches. The deterministic mock generator lets the whole
pipeline run without a neural model; external generator processes are reached
through :mod:`aprkit.protocol`.
"""

from __future__ import annotations

import logging
import random
import re
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Protocol, Sequence

from .encoding import EncodedSample, WhitespaceTokenizer

log = logging.getLogger(__name__)

DEFAULT_CHECKPOINTS = 5
DEFAULT_BEAM = 100


@dataclass(frozen=True)
class EnsembleConfig:
    """k checkpoints, beam size t per checkpoint."""

    k: int = DEFAULT_CHECKPOINTS
    t: int = DEFAULT_BEAM

    def __post_init__(self) -> None:
        if self.k < 1 or self.t < 1:
            raise ValueError(f"k and t must be >= 1, got k={self.k} t={self.t}")


@dataclass
class CandidatePatch:
    """Generated patch text with its origin and beam bookkeeping.

    ``checkpoint`` is None (and ``score`` is None) only for the synthetic empty
    patch injected by ranking; generated candidates always carry a finite score.
    """

    text: str
    checkpoint: int | None
    rank: int
    score: float | None

    def to_record(self) -> dict:
        return {
            "text": self.text,
            "checkpoint": self.checkpoint,
            "rank": self.rank,
            "score": self.score,
        }

    @classmethod
    def from_record(cls, record: dict) -> "CandidatePatch":
        return cls(
            text=record["text"],
            checkpoint=record.get("checkpoint"),
            rank=record.get("rank", 0),
            score=record.get("score"),
        )


class GeneratorHandle(Protocol):
    """One checkpoint's generator: deterministic for a fixed handle and input."""

    checkpoint: int

    def generate(self, sample: EncodedSample, beam: int) -> list[CandidatePatch]: ...


_IDENTIFIER = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")

_FLIPS = {
    "-": "+",
    "+": "-",
    "==": "!=",
    "!=": "==",
    "<": "<=",
    "<=": "<",
    ">": ">=",
    ">=": ">",
    "*": "/",
    "/": "*",
    "&&": "||",
    "||": "&&",
    "and": "or",
    "or": "and",
    "true": "false",
    "false": "true",
    "True": "False",
    "False": "True",
}

_MAX_SWAP_SOURCES = 4


def _rule_edits(buggy: str, context: str, rng: random.Random) -> list[str]:
    """Candidate texts from single rule-based edits, operator flips first."""
    tokens = buggy.split()

    flips = []
    for i, token in enumerate(tokens):
        if token in _FLIPS:
            flips.append(" ".join(tokens[:i] + [_FLIPS[token]] + tokens[i + 1 :]))

    context_ids = []
    buggy_set = set(tokens)
    for match in _IDENTIFIER.finditer(context):
        name = match.group()
        if name not in buggy_set and name not in context_ids:
            context_ids.append(name)
    swaps = []
    for i, token in enumerate(tokens):
        if not _IDENTIFIER.fullmatch(token):
            continue
        for replacement in context_ids[:_MAX_SWAP_SOURCES]:
            swaps.append(" ".join(tokens[:i] + [replacement] + tokens[i + 1 :]))

    drops = []
    for i in range(len(tokens)):
        drops.append(" ".join(tokens[:i] + tokens[i + 1 :]))
    if tokens:
        drops.append("")

    rest = swaps + drops
    rng.shuffle(rest)
    ordered = flips + rest

    unique = []
    seen = set()
    for text in ordered:
        if text in seen:
            continue
        seen.add(text)
        unique.append(text)
    return unique


def _segments(sample: EncodedSample, tokenizer) -> tuple[str, str]:
    """Recover (buggy, context) text from an encoded sample's spans."""
    start, stop = sample.buggy_span
    buggy = tokenizer.decode(sample.input_ids[start:stop])
    context_ids = sample.input_ids[stop + 1 : stop + 1 + sample.m]
    context = tokenizer.decode(context_ids)
    return buggy, context


def split_wire_input(input_text: str) -> tuple[str, str]:
    """Split a built input string into (buggy, context) at the first ' : '."""
    head, sep, context = input_text.partition(" : ")
    if not sep:
        head, context = input_text.rstrip(" :"), ""
    tokens = head.split()
    buggy = " ".join(tokens[1:])  # first token is the language prefix
    return buggy, context.strip()


def mock_generate(
    sample: EncodedSample,
    t: int,
    seed: int,
    checkpoint: int = 0,
    tokenizer=None,
) -> list[CandidatePatch]:
    """Derive up to ``t`` candidates by rule-based edits of the buggy segment.

    Fully deterministic in (sample, t, seed): the rng is seeded from the seed,
    the checkpoint, and the buggy text. Scores are synthetic, strictly
    decreasing in rank. Pass the tokenizer that produced the sample to recover
    the segments from the ids; without it the built input text is re-parsed.
    """
    if tokenizer is not None:
        buggy, context = _segments(sample, tokenizer)
    else:
        buggy, context = split_wire_input(sample.input_text)
    return _mock_from_texts(buggy, context, t, seed, checkpoint)


def _mock_from_texts(
    buggy: str, context: str, t: int, seed: int, checkpoint: int
) -> list[CandidatePatch]:
    digest = zlib.crc32(buggy.encode("utf-8"))
    rng = random.Random(seed * 1_000_003 + checkpoint * 7919 + digest)
    texts = _rule_edits(buggy, context, rng)[:t]
    candidates = []
    for i, text in enumerate(texts):
        # jitter < 0.1 keeps scores strictly decreasing across ranks
        score = -0.1 * (i + 1) + rng.uniform(0.0, 0.04)
        candidates.append(
            CandidatePatch(text=text, checkpoint=checkpoint, rank=i + 1, score=score)
        )
    return candidates


class MockGenerator:
    """Deterministic in-process generator backed by the rule-based mock."""

    def __init__(self, checkpoint: int = 0, seed: int = 0, tokenizer=None) -> None:
        self.checkpoint = checkpoint
        self.seed = seed
        self.tokenizer = tokenizer

    def generate(self, sample: EncodedSample, beam: int) -> list[CandidatePatch]:
        return mock_generate(
            sample, beam, self.seed, checkpoint=self.checkpoint, tokenizer=self.tokenizer
        )

    def generate_from_text(self, input_text: str, beam: int) -> list[CandidatePatch]:
        """Protocol-server path: parse ``prefix buggy : context`` directly."""
        buggy, context = split_wire_input(input_text)
        return _mock_from_texts(buggy, context, beam, self.seed, self.checkpoint)


def generate_ensemble(
    sample: EncodedSample,
    generators: Sequence[GeneratorHandle],
    config: EnsembleConfig,
) -> list[list[CandidatePatch]]:
    """Fan a sample out to k generators; one beam list per checkpoint.

    A failing generator yields an empty list (logged) and the ensemble proceeds
    with the remaining checkpoints. Each returned list is sorted by descending
    score with ranks 1..len and the ensemble index stamped as the checkpoint.
    """
    if len(generators) != config.k:
        raise ValueError(f"expected {config.k} generators, got {len(generators)}")

    def _run(generator: GeneratorHandle) -> list[CandidatePatch]:
        return generator.generate(sample, config.t)

    with ThreadPoolExecutor(max_workers=config.k) as pool:
        futures = [pool.submit(_run, gen) for gen in generators]
        results: list[list[CandidatePatch]] = []
        for index, future in enumerate(futures):
            try:
                beam = list(future.result())
            except Exception as exc:
                log.warning("generator %d failed: %s", index, exc)
                beam = []
            beam.sort(key=lambda c: -(c.score if c.score is not None else float("inf")))
            for position, cand in enumerate(beam):
                cand.rank = position + 1
                cand.checkpoint = index
            results.append(beam[: config.t])
    return results
