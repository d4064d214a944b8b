"""Corpus reading and prompt assembly.

The corpus file format is the pipeline's export: UTF-8, one JSON record per
line with fields {source, context, target, language}. Training inputs follow
the same shape the pipeline ships over the wire at inference time:

    <language> <buggy lines joined by single spaces> : <context>

Targets are the fixed lines, joined the same way, with no prefix or context.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path


@dataclass(frozen=True)
class TrainingPair:
    input_text: str
    target_text: str
    language: str


def join_lines(text: str) -> str:
    parts = [part for part in (line.strip() for line in text.splitlines()) if part]
    return " ".join(parts)


def build_prompt(language: str, source: str, context: str) -> str:
    pieces = [language]
    joined = join_lines(source)
    if joined:
        pieces.append(joined)
    pieces.append(":")
    context = context.strip()
    if context:
        pieces.append(context)
    return " ".join(pieces)


def read_training_pairs(corpus_path) -> list[TrainingPair]:
    pairs = []
    with open(corpus_path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            pairs.append(
                TrainingPair(
                    input_text=build_prompt(
                        record["language"], record["source"], record.get("context", "")
                    ),
                    target_text=join_lines(record["target"]),
                    language=record["language"],
                )
            )
    if not pairs:
        raise ValueError(f"no training instances in {corpus_path}")
    return pairs
