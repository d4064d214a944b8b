"""Ensemble combine and multi-hunk reduction.

The combine order is total and reproducible: ascending in-checkpoint rank, then
descending score, then ascending checkpoint index. All text comparisons happen
on whitespace-normalized text. Every combined list ends up with exactly one
empty patch (deletion); if none was generated, a synthetic one is prepended with
no checkpoint and no score, and it is excluded from score statistics downstream.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

from .generation import CandidatePatch


def normalize_patch_text(text: str) -> str:
    """Collapse whitespace runs to single spaces and trim the ends."""
    return " ".join(text.split())


@dataclass
class RankedPatchList:
    """Validation-ordered candidates for one buggy hunk (or one multi-hunk bug)."""

    entries: list[CandidatePatch]
    source_text: str

    def __len__(self) -> int:
        return len(self.entries)

    def texts(self) -> list[str]:
        return [entry.text for entry in self.entries]

    def position_of(self, text: str) -> int | None:
        """1-based position of a normalized text, or None."""
        wanted = normalize_patch_text(text)
        for entry in self.entries:
            if entry.text == wanted:
                return entry.rank
        return None

    def synthetic_positions(self) -> set[int]:
        """Positions of injected (non-generated) entries."""
        return {e.rank for e in self.entries if e.checkpoint is None}

    def to_records(self) -> list[dict]:
        records = []
        for entry in self.entries:
            record = {"position": entry.rank, "text": entry.text}
            if entry.checkpoint is not None:
                record["checkpoint"] = entry.checkpoint
            if entry.score is not None:
                record["score"] = entry.score
            records.append(record)
        return records

    @classmethod
    def from_records(cls, records, source_text: str) -> "RankedPatchList":
        entries = [
            CandidatePatch(
                text=r["text"],
                checkpoint=r.get("checkpoint"),
                rank=r["position"],
                score=r.get("score"),
            )
            for r in records
        ]
        return cls(entries=entries, source_text=source_text)


def combine(
    per_checkpoint: Sequence[Sequence[CandidatePatch]], source_text: str
) -> RankedPatchList:
    """Merge per-checkpoint beams into one deduplicated, validation-ordered list.

    Steps, in order: normalize all texts; sort globally by (rank, -score,
    checkpoint); drop entries identical to the normalized source; deduplicate
    keeping the earliest; prepend an empty patch if none survived.
    """
    norm_source = normalize_patch_text(source_text)

    merged: list[tuple[int, float, int, CandidatePatch]] = []
    for checkpoint_index, beam in enumerate(per_checkpoint):
        for position, cand in enumerate(beam):
            merged.append((position + 1, -cand.score, checkpoint_index, cand))
    merged.sort(key=lambda item: (item[0], item[1], item[2]))

    entries: list[CandidatePatch] = []
    seen: set[str] = set()
    for _rank, _neg, checkpoint_index, cand in merged:
        text = normalize_patch_text(cand.text)
        if text == norm_source or text in seen:
            continue
        seen.add(text)
        origin = cand.checkpoint if cand.checkpoint is not None else checkpoint_index
        entries.append(CandidatePatch(text=text, checkpoint=origin, rank=0, score=cand.score))

    if "" not in seen:
        entries.insert(0, CandidatePatch(text="", checkpoint=None, rank=0, score=None))
    for position, entry in enumerate(entries):
        entry.rank = position + 1
    return RankedPatchList(entries=entries, source_text=source_text)


def reduce_multi_hunk(per_hunk: Sequence[RankedPatchList]) -> RankedPatchList:
    """Keep patches present in every hunk's list, ordered by max score.

    The empty patch always survives (each combined list has one) and stays
    pinned at position 1. Survivors carry the score and checkpoint of the entry
    that attained the maximum, earliest hunk winning ties; equal keys fall back
    to the first hunk's order, then to the text itself. The resulting single
    list is applied identically to all hunks downstream.
    """
    if len(per_hunk) < 2:
        raise ValueError("multi-hunk reduction needs at least two hunks")

    common: set[str] | None = None
    for ranked in per_hunk:
        texts = {entry.text for entry in ranked.entries}
        common = texts if common is None else common & texts

    best: dict[str, CandidatePatch] = {}
    for ranked in per_hunk:
        for entry in ranked.entries:
            if entry.text == "" or entry.text not in common:
                continue
            current = best.get(entry.text)
            if current is None or entry.score > current.score:
                best[entry.text] = entry

    first_order = {entry.text: i for i, entry in enumerate(per_hunk[0].entries)}
    survivors = sorted(
        best.values(), key=lambda e: (-e.score, first_order[e.text], e.text)
    )

    entries = [CandidatePatch(text="", checkpoint=None, rank=1, score=None)]
    for position, entry in enumerate(survivors, start=2):
        entries.append(
            CandidatePatch(
                text=entry.text, checkpoint=entry.checkpoint, rank=position, score=entry.score
            )
        )
    return RankedPatchList(entries=entries, source_text=per_hunk[0].source_text)


def write_ranked(path, ranked: RankedPatchList) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for record in ranked.to_records():
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")


def read_ranked(path, source_text: str = "") -> RankedPatchList:
    records = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return RankedPatchList.from_records(records, source_text)
