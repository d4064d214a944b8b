"""Bug-fix corpus ingestion and the five-stage preprocessing pipeline.

Corpus files are UTF-8, one JSON record per line with fields
{source, context, target, language}. Instances are stored verbatim; cleaning
happens only inside :func:`preprocess`, in this fixed order:

  1. comment removal on source and target (context untouched)
  2. whitespace-insensitive deduplication, first occurrence wins
  3. drop instances whose source equals target ignoring whitespace
  4. drop instances with an empty target
  5. drop instances whose prefix+source or target exceed the token budgets

Stage order matters: comment removal must precede stage 3 so that instances
differing only in comments are recognized as no-ops. Stages 1/3/4/5 are pure
per-instance and may be sharded; stage 2 must see instances in ingestion order
for first-wins determinism.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .comments import remove_comments
from .encoding import DEFAULT_MAX_INPUT, DEFAULT_MAX_OUTPUT, join_hunk_lines
from .languages import UnknownLanguageError, normalize_language

_WS_ONLY = str.maketrans("", "", " \t\r\n")

# Separator for dedup keys: whitespace is stripped from every field, so a
# newline can never collide with field content.
_KEY_SEP = "\n"


@dataclass(frozen=True)
class BugFixInstance:
    """One training triple: buggy hunk, enclosing context, fixed hunk."""

    source: str
    context: str
    target: str
    language: str

    @classmethod
    def from_record(cls, record: dict) -> "BugFixInstance":
        return cls(
            source=record["source"],
            context=record.get("context", ""),
            target=record["target"],
            language=normalize_language(record["language"]),
        )

    def to_record(self) -> dict:
        return {
            "source": self.source,
            "context": self.context,
            "target": self.target,
            "language": self.language,
        }


@dataclass
class CorpusStats:
    """Instance counts after each preprocessing stage, plus diagnostics."""

    ingested: int = 0
    after_comment_removal: int = 0
    after_dedup: int = 0
    after_identity_drop: int = 0
    after_empty_target_drop: int = 0
    after_size_filter: int = 0
    comment_failures: int = 0
    tokenizer_failures: int = 0

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    def removals(self) -> int:
        return self.ingested - self.after_size_filter


def strip_all_whitespace(text: str) -> str:
    return text.translate(_WS_ONLY)


def dedup_key(instance: BugFixInstance) -> str:
    """Canonical key: equal iff (source, context, target) match modulo whitespace."""
    return _KEY_SEP.join(
        (
            strip_all_whitespace(instance.source),
            strip_all_whitespace(instance.context),
            strip_all_whitespace(instance.target),
        )
    )


def preprocess(
    corpus: Iterable[BugFixInstance],
    tokenizer,
    max_in: int = DEFAULT_MAX_INPUT,
    max_out: int = DEFAULT_MAX_OUTPUT,
) -> tuple[list[BugFixInstance], CorpusStats]:
    """Run the five cleaning stages over ``corpus`` in ingestion order.

    Instances that fail comment removal or tokenization are rejected and counted
    in the diagnostics fields; they never abort the run.
    """
    stats = CorpusStats()

    cleaned: list[BugFixInstance] = []
    for instance in corpus:
        stats.ingested += 1
        try:
            source = remove_comments(instance.source, instance.language)
            target = remove_comments(instance.target, instance.language)
        except UnknownLanguageError:
            stats.comment_failures += 1
            continue
        cleaned.append(
            BugFixInstance(source, instance.context, target, instance.language)
        )
    stats.after_comment_removal = len(cleaned)

    seen: set[str] = set()
    unique: list[BugFixInstance] = []
    for instance in cleaned:
        key = dedup_key(instance)
        if key in seen:
            continue
        seen.add(key)
        unique.append(instance)
    stats.after_dedup = len(unique)

    changed = [
        inst
        for inst in unique
        if strip_all_whitespace(inst.source) != strip_all_whitespace(inst.target)
    ]
    stats.after_identity_drop = len(changed)

    nonempty = [inst for inst in changed if strip_all_whitespace(inst.target)]
    stats.after_empty_target_drop = len(nonempty)

    kept: list[BugFixInstance] = []
    for instance in nonempty:
        try:
            source_text = join_hunk_lines(instance.source)
            prefixed = f"{instance.language} {source_text}" if source_text else instance.language
            n_in = len(tokenizer.encode(prefixed))
            n_out = len(tokenizer.encode(join_hunk_lines(instance.target)))
        except Exception:
            stats.tokenizer_failures += 1
            continue
        if n_in <= max_in and n_out <= max_out:
            kept.append(instance)
    stats.after_size_filter = len(kept)

    return kept, stats


def read_corpus(path) -> Iterator[BugFixInstance]:
    """Yield instances from a line-delimited corpus file; malformed lines raise."""
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            yield BugFixInstance.from_record(json.loads(line))


def write_corpus(path, instances: Iterable[BugFixInstance]) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as handle:
        for instance in instances:
            handle.write(json.dumps(instance.to_record(), ensure_ascii=False) + "\n")
            count += 1
    return count
