"""Model-input assembly and the tokenizer contract.

The generator consumes one flat string per bug:

    <bos> prefix buggy-tokens : context-tokens <eos>

where ``prefix`` is the language tag, buggy lines are joined with single spaces,
and ``:`` is an ordinary text token. The input budget (default 512) is enforced
by trimming context tokens from the right end; the buggy segment is only touched
in the inference path, and only when it alone would overflow the budget.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol

DEFAULT_MAX_INPUT = 512
DEFAULT_MAX_OUTPUT = 256


class TokenizerHandle(Protocol):
    """What the encoders need from a tokenizer.

    ``encode`` must be deterministic and must not add marker tokens itself.
    ``bos_id``/``eos_id`` may be None for tokenizers that cannot surface their
    marker ids (e.g. a remote tokenizer reached over the generator protocol); the
    marker cost is then accounted through ``reserved_overhead``.
    """

    bos_id: int | None
    eos_id: int | None
    pad_id: int | None
    unk_id: int | None
    reserved_overhead: int

    def encode(self, text: str) -> list[int]: ...

    def decode(self, ids: list[int]) -> str: ...


class WhitespaceTokenizer:
    """Trivial tokenizer: one id per whitespace-separated token.

    Ids are assigned in first-seen order, so a fixed sequence of encode calls
    always yields the same ids. ``decode`` skips marker ids, which makes
    decode(encode(t)) equal to t up to whitespace normalization.
    """

    bos_id = 0
    eos_id = 1
    pad_id = 2
    unk_id = 3
    reserved_overhead = 0

    def __init__(self) -> None:
        self._vocab: dict[str, int] = {"<s>": 0, "</s>": 1, "<pad>": 2, "<unk>": 3}
        self._tokens: list[str] = ["<s>", "</s>", "<pad>", "<unk>"]

    def encode(self, text: str) -> list[int]:
        ids = []
        for token in text.split():
            token_id = self._vocab.get(token)
            if token_id is None:
                token_id = len(self._tokens)
                self._vocab[token] = token_id
                self._tokens.append(token)
            ids.append(token_id)
        return ids

    def decode(self, ids: list[int]) -> str:
        markers = {self.bos_id, self.eos_id, self.pad_id}
        return " ".join(self._tokens[i] for i in ids if i not in markers)


@dataclass
class EncodedSample:
    """Tokenized input (and optionally target) with length bookkeeping.

    ``n`` counts buggy tokens, ``m`` context tokens kept after truncation.
    ``buggy_span`` is the [start, stop) slice of the buggy tokens inside
    ``input_ids``. ``input_text`` keeps the full built input string (before any
    truncation) for transports that ship text instead of ids.
    """

    input_ids: list[int]
    n: int
    m: int
    input_text: str
    buggy_span: tuple[int, int]
    target_ids: list[int] | None = None
    reserved: int = 0

    def budget_length(self) -> int:
        """Length charged against the input limit, counting reserved markers."""
        return len(self.input_ids) + self.reserved


@dataclass(frozen=True)
class TrainingRejection:
    """A training instance the encoder refused instead of truncating."""

    reason: str  # "input-too-long" | "target-too-long"


def join_hunk_lines(text_or_lines) -> str:
    """Concatenate hunk lines into one single-spaced string."""
    if isinstance(text_or_lines, str):
        lines = text_or_lines.splitlines()
    else:
        lines = list(text_or_lines)
    parts = [part for part in (line.strip() for line in lines) if part]
    return " ".join(parts)


def build_input(prefix: str, buggy_lines, context: str) -> str:
    """Assemble ``prefix buggy : context``; empty segments collapse cleanly."""
    if not prefix:
        raise ValueError("prefix must be non-empty")
    pieces = [prefix]
    joined = join_hunk_lines(buggy_lines)
    if joined:
        pieces.append(joined)
    pieces.append(":")
    context = context.strip()
    if context:
        pieces.append(context)
    return " ".join(pieces)


def _marker_ids(tokenizer) -> tuple[list[int], list[int]]:
    head = [tokenizer.bos_id] if tokenizer.bos_id is not None else []
    tail = [tokenizer.eos_id] if tokenizer.eos_id is not None else []
    return head, tail


def encode_for_inference(
    prefix: str,
    buggy_lines,
    context: str,
    tokenizer: TokenizerHandle,
    max_in: int = DEFAULT_MAX_INPUT,
) -> EncodedSample:
    """Encode an input, trimming context (never rejecting) to fit ``max_in``.

    If the prefix and buggy tokens alone overflow the budget, the context is
    dropped entirely and the buggy segment itself is right-truncated: benchmark
    bugs are never discarded.
    """
    text = build_input(prefix, buggy_lines, context)
    head, tail = _marker_ids(tokenizer)
    reserved = getattr(tokenizer, "reserved_overhead", 0)

    prefix_ids = tokenizer.encode(prefix)
    buggy_ids = tokenizer.encode(join_hunk_lines(buggy_lines))
    delim_ids = tokenizer.encode(":")
    context_ids = tokenizer.encode(context.strip()) if context.strip() else []

    budget = max_in - reserved - len(head) - len(tail) - len(prefix_ids) - len(delim_ids)
    if len(buggy_ids) > budget:
        buggy_ids = buggy_ids[: max(budget, 0)]
    kept = min(len(context_ids), budget - len(buggy_ids))
    kept = max(kept, 0)

    start = len(head) + len(prefix_ids)
    input_ids = head + prefix_ids + buggy_ids + delim_ids + context_ids[:kept] + tail
    return EncodedSample(
        input_ids=input_ids,
        n=len(buggy_ids),
        m=kept,
        input_text=text,
        buggy_span=(start, start + len(buggy_ids)),
        reserved=reserved,
    )


def encode_for_training(
    instance,
    tokenizer: TokenizerHandle,
    max_in: int = DEFAULT_MAX_INPUT,
    max_out: int = DEFAULT_MAX_OUTPUT,
) -> EncodedSample | TrainingRejection:
    """Encode a corpus instance, rejecting rather than truncating buggy/target.

    The target is tokenized on its own, with no prefix or context. Context is
    still the only segment that may be truncated.
    """
    head, tail = _marker_ids(tokenizer)
    reserved = getattr(tokenizer, "reserved_overhead", 0)

    prefix_ids = tokenizer.encode(instance.language)
    buggy_ids = tokenizer.encode(join_hunk_lines(instance.source))
    delim_ids = tokenizer.encode(":")
    overhead = reserved + len(head) + len(tail) + len(prefix_ids) + len(delim_ids)
    if overhead + len(buggy_ids) > max_in:
        return TrainingRejection("input-too-long")

    target_ids = tokenizer.encode(join_hunk_lines(instance.target))
    if len(target_ids) > max_out:
        return TrainingRejection("target-too-long")

    sample = encode_for_inference(
        instance.language, instance.source.splitlines(), instance.context, tokenizer, max_in
    )
    sample.target_ids = target_ids
    return sample
