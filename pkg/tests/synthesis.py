"""Deterministic synthetic corpora and candidate lists for tests."""

from __future__ import annotations

import random

from aprkit.corpus import BugFixInstance
from aprkit.generation import CandidatePatch

LANGS = ("Java", "Python", "C", "JavaScript")

_NAMES = ("count", "total", "items", "index", "value", "result", "buffer", "node")
_OPS = ("+", "-", "*", "==", "!=", "<", "<=")


def _line(rng: random.Random) -> str:
    left = rng.choice(_NAMES)
    right = rng.choice(_NAMES)
    op = rng.choice(_OPS)
    return f"{left} = {left} {op} {right};"


def _snippet(rng: random.Random, max_lines: int = 3) -> str:
    return "\n".join(_line(rng) for _ in range(rng.randint(1, max_lines)))


def _with_comment(code: str, language: str, rng: random.Random) -> str:
    marker = "#" if language == "Python" else "//"
    lines = code.splitlines()
    i = rng.randrange(len(lines))
    lines[i] = f"{lines[i]} {marker} note {rng.randint(0, 9)}"
    return "\n".join(lines)


def _respace(code: str, rng: random.Random) -> str:
    out = []
    for ch in code:
        if ch == " " and rng.random() < 0.5:
            out.append("  \t"[: rng.randint(1, 3)])
        else:
            out.append(ch)
    return "".join(out)


def synthetic_corpus(count: int, seed: int = 0) -> list[BugFixInstance]:
    """Mixed corpus: plain instances plus duplicates, no-ops, empty targets,
    comment-only diffs, and oversized sources, in deterministic proportions."""
    rng = random.Random(seed)
    instances: list[BugFixInstance] = []
    for i in range(count):
        language = rng.choice(LANGS)
        roll = rng.random()
        if roll < 0.10 and instances:
            donor = rng.choice(instances)
            instances.append(
                BugFixInstance(
                    source=_respace(donor.source, rng),
                    context=_respace(donor.context, rng),
                    target=_respace(donor.target, rng),
                    language=donor.language,
                )
            )
            continue
        source = _snippet(rng)
        context = f"void f{i % 97}() {{ {' '.join(source.splitlines())} }}"
        if roll < 0.15:
            # no-op: source == target, sometimes hidden behind comments
            target = _with_comment(source, language, rng) if rng.random() < 0.5 else source
            instances.append(BugFixInstance(source, context, target, language))
        elif roll < 0.20:
            instances.append(BugFixInstance(source, context, "", language))
        elif roll < 0.23:
            oversized = " ".join(_line(rng) for _ in range(200))  # ~600 tokens
            instances.append(BugFixInstance(oversized, context, _snippet(rng), language))
        else:
            target = _snippet(rng)
            if rng.random() < 0.3:
                source = _with_comment(source, language, rng)
            instances.append(BugFixInstance(source, context, target, language))
    return instances


_WORDS = ("fix", "patch", "null", "check", "guard", "retry", "close", "flush")


def random_beams(rng: random.Random, k_max: int = 5, t_max: int = 20):
    """Random per-checkpoint candidate lists with frequent text collisions and
    occasional score ties, plus the source text they target."""
    k = rng.randint(1, k_max)
    source = " ".join(rng.sample(_WORDS, rng.randint(1, 3)))
    beams = []
    for _ in range(k):
        t = rng.randint(0, t_max)
        scores = sorted((round(-rng.uniform(0, 2), 2) for _ in range(t)), reverse=True)
        beam = []
        for rank, score in enumerate(scores, start=1):
            n_words = rng.randint(0, 3)
            text = " ".join(rng.choice(_WORDS) for _ in range(n_words))
            if rng.random() < 0.1:
                text = source  # exercise the identical-to-source drop
            if rng.random() < 0.3:
                text = "  ".join(text.split())  # whitespace noise
            beam.append(CandidatePatch(text=text, checkpoint=None, rank=rank, score=score))
        beams.append(beam)
    return beams, source


def beams_as_dicts(beams):
    return [[{"text": c.text, "score": c.score} for c in beam] for beam in beams]
