from __future__ import annotations

import json
import time
from pathlib import Path

import pytest

from aprkit_adapter.training import TrainingRunConfig, finetune

# 10 bug-fix patterns over two languages, repeated to 50 instances: small
# enough for the tiny model to memorize, varied enough to train a tokenizer.
_PATTERNS = [
    ("Java", "return a - b ;", "int add(int a, int b) { return a - b ; }", "return a + b ;"),
    ("Java", "if ( x > 0 )", "void f(int x) { if ( x > 0 ) { g(); } }", "if ( x >= 0 )"),
    ("Java", "i = i - 1 ;", "void loop(int i) { i = i - 1 ; }", "i = i + 1 ;"),
    ("Java", "return null ;", "String name() { return null ; }", "return text ;"),
    ("Java", "x == y", "boolean same(int x, int y) { return x == y ; }", "x != y"),
    ("Python", "return num % 2 != 0", "def is_even(num): return num % 2 != 0", "return num % 2 == 0"),
    ("Python", "yield flatten(x)", "def flatten(arr): yield flatten(x)", "yield x"),
    ("Python", "count = count - 1", "def dec(count): count = count - 1", "count = count + 1"),
    ("Python", "if a < b :", "def cmp(a, b): pass", "if a <= b :"),
    ("Python", "return value", "def get(value): return value", "return other"),
]


def write_toy_corpus(path: Path, copies: int = 5) -> Path:
    records = []
    for language, source, context, target in _PATTERNS:
        for _ in range(copies):
            records.append(
                {"source": source, "context": context, "target": target,
                 "language": language}
            )
    path.write_text("\n".join(json.dumps(r) for r in records) + "\n", encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def toy_corpus(tmp_path_factory) -> Path:
    return write_toy_corpus(tmp_path_factory.mktemp("corpus") / "toy.jsonl")


@pytest.fixture(scope="session")
def toy_run(toy_corpus, tmp_path_factory):
    """One shared fine-tuning run: 50 instances, 1 epoch, save every 20%."""
    out_dir = tmp_path_factory.mktemp("run")
    config = TrainingRunConfig(epochs=1, save_fraction=0.2, batch_size=8, seed=0)
    started = time.perf_counter()
    result = finetune(toy_corpus, out_dir, config)
    elapsed = time.perf_counter() - started
    return result, out_dir, elapsed
