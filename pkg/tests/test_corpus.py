import json

from aprkit.corpus import (
    BugFixInstance,
    dedup_key,
    preprocess,
    read_corpus,
    write_corpus,
)
from aprkit.encoding import WhitespaceTokenizer

from synthesis import synthetic_corpus


def _inst(source, context="ctx()", target="fixed;", language="C"):
    return BugFixInstance(source=source, context=context, target=target, language=language)


class TestDedupKey:
    def test_whitespace_insensitive(self):
        a = BugFixInstance("a  b", "f()", "ab", "C")
        b = BugFixInstance("ab", "f ( )", "a b", "C")
        assert dedup_key(a) == dedup_key(b)

    def test_reflexive(self):
        a = _inst("x = 1;")
        assert dedup_key(a) == dedup_key(_inst("x = 1;"))

    def test_single_char_difference(self):
        assert dedup_key(_inst("x = 1;")) != dedup_key(_inst("x = 2;"))

    def test_fields_do_not_bleed_into_each_other(self):
        a = BugFixInstance("ab", "c", "d", "C")
        b = BugFixInstance("a", "bc", "d", "C")
        assert dedup_key(a) != dedup_key(b)


class TestPreprocess:
    def test_duplicates_collapse(self):
        corpus = [_inst("x  = 1;"), _inst("x =  1;")]
        kept, stats = preprocess(corpus, WhitespaceTokenizer())
        assert len(kept) == 1
        assert stats.after_dedup == 1

    def test_empty_target_dropped(self):
        kept, stats = preprocess([_inst("x = 1;", target="")], WhitespaceTokenizer())
        assert kept == []
        assert stats.after_identity_drop == 1
        assert stats.after_empty_target_drop == 0

    def test_oversized_source_dropped(self):
        long_source = " ".join(f"tok{i}" for i in range(600))
        kept, stats = preprocess([_inst(long_source)], WhitespaceTokenizer(), max_in=512)
        assert kept == []
        assert stats.after_empty_target_drop == 1
        assert stats.after_size_filter == 0

    def test_boundary_source_kept(self):
        # prefix "C" + 511 source tokens == 512 exactly
        source = " ".join(f"t{i}" for i in range(511))
        kept, _ = preprocess([_inst(source)], WhitespaceTokenizer(), max_in=512)
        assert len(kept) == 1

    def test_identity_modulo_comments_dropped(self):
        inst = _inst("x = 1; // tweak", target="x = 1;")
        kept, stats = preprocess([inst], WhitespaceTokenizer())
        assert kept == []
        assert stats.after_dedup == 1
        assert stats.after_identity_drop == 0

    def test_both_empty_dropped(self):
        kept, _ = preprocess([_inst("", target="")], WhitespaceTokenizer())
        assert kept == []

    def test_context_comments_untouched(self):
        inst = _inst("x = 1;", context="f() // keep me", target="x = 2;")
        kept, _ = preprocess([inst], WhitespaceTokenizer())
        assert kept[0].context == "f() // keep me"

    def test_first_occurrence_wins(self):
        first = _inst("x = 1;", target="y  = 2;")
        second = _inst("x  =  1;", target="y = 2;")
        kept, _ = preprocess([first, second], WhitespaceTokenizer())
        assert kept == [
            BugFixInstance("x = 1;", first.context, "y  = 2;", "C")
        ]

    def test_stats_monotone_and_idempotent(self):
        corpus = synthetic_corpus(800, seed=3)
        tokenizer = WhitespaceTokenizer()
        kept, stats = preprocess(corpus, tokenizer)
        counts = [
            stats.ingested,
            stats.after_comment_removal,
            stats.after_dedup,
            stats.after_identity_drop,
            stats.after_empty_target_drop,
            stats.after_size_filter,
        ]
        assert counts == sorted(counts, reverse=True)

        again, stats2 = preprocess(kept, tokenizer)
        assert again == kept
        assert stats2.removals() == 0

    def test_tokenizer_failure_is_diagnostic_not_fatal(self):
        class Exploding:
            def encode(self, text):
                raise RuntimeError("boom")

        kept, stats = preprocess([_inst("x = 1;")], Exploding())
        assert kept == []
        assert stats.tokenizer_failures == 1


def test_corpus_roundtrip(tmp_path):
    corpus = synthetic_corpus(50, seed=9)
    path = tmp_path / "corpus.jsonl"
    write_corpus(path, corpus)
    back = list(read_corpus(path))
    assert back == corpus
    # one JSON object per line with exactly the four fields
    first = json.loads(path.read_text().splitlines()[0])
    assert set(first) == {"source", "context", "target", "language"}
