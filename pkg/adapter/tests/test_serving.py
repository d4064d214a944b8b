import sys

import pytest

from aprkit.protocol import ProcessTransport, run_conformance

from aprkit_adapter.serving import CheckpointBackend, handle_message


def _serve_cmd(checkpoint_dir) -> list[str]:
    return [
        sys.executable, "-m", "aprkit_adapter", "serve", str(checkpoint_dir),
        "--max-new-tokens", "16",
    ]


@pytest.fixture(scope="module")
def backend(toy_run):
    _result, out_dir, _elapsed = toy_run
    return CheckpointBackend(out_dir / "checkpoint1", max_new_tokens=16)


class TestBackend:
    def test_hello_fields(self, backend):
        reply = handle_message(backend, '{"op": "hello"}')
        assert reply["checkpoint"] == 0
        assert reply["max_in"] == 512
        assert reply["max_out"] == 256
        assert reply["overhead"] >= 1

    def test_generate_sorted_and_bounded(self, backend):
        pairs = backend.generate_text("Java return a - b ; : int add(int a, int b) { }", 3)
        assert 0 < len(pairs) <= 3
        scores = [score for _text, score in pairs]
        assert scores == sorted(scores, reverse=True)

    def test_generate_deterministic(self, backend):
        first = backend.generate_text("Python yield flatten(x) :", 2)
        second = backend.generate_text("Python yield flatten(x) :", 2)
        assert first == second

    def test_tokenize_roundtrippable_ids(self, backend):
        ids = backend.tokenize_text("return x")
        assert ids and all(isinstance(i, int) for i in ids)
        assert backend.tokenizer.decode(ids).strip() == "return x"

    def test_malformed_messages(self, backend):
        assert "error" in handle_message(backend, "not json")
        assert "error" in handle_message(backend, '{"op": "nope"}')
        assert "error" in handle_message(backend, '{"op": "generate"}')


def test_conformance_over_stdio(toy_run):
    _result, out_dir, _elapsed = toy_run
    with ProcessTransport(_serve_cmd(out_dir / "checkpoint1"), timeout=120) as transport:
        assert run_conformance(transport) == []


def test_each_checkpoint_serves_its_index(toy_run):
    _result, out_dir, _elapsed = toy_run
    for index in (1, 5):
        with ProcessTransport(_serve_cmd(out_dir / f"checkpoint{index}"), timeout=120) as t:
            assert t.request({"op": "hello"})["checkpoint"] == index - 1
