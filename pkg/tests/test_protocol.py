import subprocess
import sys

import pytest

from aprkit.encoding import WhitespaceTokenizer, encode_for_inference
from aprkit.protocol import (
    HttpTransport,
    ProcessTransport,
    ProtocolError,
    RemoteGenerator,
    WireTokenizer,
    run_conformance,
)

SERVER = [sys.executable, "-m", "aprkit.mock_server", "--checkpoint", "2", "--seed", "5"]


@pytest.fixture
def transport():
    with ProcessTransport(SERVER, timeout=30) as t:
        yield t


@pytest.fixture
def http_transport():
    proc = subprocess.Popen(
        SERVER + ["--http", "0"], stdout=subprocess.PIPE, text=True
    )
    try:
        port = int(proc.stdout.readline())
        yield HttpTransport(f"http://127.0.0.1:{port}/", timeout=30)
    finally:
        proc.kill()
        proc.wait()


def test_hello(transport):
    reply = transport.request({"op": "hello"})
    assert reply == {"checkpoint": 2, "max_in": 512, "max_out": 256, "overhead": 2}


def test_conformance_over_stdio(transport):
    assert run_conformance(transport) == []


def test_conformance_over_http(http_transport):
    assert run_conformance(http_transport) == []


def test_malformed_keeps_connection(transport):
    assert "error" in transport.request({"op": "nope"})
    assert "error" in transport.request({"not even": "an op"})
    assert transport.request({"op": "hello"})["checkpoint"] == 2


def test_generate_echoes_id_and_sorts(transport):
    reply = transport.request(
        {"op": "generate", "id": "abc", "input": "C return a - b : int f() {}", "beam": 5}
    )
    assert reply["id"] == "abc"
    scores = [c["score"] for c in reply["candidates"]]
    assert len(scores) <= 5
    assert scores == sorted(scores, reverse=True)


def test_remote_generator_handle(transport):
    generator = RemoteGenerator(transport)
    assert generator.checkpoint == 2
    sample = encode_for_inference(
        "C", ["return a - b"], "int f(int a, int b) {}", WhitespaceTokenizer()
    )
    candidates = generator.generate(sample, beam=4)
    assert 0 < len(candidates) <= 4
    assert [c.rank for c in candidates] == list(range(1, len(candidates) + 1))
    assert all(c.checkpoint == 2 for c in candidates)
    # same request twice: deterministic handle
    again = generator.generate(sample, beam=4)
    assert [(c.text, c.score) for c in candidates] == [(c.text, c.score) for c in again]


def test_wire_tokenizer(transport):
    generator = RemoteGenerator(transport)
    tokenizer = WireTokenizer(generator)
    assert tokenizer.reserved_overhead == 2
    ids = tokenizer.encode("return x")
    assert ids and all(isinstance(i, int) for i in ids)
    assert tokenizer.encode("") == []
    with pytest.raises(NotImplementedError):
        tokenizer.decode(ids)
    sample = encode_for_inference("C", ["return x"], "", tokenizer, max_in=512)
    assert sample.budget_length() <= 512
    assert sample.reserved == 2


def test_dead_process_raises():
    transport = ProcessTransport([sys.executable, "-c", "pass"], timeout=5)
    with pytest.raises(ProtocolError):
        transport.request({"op": "hello"})
    transport.close()
