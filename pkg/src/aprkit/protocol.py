"""Generator wire protocol: framing, client handles, serve loop, conformance.

Messages are single-line JSON objects, identical over both framings:

  {"op": "hello"}                                -> {"checkpoint", "max_in", "max_out", "overhead"}
  {"op": "generate", "id", "input", "beam"}      -> {"id", "candidates": [{"text", "score"}, ...]}
  {"op": "tokenize", "text"}                     -> {"ids": [int, ...]}

Framing A runs over a child process's stdin/stdout, framing B over a local HTTP
socket (one POSTed message per request). Malformed messages get an
{"error": ...} reply and the connection stays up.
"""

from __future__ import annotations

import json
import math
import selectors
import subprocess
import urllib.request
from dataclasses import dataclass
from typing import Protocol

from .encoding import EncodedSample
from .generation import CandidatePatch

DEFAULT_REQUEST_TIMEOUT = 120.0


class ProtocolError(RuntimeError):
    """Transport failure or a reply that violates the protocol."""


@dataclass(frozen=True)
class Handshake:
    checkpoint: int
    max_in: int
    max_out: int
    overhead: int


class GeneratorBackend(Protocol):
    """Server-side view: what a process must expose to answer the protocol."""

    checkpoint: int
    max_in: int
    max_out: int
    overhead: int

    def generate_text(self, input_text: str, beam: int) -> list[tuple[str, float]]: ...

    def tokenize_text(self, text: str) -> list[int]: ...


def handle_message(backend: GeneratorBackend, line: str) -> dict:
    """Dispatch one request line; protocol errors become error replies."""
    try:
        message = json.loads(line)
    except json.JSONDecodeError:
        return {"error": "invalid json"}
    if not isinstance(message, dict):
        return {"error": "message must be an object"}

    op = message.get("op")
    if op == "hello":
        return {
            "checkpoint": backend.checkpoint,
            "max_in": backend.max_in,
            "max_out": backend.max_out,
            "overhead": backend.overhead,
        }
    if op == "generate":
        try:
            input_text = message["input"]
            beam = int(message["beam"])
        except (KeyError, TypeError, ValueError):
            return {"error": "generate needs 'input' and integer 'beam'"}
        pairs = backend.generate_text(input_text, beam)
        return {
            "id": message.get("id"),
            "candidates": [{"text": text, "score": score} for text, score in pairs],
        }
    if op == "tokenize":
        text = message.get("text")
        if not isinstance(text, str):
            return {"error": "tokenize needs string 'text'"}
        return {"ids": backend.tokenize_text(text)}
    return {"error": f"unknown op: {op!r}"}


def serve_stdio(backend: GeneratorBackend, stdin, stdout) -> None:
    """Answer requests line by line until EOF."""
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        reply = handle_message(backend, line)
        stdout.write(json.dumps(reply) + "\n")
        stdout.flush()


class ProcessTransport:
    """Line-JSON over a child process's standard streams."""

    def __init__(self, cmd, timeout: float = DEFAULT_REQUEST_TIMEOUT) -> None:
        self.cmd = cmd
        self.timeout = timeout
        self._proc = subprocess.Popen(
            cmd,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )

    def request(self, message: dict) -> dict:
        proc = self._proc
        if proc.poll() is not None:
            raise ProtocolError(f"generator process exited with {proc.returncode}")
        try:
            proc.stdin.write(json.dumps(message) + "\n")
            proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise ProtocolError(f"cannot write to generator process: {exc}") from exc
        line = self._readline()
        try:
            return json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"invalid reply line: {line!r}") from exc

    def _readline(self) -> str:
        sel = selectors.DefaultSelector()
        sel.register(self._proc.stdout, selectors.EVENT_READ)
        try:
            if not sel.select(self.timeout):
                raise ProtocolError(f"generator reply timed out after {self.timeout}s")
        finally:
            sel.close()
        line = self._proc.stdout.readline()
        if not line:
            raise ProtocolError("generator process closed its output")
        return line

    def close(self) -> None:
        proc = self._proc
        if proc.poll() is None:
            try:
                proc.stdin.close()
            except OSError:
                pass
            try:
                proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                proc.kill()
                proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class HttpTransport:
    """The same messages POSTed one at a time to a local HTTP endpoint."""

    def __init__(self, url: str, timeout: float = DEFAULT_REQUEST_TIMEOUT) -> None:
        self.url = url
        self.timeout = timeout

    def request(self, message: dict) -> dict:
        body = json.dumps(message).encode("utf-8")
        req = urllib.request.Request(
            self.url, data=body, headers={"Content-Type": "application/json"}
        )
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                return json.loads(resp.read().decode("utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ProtocolError(f"http request failed: {exc}") from exc

    def close(self) -> None:
        pass


def _handshake(transport) -> Handshake:
    reply = transport.request({"op": "hello"})
    try:
        return Handshake(
            checkpoint=int(reply["checkpoint"]),
            max_in=int(reply["max_in"]),
            max_out=int(reply["max_out"]),
            overhead=int(reply["overhead"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ProtocolError(f"bad hello reply: {reply!r}") from exc


class RemoteGenerator:
    """GeneratorHandle over a transport; one request in flight at a time."""

    def __init__(self, transport, request_id_prefix: str = "req") -> None:
        self._transport = transport
        self._next_id = 0
        self._prefix = request_id_prefix
        self.handshake = _handshake(transport)
        self.checkpoint = self.handshake.checkpoint

    def generate(self, sample: EncodedSample, beam: int) -> list[CandidatePatch]:
        self._next_id += 1
        request_id = f"{self._prefix}-{self._next_id}"
        reply = self._transport.request(
            {"op": "generate", "id": request_id, "input": sample.input_text, "beam": beam}
        )
        if "error" in reply:
            raise ProtocolError(f"generator error: {reply['error']}")
        if reply.get("id") != request_id:
            raise ProtocolError(f"reply id mismatch: {reply.get('id')!r}")
        candidates = []
        for i, item in enumerate(reply.get("candidates", [])):
            score = float(item["score"])
            if not math.isfinite(score):
                raise ProtocolError(f"non-finite score in reply: {item!r}")
            candidates.append(
                CandidatePatch(
                    text=item["text"], checkpoint=self.checkpoint, rank=i + 1, score=score
                )
            )
        return candidates

    def tokenize(self, text: str) -> list[int]:
        reply = self._transport.request({"op": "tokenize", "text": text})
        if "error" in reply:
            raise ProtocolError(f"tokenize error: {reply['error']}")
        return [int(i) for i in reply["ids"]]

    def close(self) -> None:
        self._transport.close()


class WireTokenizer:
    """TokenizerHandle backed by a remote generator's tokenize op.

    Marker ids are not observable over the wire; the handshake's overhead field
    is charged against the input budget instead.
    """

    bos_id = None
    eos_id = None
    pad_id = None
    unk_id = None

    def __init__(self, generator: RemoteGenerator) -> None:
        self._generator = generator
        self.reserved_overhead = generator.handshake.overhead

    def encode(self, text: str) -> list[int]:
        if not text:
            return []
        return self._generator.tokenize(text)

    def decode(self, ids: list[int]) -> str:
        raise NotImplementedError("the wire protocol has no detokenize request")


def run_conformance(transport, beam: int = 3) -> list[str]:
    """Check a generator endpoint against the protocol contract.

    Returns a list of failure descriptions; an empty list means conformant.
    The same checks apply to the mock server and to any external adapter.
    """
    failures: list[str] = []

    try:
        hs = _handshake(transport)
    except ProtocolError as exc:
        return [f"hello: {exc}"]
    if hs.checkpoint < 0:
        failures.append(f"hello: negative checkpoint {hs.checkpoint}")
    if hs.max_in <= 0 or hs.max_out <= 0:
        failures.append(f"hello: non-positive limits {hs.max_in}/{hs.max_out}")
    if hs.overhead < 0:
        failures.append(f"hello: negative overhead {hs.overhead}")

    reply = transport.request({"op": "tokenize", "text": "return x"})
    ids = reply.get("ids")
    if not isinstance(ids, list) or not ids or not all(isinstance(i, int) for i in ids):
        failures.append(f"tokenize: expected non-empty id list, got {reply!r}")

    request_id = "conformance-1"
    reply = transport.request(
        {"op": "generate", "id": request_id, "input": "C return a - b ; :", "beam": beam}
    )
    if reply.get("id") != request_id:
        failures.append(f"generate: id not echoed, got {reply.get('id')!r}")
    candidates = reply.get("candidates")
    if not isinstance(candidates, list) or len(candidates) > beam:
        failures.append(f"generate: expected <= {beam} candidates, got {candidates!r}")
    else:
        scores = []
        for item in candidates:
            if not isinstance(item.get("text"), str):
                failures.append(f"generate: candidate text not a string: {item!r}")
                break
            score = item.get("score")
            if not isinstance(score, (int, float)) or not math.isfinite(score):
                failures.append(f"generate: bad score: {item!r}")
                break
            scores.append(float(score))
        else:
            if any(a < b for a, b in zip(scores, scores[1:])):
                failures.append(f"generate: scores not non-increasing: {scores}")

    reply = transport.request({"op": "definitely-not-an-op"})
    if "error" not in reply:
        failures.append(f"malformed op: expected error reply, got {reply!r}")
    try:
        after = transport.request({"op": "hello"})
        if "checkpoint" not in after:
            failures.append("connection did not stay usable after a malformed op")
    except ProtocolError as exc:
        failures.append(f"connection died after a malformed op: {exc}")

    return failures
