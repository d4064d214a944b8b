"""Serve one checkpoint over the generator wire protocol.

Messages are single-line JSON over stdin/stdout (or one POST body per request
with --http). Beam search returns up to ``beam`` candidates sorted by
descending length-normalized sequence log-likelihood. Malformed messages get
an {"error": ...} reply and the process keeps serving.
"""

from __future__ import annotations

import json
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import torch
from transformers import PreTrainedTokenizerFast, T5ForConditionalGeneration

from .training import META_FILE


class CheckpointBackend:
    """Loads one checkpoint directory and answers protocol requests."""

    def __init__(self, checkpoint_dir, max_new_tokens: int | None = None) -> None:
        checkpoint_dir = Path(checkpoint_dir)
        meta = json.loads((checkpoint_dir / META_FILE).read_text(encoding="utf-8"))
        self.checkpoint = int(meta["checkpoint"])
        self.max_in = int(meta["max_in"])
        self.max_out = int(meta["max_out"])
        self._max_new_tokens = max_new_tokens or self.max_out

        self.tokenizer = PreTrainedTokenizerFast.from_pretrained(checkpoint_dir)
        self.model = T5ForConditionalGeneration.from_pretrained(checkpoint_dir)
        self.model.eval()
        # marker tokens the tokenizer adds around a plain encode
        self.overhead = len(self.tokenizer("").input_ids)

    def generate_text(self, input_text: str, beam: int) -> list[tuple[str, float]]:
        if beam < 1:
            raise ValueError("beam must be >= 1")
        encoded = self.tokenizer(
            input_text, truncation=True, max_length=self.max_in, return_tensors="pt"
        )
        with torch.no_grad():
            out = self.model.generate(
                **encoded,
                num_beams=max(beam, 2),  # sequences_scores need true beam search
                num_return_sequences=beam,
                max_new_tokens=self._max_new_tokens,
                early_stopping=True,
                output_scores=True,
                return_dict_in_generate=True,
            )
        texts = self.tokenizer.batch_decode(out.sequences, skip_special_tokens=True)
        scores = [float(s) for s in out.sequences_scores]
        pairs = sorted(zip((t.strip() for t in texts), scores), key=lambda p: -p[1])
        return pairs[:beam]

    def tokenize_text(self, text: str) -> list[int]:
        return self.tokenizer.encode(text, add_special_tokens=False)


def handle_message(backend: CheckpointBackend, line: str) -> dict:
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
            pairs = backend.generate_text(input_text, beam)
        except (KeyError, TypeError, ValueError) as exc:
            return {"error": f"bad generate request: {exc}"}
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


def serve_stdio(backend: CheckpointBackend, stdin, stdout) -> None:
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        stdout.write(json.dumps(handle_message(backend, line)) + "\n")
        stdout.flush()


def serve_http(backend: CheckpointBackend, port: int) -> None:
    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):  # noqa: N802 (http.server API)
            length = int(self.headers.get("Content-Length", 0))
            body = self.rfile.read(length).decode("utf-8")
            reply = json.dumps(handle_message(backend, body)).encode("utf-8")
            self.send_response(200)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(reply)))
            self.end_headers()
            self.wfile.write(reply)

        def log_message(self, *args):
            pass

    server = ThreadingHTTPServer(("127.0.0.1", port), Handler)
    print(server.server_address[1], flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
