"""Serve the deterministic mock generator over the wire protocol.

    python -m aprkit.mock_server --checkpoint 0 --seed 7          # stdio framing
    python -m aprkit.mock_server --checkpoint 0 --seed 7 --http 0 # HTTP framing

With --http the chosen port is printed as the first stdout line.
"""

from __future__ import annotations

import argparse
import json
import sys
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .encoding import DEFAULT_MAX_INPUT, DEFAULT_MAX_OUTPUT, WhitespaceTokenizer
from .generation import MockGenerator
from .protocol import handle_message, serve_stdio


class MockBackend:
    """Adapts MockGenerator to the protocol's server-side contract."""

    def __init__(self, checkpoint: int, seed: int) -> None:
        self.checkpoint = checkpoint
        self.max_in = DEFAULT_MAX_INPUT
        self.max_out = DEFAULT_MAX_OUTPUT
        self.overhead = 2  # bos + eos
        self._generator = MockGenerator(checkpoint=checkpoint, seed=seed)
        self._tokenizer = WhitespaceTokenizer()

    def generate_text(self, input_text: str, beam: int) -> list[tuple[str, float]]:
        candidates = self._generator.generate_from_text(input_text, beam)
        return [(c.text, c.score) for c in candidates]

    def tokenize_text(self, text: str) -> list[int]:
        return self._tokenizer.encode(text)


def _serve_http(backend: MockBackend, port: int) -> None:
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


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--checkpoint", type=int, default=0)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--http", type=int, default=None, metavar="PORT",
                        help="serve over HTTP on this port (0 picks a free one)")
    args = parser.parse_args(argv)

    backend = MockBackend(checkpoint=args.checkpoint, seed=args.seed)
    if args.http is not None:
        _serve_http(backend, args.http)
    else:
        serve_stdio(backend, sys.stdin, sys.stdout)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
