"""Serving entry points: stdio loop and HTTP endpoint."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, HTTPServer
from typing import Optional

from .protocol import Backend, handle_line, handle_request
from .stub import StubModel


@dataclass(frozen=True)
class ServerConfig:
    model: str = "stub"
    device: str = "cpu"
    deterministic: bool = True
    port: Optional[int] = None  # None = stdio
    stub_seed: str = "00" * 32
    vocab_size: int = 256
    concentration: float = 4.0


def build_backend(config: ServerConfig) -> Backend:
    if config.model == "stub":
        stub = StubModel(
            seed=bytes.fromhex(config.stub_seed),
            vocab_size=config.vocab_size,
            concentration=config.concentration,
        )
        return stub.distributions
    from .real_model import MaskedLmBackend  # heavy imports stay optional

    return MaskedLmBackend(config.model, config.device, config.deterministic).distributions


def serve_stdio(backend: Backend, stdin=None, stdout=None) -> None:
    """Answer one response line per request line until EOF."""
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        stdout.write(handle_line(line, backend) + "\n")
        stdout.flush()


def serve_http(backend: Backend, port: int) -> None:
    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):
            if self.path != "/v1/distributions":
                self.send_error(404)
                return
            length = int(self.headers.get("Content-Length", 0))
            body = self.rfile.read(length).decode("utf-8")
            try:
                request = json.loads(body)
                response = handle_request(request, backend)
            except json.JSONDecodeError as exc:
                response = {"id": None, "error": {"code": "protocol_violation",
                                                  "message": f"not JSON: {exc}"}}
            payload = json.dumps(response, separators=(",", ":")).encode("utf-8")
            self.send_response(200)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(payload)))
            self.end_headers()
            self.wfile.write(payload)

        def log_message(self, *args):  # keep stdio clean for supervised runs
            pass

    HTTPServer(("127.0.0.1", port), Handler).serve_forever()


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="dlm-bridge-server",
        description="Serve masked-position token distributions over stdio or HTTP.",
    )
    parser.add_argument("--model", default="stub",
                        help='"stub" or a Hugging Face masked-LM identifier')
    parser.add_argument("--stub", action="store_true", help="force the stub backend")
    parser.add_argument("--stdio", action="store_true", help="serve on stdin/stdout (default)")
    parser.add_argument("--port", type=int, default=None, help="serve HTTP on this port instead")
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--deterministic", action="store_true", default=True)
    parser.add_argument("--stub-seed", default="00" * 32, help="stub backend seed, 64 hex chars")
    parser.add_argument("--vocab", type=int, default=256)
    parser.add_argument("--concentration", type=float, default=4.0)
    args = parser.parse_args(argv)

    config = ServerConfig(
        model="stub" if args.stub else args.model,
        device=args.device,
        deterministic=args.deterministic,
        port=args.port,
        stub_seed=args.stub_seed,
        vocab_size=args.vocab,
        concentration=args.concentration,
    )
    try:
        backend = build_backend(config)
    except Exception as exc:
        print(f"error: cannot load model backend: {exc}", file=sys.stderr)
        return 1
    if config.port is None:
        serve_stdio(backend)
    else:
        serve_http(backend, config.port)
    return 0


if __name__ == "__main__":
    sys.exit(main())
