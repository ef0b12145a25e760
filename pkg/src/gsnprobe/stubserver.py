"""In-process HTTP server exposing any ConditionalModel over the /v1
protocol. Used as a test double for the real model server and as the
reference implementation of the serving side."""

from __future__ import annotations

import json
import math
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

from .core import ConditionalModel


def _make_handler(model: ConditionalModel):
    class Handler(BaseHTTPRequestHandler):
        def log_message(self, fmt, *args):  # keep test output quiet
            pass

        def _send(self, status: int, doc: dict) -> None:
            body = json.dumps(doc).encode()
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def do_GET(self):
            if self.path != "/v1/info":
                self._send(404, {"error": f"unknown path {self.path}"})
                return
            self._send(200, {
                "model": model.fingerprint(),
                "vocab_size": model.vocab.size,
                "mask_id": model.vocab.mask_id,
                "max_len": model.length,
            })

        def do_POST(self):
            if self.path != "/v1/conditional":
                self._send(404, {"error": f"unknown path {self.path}"})
                return
            try:
                length = int(self.headers.get("Content-Length", 0))
                doc = json.loads(self.rfile.read(length))
                tokens = [int(t) for t in doc["tokens"]]
                positions = [int(p) for p in doc["positions"]]
            except (ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
                self._send(400, {"error": f"malformed request: {exc}"})
                return
            if len(tokens) != model.length:
                self._send(400, {"error": f"expected {model.length} tokens, got {len(tokens)}"})
                return
            bad = [p for p in positions if not 0 <= p < len(tokens)]
            if bad:
                self._send(400, {"error": "positions out of range", "positions": bad})
                return
            rows = []
            for pos in positions:
                p = model.query(tokens, pos)
                with np.errstate(divide="ignore"):
                    lp = np.log(p)
                rows.append([None if v == -math.inf else float(v) for v in lp])
            self._send(200, {"log_probs": rows})

    return Handler


class StubModelServer:
    """Context manager running the protocol server on a local port."""

    def __init__(self, model: ConditionalModel, host: str = "127.0.0.1", port: int = 0):
        self._server = ThreadingHTTPServer((host, port), _make_handler(model))
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    @property
    def url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> "StubModelServer":
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        self._thread.join(timeout=5)

    def __enter__(self) -> "StubModelServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()
