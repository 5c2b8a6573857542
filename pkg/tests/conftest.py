"""Shared fixtures: a scriptable archive endpoint and a small synthetic run
configuration."""

from __future__ import annotations

import json
import threading
from collections import deque
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

import pytest

from pipeline_configs import tiny_config_doc


@dataclass
class ArchiveState:
    """Mutable backing store for the fake archive endpoint.

    Scripted (status, body) responses are served first, in order; once the
    queue drains the server answers from `postings` with real pagination
    semantics (ascending created_utc, half-open [after, before), size cap).
    """

    postings: list[dict] = field(default_factory=list)
    scripted: deque = field(default_factory=deque)
    requests: list[str] = field(default_factory=list)


class _ArchiveHandler(BaseHTTPRequestHandler):
    def log_message(self, *_args):
        pass

    def do_GET(self):
        state = self.server.state
        state.requests.append(self.path)
        if state.scripted:
            status, body = state.scripted.popleft()
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.end_headers()
            self.wfile.write(body)
            return
        query = parse_qs(urlparse(self.path).query)
        after = int(query.get("after", ["0"])[0])
        before = int(query.get("before", [str(2**62)])[0])
        size = int(query.get("size", ["100"])[0])
        rows = sorted(
            (p for p in state.postings if after <= p["created_utc"] < before),
            key=lambda p: p["created_utc"],
        )
        body = json.dumps({"data": rows[:size]}).encode("utf-8")
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        self.wfile.write(body)


@pytest.fixture
def archive():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _ArchiveHandler)
    server.state = ArchiveState()
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}/search", server.state
    server.shutdown()
    thread.join()


@pytest.fixture
def tiny_config(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(tiny_config_doc()), encoding="utf-8")
    return path
