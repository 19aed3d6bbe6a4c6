"""Stub server: replays recorded prediction tables over the wire.

Replies come straight from a digest-keyed table, so a client running the
same decode twice sees byte-identical response streams. States the table
has never seen get an "unknown_state" error; lines that do not parse get
an error with id -1. Either way the connection stays open.
"""

from __future__ import annotations

import socketserver
from typing import Optional

from .protocol import (
    MALFORMED_ID,
    ProtocolError,
    parse_request,
    request_digest,
    serialize_error,
    serialize_response,
)


class TableResponder:
    """Answers request lines from a digest-keyed prediction table."""

    def __init__(self, entries: dict, top_k_max: Optional[int] = None) -> None:
        self.entries = entries
        self.top_k_max = top_k_max

    def reply(self, line: str) -> str:
        try:
            request = parse_request(line)
        except ProtocolError as exc:
            return serialize_error(MALFORMED_ID, f"malformed_request: {exc}")
        if self.top_k_max is not None and request["top_k"] > self.top_k_max:
            return serialize_error(
                request["id"],
                f"top_k {request['top_k']} exceeds server limit {self.top_k_max}",
            )
        digest = request_digest(request["prompt"], request["slots"], request["top_k"])
        entry = self.entries.get(digest)
        if entry is None:
            return serialize_error(request["id"], "unknown_state")
        return serialize_response(request["id"], entry)


class _LineHandler(socketserver.StreamRequestHandler):
    def handle(self) -> None:
        for raw in self.rfile:
            line = raw.decode("utf-8", errors="replace").strip()
            if not line:
                continue
            reply = self.server.responder.reply(line)
            self.wfile.write(reply.encode("utf-8") + b"\n")
            self.wfile.flush()


class PredictionServer(socketserver.ThreadingTCPServer):
    """One thread per connection; requests within a connection stay ordered."""

    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address: tuple, responder) -> None:
        super().__init__(address, _LineHandler)
        self.responder = responder
