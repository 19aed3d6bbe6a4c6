"""Wire client for remote denoisers.

Protocol: one JSON object per line over a plain TCP stream, UTF-8.

    request:  {"id": n, "prompt": [...], "slots": [... | null ...], "top_k": k}
    response: {"id": n, "predictions": {"<pos>": [[token, prob], ...], ...}}
    error:    {"id": n | -1, "error": "<reason>"}

Responses must cover exactly the masked (null) slots, with probability
lists sorted descending. The client validates every response before the
engine sees it.
"""

from __future__ import annotations

import json
import socket
from typing import Optional

from .denoiser import DenoiserRequest, DenoiserResponse, Pair
from .errors import ConfigurationError, DenoiserError

DEFAULT_TIMEOUT = 10.0


def parse_address(address: str) -> tuple[str, int]:
    host, sep, port = address.rpartition(":")
    if not sep or not host:
        raise ConfigurationError(f"remote address must look like host:port, got {address!r}")
    try:
        return host, int(port)
    except ValueError:
        raise ConfigurationError(f"invalid port in remote address {address!r}") from None


def serialize_request(request_id: int, request: DenoiserRequest) -> str:
    return json.dumps(
        {
            "id": request_id,
            "prompt": list(request.prompt_tokens),
            "slots": [None if s is None else s for s in request.response_slots],
            "top_k": request.top_k,
        },
        separators=(",", ":"),
    )


def parse_response(line: str) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DenoiserError(f"malformed wire response: {exc.msg}") from None
    if not isinstance(obj, dict):
        raise DenoiserError("malformed wire response: not an object")
    return obj


class RemoteDenoiser:
    """Denoiser backed by a line-delimited JSON prediction server."""

    def __init__(self, address: str, timeout: float = DEFAULT_TIMEOUT,
                 eot_id: Optional[int] = None, mask_id: Optional[int] = None,
                 vocab_size: Optional[int] = None) -> None:
        self.address = address
        self.host, self.port = parse_address(address)
        self.timeout = timeout
        self._sock: Optional[socket.socket] = None
        self._reader = None
        self._next_id = 0
        self._vocab = {"vocab_size": vocab_size, "mask_id": mask_id, "eot_id": eot_id}

    def _connect(self) -> None:
        if self._sock is not None:
            return
        try:
            sock = socket.create_connection((self.host, self.port), timeout=self.timeout)
        except OSError as exc:
            raise DenoiserError(f"cannot connect to remote denoiser at {self.address}: {exc}") from exc
        self._sock = sock
        self._reader = sock.makefile("r", encoding="utf-8", newline="\n")

    def close(self) -> None:
        if self._reader is not None:
            self._reader.close()
            self._reader = None
        if self._sock is not None:
            self._sock.close()
            self._sock = None

    def __enter__(self) -> "RemoteDenoiser":
        self._connect()
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def predict(self, request: DenoiserRequest) -> DenoiserResponse:
        self._connect()
        request_id = self._next_id
        self._next_id += 1
        line = serialize_request(request_id, request)
        try:
            self._sock.sendall(line.encode("utf-8") + b"\n")
            reply = self._reader.readline()
        except OSError as exc:
            self.close()
            raise DenoiserError(f"wire transport failure: {exc}") from exc
        if not reply:
            self.close()
            raise DenoiserError("remote denoiser closed the connection")
        obj = parse_response(reply)
        if "error" in obj:
            raise DenoiserError(f"remote denoiser error: {obj['error']}")
        if obj.get("id") != request_id:
            raise DenoiserError(f"response id {obj.get('id')!r} does not match request id {request_id}")
        raw = obj.get("predictions")
        if not isinstance(raw, dict):
            raise DenoiserError("wire response lacks a predictions object")
        predictions: dict[int, tuple[Pair, ...]] = {}
        for key, pairs in raw.items():
            try:
                pos = int(key)
            except (TypeError, ValueError):
                raise DenoiserError(f"non-integer position key {key!r} in wire response") from None
            try:
                predictions[pos] = tuple((int(t), float(p)) for t, p in pairs)
            except (TypeError, ValueError):
                raise DenoiserError(f"malformed prediction pairs at position {key}") from None
        return DenoiserResponse(predictions=predictions)

    def model_info(self) -> dict:
        info = {"model": "remote", "endpoint": self.address, "model_digest": None}
        info.update({k: v for k, v in self._vocab.items() if v is not None})
        return info
