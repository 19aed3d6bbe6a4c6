"""Prediction tables: record a denoiser's answers, replay them later.

A table maps a digest of the request's visible content (prompt, slots,
top_k; the wire id is excluded) to that request's predictions. Tables
serialize to JSON so a stub server process can replay a recorded decode
over the wire, byte-for-byte.
"""

from __future__ import annotations

import json
from typing import Optional

from .denoiser import Denoiser, DenoiserRequest, DenoiserResponse, Pair
from .errors import ConfigurationError, DenoiserError
from .jsonfmt import canonical_dumps, sha256_hex

TABLE_FORMAT = "prediction-table/v1"


def request_digest(prompt_tokens, response_slots, top_k: int) -> str:
    """Canonical digest of a request's visible content."""
    payload = {
        "prompt": list(prompt_tokens),
        "slots": [None if s is None else s for s in response_slots],
        "top_k": top_k,
    }
    return sha256_hex(canonical_dumps(payload))


def _predictions_out(predictions: dict[int, tuple[Pair, ...]]) -> dict:
    return {
        str(pos): [[tok, prob] for tok, prob in predictions[pos]]
        for pos in sorted(predictions)
    }


def _predictions_in(raw: dict) -> dict[int, tuple[Pair, ...]]:
    return {
        int(pos): tuple((int(tok), float(prob)) for tok, prob in pairs)
        for pos, pairs in raw.items()
    }


class RecordingDenoiser:
    """Wraps a denoiser and records every request/response pair."""

    def __init__(self, inner: Denoiser) -> None:
        self.inner = inner
        self.entries: dict[str, dict[int, tuple[Pair, ...]]] = {}

    def predict(self, request: DenoiserRequest) -> DenoiserResponse:
        response = self.inner.predict(request)
        digest = request_digest(request.prompt_tokens, request.response_slots, request.top_k)
        self.entries[digest] = dict(response.predictions)
        return response

    def model_info(self) -> dict:
        getter = getattr(self.inner, "model_info", None)
        if callable(getter):
            return getter()
        return {"model": "unknown"}

    def table_payload(self, meta: Optional[dict] = None) -> dict:
        return {
            "format": TABLE_FORMAT,
            "meta": meta or {},
            "entries": {d: _predictions_out(p) for d, p in self.entries.items()},
        }

    def save(self, path: str, meta: Optional[dict] = None) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.table_payload(meta), fh)
            fh.write("\n")


class TableDenoiser:
    """Replays recorded predictions; unknown requests are denoiser errors."""

    def __init__(self, entries: dict[str, dict[int, tuple[Pair, ...]]],
                 meta: Optional[dict] = None, digest: Optional[str] = None) -> None:
        self.entries = entries
        self.meta = meta or {}
        self._digest = digest

    @classmethod
    def load(cls, path: str) -> "TableDenoiser":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigurationError(f"cannot read prediction table {path}: {exc}") from exc
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"prediction table {path} is not valid JSON: {exc}") from exc
        if payload.get("format") != TABLE_FORMAT:
            raise ConfigurationError(
                f"prediction table {path} has format {payload.get('format')!r}, expected {TABLE_FORMAT!r}"
            )
        entries = {d: _predictions_in(p) for d, p in payload.get("entries", {}).items()}
        digest = sha256_hex(canonical_dumps(payload))
        return cls(entries=entries, meta=payload.get("meta", {}), digest=digest)

    def predict(self, request: DenoiserRequest) -> DenoiserResponse:
        digest = request_digest(request.prompt_tokens, request.response_slots, request.top_k)
        if digest not in self.entries:
            raise DenoiserError(f"unknown_state: no table entry for request digest {digest}")
        return DenoiserResponse(predictions=dict(self.entries[digest]))

    def model_info(self) -> dict:
        info = {"model": "table", "model_digest": self._digest}
        vocab = self.meta.get("vocab")
        if vocab:
            info.update(
                vocab_size=vocab.get("size"),
                mask_id=vocab.get("mask_id"),
                eot_id=vocab.get("eot_id"),
            )
        return info
