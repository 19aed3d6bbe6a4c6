"""Wire protocol: one JSON object per line over a plain TCP stream, UTF-8.

    request:  {"id": n, "prompt": [...], "slots": [... | null ...], "top_k": k}
    response: {"id": n, "predictions": {"<pos>": [[token, prob], ...], ...}}
    error:    {"id": n | -1, "error": "<reason>"}

Predictions cover exactly the null slots of the request. Each list is
sorted by descending probability, ties broken toward the lower token id.
Requests are identified by a digest of their visible content (prompt,
slots, top_k; the wire id is excluded), which is also how replay tables
key their entries.
"""

from __future__ import annotations

import hashlib
import json

TABLE_FORMAT = "prediction-table/v1"

# error responses for lines that cannot be attributed to a request id
MALFORMED_ID = -1

REQUEST_FIELDS = ("id", "prompt", "slots", "top_k")


class ProtocolError(ValueError):
    """A wire object or table file violates the protocol schema."""


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def parse_request(line: str) -> dict:
    """Parse and validate one request line.

    Returns {"id", "prompt", "slots", "top_k"} with exactly those keys.
    Raises ProtocolError with a reason on any schema violation.
    """
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"invalid JSON: {exc.msg}") from None
    if not isinstance(obj, dict):
        raise ProtocolError("request is not an object")
    missing = [f for f in REQUEST_FIELDS if f not in obj]
    if missing:
        raise ProtocolError(f"request lacks fields {missing}")
    if not _is_int(obj["id"]):
        raise ProtocolError("id must be an integer")
    prompt = obj["prompt"]
    if not isinstance(prompt, list) or not all(_is_int(t) for t in prompt):
        raise ProtocolError("prompt must be a list of integers")
    slots = obj["slots"]
    if not isinstance(slots, list) or not all(s is None or _is_int(s) for s in slots):
        raise ProtocolError("slots must be a list of integers or nulls")
    if not _is_int(obj["top_k"]) or obj["top_k"] < 1:
        raise ProtocolError("top_k must be a positive integer")
    return {"id": obj["id"], "prompt": prompt, "slots": slots, "top_k": obj["top_k"]}


def serialize_request(request: dict) -> str:
    """Canonical request line: fixed key order, compact separators."""
    ordered = {f: request[f] for f in REQUEST_FIELDS}
    return json.dumps(ordered, separators=(",", ":"))


def serialize_response(request_id: int, predictions: dict) -> str:
    """Response line with positions as string keys in numeric order."""
    body = {
        str(pos): [[tok, prob] for tok, prob in predictions[pos]]
        for pos in sorted(predictions)
    }
    return json.dumps({"id": request_id, "predictions": body}, separators=(",", ":"))


def serialize_error(request_id: int, reason: str) -> str:
    return json.dumps({"id": request_id, "error": reason}, separators=(",", ":"))


def request_digest(prompt: list, slots: list, top_k: int) -> str:
    """Digest of a request's visible content; matches replay table keys."""
    payload = {"prompt": list(prompt), "slots": list(slots), "top_k": top_k}
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def check_predictions(slots: list, predictions: dict) -> None:
    """Validate protocol invariants of a predictions map against its request.

    Coverage must equal the null slots exactly; every list must be sorted
    by descending probability with ties toward the lower token id.
    """
    masked = {i for i, s in enumerate(slots) if s is None}
    covered = set(predictions)
    if covered != masked:
        raise ProtocolError(
            f"coverage mismatch: missing {sorted(masked - covered)}, "
            f"unexpected {sorted(covered - masked)}"
        )
    for pos, pairs in predictions.items():
        for (t1, p1), (t2, p2) in zip(pairs, pairs[1:]):
            if p1 < p2 or (p1 == p2 and t1 >= t2):
                raise ProtocolError(f"pairs at position {pos} are not in protocol order")


def load_table(path: str) -> tuple[dict, dict]:
    """Load a replay table; returns (meta, entries keyed by request digest)."""
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if not isinstance(payload, dict) or payload.get("format") != TABLE_FORMAT:
        got = payload.get("format") if isinstance(payload, dict) else type(payload).__name__
        raise ProtocolError(f"table {path} has format {got!r}, expected {TABLE_FORMAT!r}")
    entries = {}
    for digest, table in payload.get("entries", {}).items():
        entries[digest] = {
            int(pos): [(int(tok), float(prob)) for tok, prob in pairs]
            for pos, pairs in table.items()
        }
    return payload.get("meta", {}), entries
