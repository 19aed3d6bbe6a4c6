"""Adapter for serving real masked-LM checkpoints over the wire.

A model object exposes per-position logits for the masked slots:

    logits(prompt: list[int], slots: list[int | None]) -> {pos: [float, ...]}

one vocabulary-sized row per null slot. The adapter turns each row into
probabilities and serves the top_k pairs in protocol order. Checkpoint
conventions (which ids act as mask and end-of-text, chat templates,
device placement) belong to the model object; the adapter only moves
numbers. Wrapping an actual checkpoint means writing one class with a
logits method and pointing --model at it as module:attr.
"""

from __future__ import annotations

import importlib
import math
from typing import Optional

from .protocol import (
    MALFORMED_ID,
    ProtocolError,
    parse_request,
    serialize_error,
    serialize_response,
)


class ModelLoadError(Exception):
    """The model spec did not produce a usable model object."""


def load_model(spec: str):
    """Resolve module:attr to a model object.

    The attribute may be the model itself or a zero-argument factory;
    either way the result must have a callable .logits.
    """
    module_name, sep, attr = spec.partition(":")
    if not sep or not module_name or not attr:
        raise ModelLoadError(f"model spec must look like module:attr, got {spec!r}")
    try:
        module = importlib.import_module(module_name)
    except ImportError as exc:
        raise ModelLoadError(f"cannot import module {module_name!r}: {exc}") from exc
    try:
        candidate = getattr(module, attr)
    except AttributeError:
        raise ModelLoadError(f"module {module_name!r} has no attribute {attr!r}") from None
    model = candidate
    if not hasattr(candidate, "logits") and callable(candidate):
        model = candidate()
    if not callable(getattr(model, "logits", None)):
        raise ModelLoadError(f"{spec!r} does not provide a callable .logits")
    return model


def softmax(row: list) -> list:
    peak = max(row)
    exps = [math.exp(v - peak) for v in row]
    total = sum(exps)
    return [v / total for v in exps]


def top_k_pairs(row: list, k: int) -> list:
    """Top-k (token, probability) pairs, highest first, ties to the lower id."""
    probs = softmax(row)
    order = sorted(range(len(probs)), key=lambda tok: (-probs[tok], tok))
    return [(tok, probs[tok]) for tok in order[:k]]


class ModelResponder:
    """Answers request lines by querying a loaded model for logits."""

    def __init__(self, model, top_k_max: Optional[int] = None) -> None:
        self.model = model
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
        masked = [i for i, s in enumerate(request["slots"]) if s is None]
        try:
            rows = self.model.logits(request["prompt"], request["slots"])
            predictions = {pos: top_k_pairs(rows[pos], request["top_k"]) for pos in masked}
        except Exception as exc:
            return serialize_error(request["id"], f"inference_failure: {exc}")
        return serialize_response(request["id"], predictions)
