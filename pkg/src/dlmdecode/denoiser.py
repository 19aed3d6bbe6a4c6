"""Denoiser interface: one prediction call per decode step.

A denoiser receives the visible context (prompt plus partially decided
response slots) and returns, for every masked position, the top-k
(token, probability) pairs sorted by descending probability. The engine
is tokenizer-agnostic; only ids and probabilities cross this boundary.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Protocol, runtime_checkable

from .errors import ConfigurationError, DenoiserError

PROB_SUM_TOLERANCE = 1e-6

Pair = tuple[int, float]


@dataclass(frozen=True)
class DenoiserRequest:
    """Visible context for one prediction call.

    prompt_tokens is opaque conditioning (may be empty); response_slots
    holds one entry per response position, None where still masked.
    top_k must be at least 2 so margin-based confidence stays defined.
    """

    prompt_tokens: tuple[int, ...]
    response_slots: tuple[Optional[int], ...]
    top_k: int = 2

    def __post_init__(self) -> None:
        if self.top_k < 2:
            raise ConfigurationError(f"top_k must be >= 2, got {self.top_k}")

    def masked_positions(self) -> list[int]:
        return [i for i, tok in enumerate(self.response_slots) if tok is None]


@dataclass(frozen=True)
class DenoiserResponse:
    """Per-position top-k predictions covering exactly the masked slots."""

    predictions: dict[int, tuple[Pair, ...]]

    def argmax(self, position: int) -> int:
        return self.predictions[position][0][0]

    def argmax_prob(self, position: int) -> float:
        return self.predictions[position][0][1]


@runtime_checkable
class Denoiser(Protocol):
    def predict(self, request: DenoiserRequest) -> DenoiserResponse: ...


def validate_response(request: DenoiserRequest, response: DenoiserResponse) -> None:
    """Check a response against its request; raise DenoiserError on violation.

    Verified on every call: exact coverage of the masked positions, top_k
    pairs per position, distinct tokens, probabilities within [0, 1] sorted
    descending, and per-position probability mass <= 1 + 1e-6.
    """
    masked = request.masked_positions()
    got = set(response.predictions)
    expected = set(masked)
    if got != expected:
        missing = sorted(expected - got)
        extra = sorted(got - expected)
        raise DenoiserError(
          f"prediction coverage mismatch: missing positions {missing}, unexpected positions {extra}"
        )
    for pos in masked:
        pairs = response.predictions[pos]
        if len(pairs) != request.top_k:
            raise DenoiserError(f"position {pos}: expected {request.top_k} pairs, got {len(pairs)}")
        tokens = [t for t, _ in pairs]
        if len(set(tokens)) != len(tokens):
            raise DenoiserError(f"position {pos}: duplicate token ids in {tokens}")
        total = 0.0
        prev = None
        for tok, prob in pairs:
            if not 0.0 <= prob <= 1.0:
                raise DenoiserError(f"position {pos}: probability {prob!r} outside [0, 1]")
            if prev is not None and prob > prev:
                raise DenoiserError(f"position {pos}: probabilities not sorted descending")
            prev = prob
            total += prob
        if total > 1.0 + PROB_SUM_TOLERANCE:
            raise DenoiserError(f"position {pos}: probability mass {total!r} exceeds 1")


def predict_checked(denoiser: Denoiser, request: DenoiserRequest) -> DenoiserResponse:
    """Run predict and validate the response before handing it to a caller."""
    if not request.masked_positions():
        raise ConfigurationError("predict called with no masked positions")
    response = denoiser.predict(request)
    validate_response(request, response)
    return response
