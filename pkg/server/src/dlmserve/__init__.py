"""Prediction server for masked diffusion LM decoding.

Speaks a line-delimited JSON protocol over TCP: a stub backend replays
recorded prediction tables for conformance testing, and an adapter
backend wraps any object exposing per-position logits.
"""

from .adapter import ModelLoadError, ModelResponder, load_model, softmax, top_k_pairs
from .protocol import (
    MALFORMED_ID,
    REQUEST_FIELDS,
    TABLE_FORMAT,
    ProtocolError,
    check_predictions,
    load_table,
    parse_request,
    request_digest,
    serialize_error,
    serialize_request,
    serialize_response,
)
from .stub import PredictionServer, TableResponder

__version__ = "0.1.0"

__all__ = [
    "MALFORMED_ID",
    "ModelLoadError",
    "ModelResponder",
    "PredictionServer",
    "ProtocolError",
    "REQUEST_FIELDS",
    "TABLE_FORMAT",
    "TableResponder",
    "check_predictions",
    "load_model",
    "load_table",
    "parse_request",
    "request_digest",
    "serialize_error",
    "serialize_request",
    "serialize_response",
    "softmax",
    "top_k_pairs",
    "__version__",
]
