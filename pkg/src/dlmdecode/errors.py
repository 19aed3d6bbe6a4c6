"""Error taxonomy shared across the engine.

Each class maps to one CLI exit code so failures stay diagnosable
from scripts: configuration (1), denoiser/protocol (2), trace/IO (3).
"""

from __future__ import annotations


class DecodeError(Exception):
    """Base class for engine errors."""


class ConfigurationError(DecodeError):
    """Invalid run configuration: bad geometry, parameters, or input files."""


class ContractViolationError(DecodeError):
    """An internal API was called outside its stated contract."""


class DenoiserError(DecodeError):
    """The denoiser returned an unusable response or the transport failed."""


class TraceFormatError(DecodeError):
    """A trace file does not conform to the line-delimited trace format."""
