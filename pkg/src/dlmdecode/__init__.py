"""Decoding engine for masked diffusion language models.

Iterative unmasking with pluggable confidence strategies, suffix
anchoring, anchor-proximity confidence reweighting, EOT suppression,
fully parallel and block-wise schedules, line-delimited decode traces,
and trace diagnostics (EOT ratio, early-decode position histograms).
"""

from .confidence import (
    RANDOM,
    SUPPRESSED,
    TOP_MARGIN,
    TOP_PROBABILITY,
    ConfidenceVector,
    eot_suppress,
    is_suppressed,
    random_scores,
    top_margin,
    top_probability,
)
from .denoiser import (
    Denoiser,
    DenoiserRequest,
    DenoiserResponse,
    predict_checked,
    validate_response,
)
from .errors import (
    ConfigurationError,
    ContractViolationError,
    DecodeError,
    DenoiserError,
    TraceFormatError,
)
from .modulation import ModulationParams, WeightField, compute_weights, modulate, modulation_factor
from .remote import RemoteDenoiser
from .runs import build_denoiser, load_anchor_file, rerun_from_header, resolve_strategy
from .scheduler import (
    DecodeConfig,
    DecodeResult,
    block_budgets,
    decode,
    decode_semi_ar,
    schedule_counts,
)
from .state import PRE_DECODED, AnchorSpec, SequenceState, Vocabulary, init_state
from .stats import (
    PositionHistogram,
    RunComparison,
    average_histograms,
    compare_runs,
    early_decode_histogram,
    early_step_count,
    eot_ratio,
    trace_eot_ratio,
)
from .synthetic import SyntheticDenoiser, SyntheticModelConfig, load_synthetic_config
from .tables import RecordingDenoiser, TableDenoiser, request_digest
from .trace import DecodeTrace, StepRecord

__version__ = "0.1.0"

__all__ = [
    "AnchorSpec",
    "ConfidenceVector",
    "ConfigurationError",
    "ContractViolationError",
    "DecodeConfig",
    "DecodeError",
    "DecodeResult",
    "DecodeTrace",
    "Denoiser",
    "DenoiserError",
    "DenoiserRequest",
    "DenoiserResponse",
    "ModulationParams",
    "PRE_DECODED",
    "PositionHistogram",
    "RANDOM",
    "RecordingDenoiser",
    "RemoteDenoiser",
    "RunComparison",
    "SUPPRESSED",
    "SequenceState",
    "StepRecord",
    "SyntheticDenoiser",
    "SyntheticModelConfig",
    "TOP_MARGIN",
    "TOP_PROBABILITY",
    "TableDenoiser",
    "TraceFormatError",
    "Vocabulary",
    "WeightField",
    "average_histograms",
    "block_budgets",
    "build_denoiser",
    "compare_runs",
    "compute_weights",
    "decode",
    "decode_semi_ar",
    "early_decode_histogram",
    "early_step_count",
    "eot_ratio",
    "eot_suppress",
    "init_state",
    "is_suppressed",
    "load_anchor_file",
    "load_synthetic_config",
    "modulate",
    "modulation_factor",
    "predict_checked",
    "random_scores",
    "request_digest",
    "rerun_from_header",
    "resolve_strategy",
    "schedule_counts",
    "top_margin",
    "top_probability",
    "trace_eot_ratio",
    "validate_response",
    "__version__",
]
