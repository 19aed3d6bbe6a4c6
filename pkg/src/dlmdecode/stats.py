"""Diagnostics over decode traces.

Two standing questions about a run: how much of the output is EOT
padding, and where in the region do the earliest unmasked positions
cluster. Both are cheap to answer from the trace alone, and paired runs
subtract cleanly for before/after comparisons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import ConfigurationError
from .state import PRE_DECODED
from .trace import DecodeTrace

DEFAULT_BIN_COUNT = 32
DEFAULT_EARLY_FRACTION = 0.15
# guards ceil() against binary float artifacts in fraction * steps
_CEIL_EPS = 1e-9


def eot_ratio(tokens: Sequence[int], eot_id: int) -> float:
    """Fraction of response positions holding the EOT token. Anchor slots
    stay in the denominator; they are part of the emitted response."""
    if not tokens:
        raise ConfigurationError("eot_ratio needs a non-empty token sequence")
    return sum(1 for t in tokens if t == eot_id) / len(tokens)


def early_step_count(total_steps: int, early_fraction: float = DEFAULT_EARLY_FRACTION) -> int:
    """Number of leading steps considered 'early': ceil(fraction * T)."""
    if not 0.0 < early_fraction <= 1.0:
        raise ConfigurationError(f"early_fraction must lie in (0, 1], got {early_fraction}")
    return math.ceil(early_fraction * total_steps - _CEIL_EPS)


@dataclass(frozen=True)
class PositionHistogram:
    """Fractions of early-decoded positions per position bin."""

    fractions: tuple[float, ...]
    bin_count: int
    bin_width: int
    early_steps: int
    early_count: int
    anchor_bins: tuple[int, ...]

    def anchor_mass(self) -> Optional[float]:
        if not self.anchor_bins:
            return None
        return sum(self.fractions[b] for b in self.anchor_bins)

    def anchor_mass_ratio(self) -> Optional[float]:
        """Early mass landing in anchor bins, relative to a uniform spread."""
        mass = self.anchor_mass()
        if mass is None:
            return None
        uniform = len(self.anchor_bins) / self.bin_count
        return mass / uniform


def _bin_of(pos: int, width: int, bin_count: int) -> int:
    return min(pos // width, bin_count - 1)


def early_decode_histogram(trace: DecodeTrace, bin_count: int = DEFAULT_BIN_COUNT,
                           early_fraction: float = DEFAULT_EARLY_FRACTION) -> PositionHistogram:
    """Bin the positions unmasked during the earliest decode steps.

    Bins split the response region by position (width L // bin_count, the
    last bin absorbing any remainder). Anchor slots never appear in the
    numerator (they are pre-decoded) but their bins are reported so
    concentration near the anchor is measurable.
    """
    length = trace.header["L"]
    if not 1 <= bin_count <= length:
        raise ConfigurationError(f"bin_count must lie in [1, {length}], got {bin_count}")
    width = length // bin_count
    total_steps = len(trace.steps)
    if total_steps == 0:
        raise ConfigurationError("trace has no steps")
    early = early_step_count(total_steps, early_fraction)
    counts = [0] * bin_count
    early_total = 0
    for record in trace.steps:
        if record.step >= early:
            continue
        for pos in record.selected:
            counts[_bin_of(pos, width, bin_count)] += 1
            early_total += 1
    if early_total:
        fractions = tuple(c / early_total for c in counts)
    else:
        fractions = tuple(0.0 for _ in counts)
    anchor_positions = trace.anchor_spec().positions(length)
    anchor_bins = tuple(sorted({_bin_of(p, width, bin_count) for p in anchor_positions}))
    return PositionHistogram(
        fractions=fractions,
        bin_count=bin_count,
        bin_width=width,
        early_steps=early,
        early_count=early_total,
        anchor_bins=anchor_bins,
    )


def average_histograms(histograms: Sequence[PositionHistogram]) -> PositionHistogram:
    """Mean of per-trace bin fractions (all inputs must share geometry)."""
    if not histograms:
        raise ConfigurationError("average_histograms needs at least one histogram")
    first = histograms[0]
    for h in histograms[1:]:
        if h.bin_count != first.bin_count or h.bin_width != first.bin_width:
            raise ConfigurationError("histograms disagree on binning geometry")
        if h.anchor_bins != first.anchor_bins:
            raise ConfigurationError("histograms disagree on anchor bins")
    n = len(histograms)
    fractions = tuple(
        sum(h.fractions[b] for h in histograms) / n for b in range(first.bin_count)
    )
    return PositionHistogram(
        fractions=fractions,
        bin_count=first.bin_count,
        bin_width=first.bin_width,
        early_steps=first.early_steps,
        early_count=sum(h.early_count for h in histograms),
        anchor_bins=first.anchor_bins,
    )


@dataclass(frozen=True)
class RunComparison:
    """Paired-run deltas, second run minus first."""

    decided_at_delta: tuple[int, ...]
    eot_ratio_delta: float
    histogram_delta: tuple[float, ...]
    eot_ratio_a: float
    eot_ratio_b: float


def trace_eot_ratio(trace: DecodeTrace) -> float:
    eot_id = trace.header.get("eot_id")
    if eot_id is None:
        raise ConfigurationError("trace header does not record eot_id; cannot compute EOT ratio")
    return eot_ratio(trace.final_tokens(), eot_id)


def compare_runs(trace_a: DecodeTrace, trace_b: DecodeTrace,
                 bin_count: int = DEFAULT_BIN_COUNT,
                 early_fraction: float = DEFAULT_EARLY_FRACTION) -> RunComparison:
    """Per-position decided_at deltas plus EOT-ratio and histogram deltas.

    Pre-decoded (anchor) slots carry PRE_DECODED in both runs, so their
    delta is zero by construction when the anchors agree.
    """
    if trace_a.header["L"] != trace_b.header["L"]:
        raise ConfigurationError("compare_runs requires equal region lengths")
    decided_a = trace_a.decided_at()
    decided_b = trace_b.decided_at()
    delta = tuple(
        (PRE_DECODED if b is None else b) - (PRE_DECODED if a is None else a)
        for a, b in zip(decided_a, decided_b)
    )
    ratio_a = trace_eot_ratio(trace_a)
    ratio_b = trace_eot_ratio(trace_b)
    hist_a = early_decode_histogram(trace_a, bin_count, early_fraction)
    hist_b = early_decode_histogram(trace_b, bin_count, early_fraction)
    hist_delta = tuple(b - a for a, b in zip(hist_a.fractions, hist_b.fractions))
    return RunComparison(
        decided_at_delta=delta,
        eot_ratio_delta=ratio_b - ratio_a,
        histogram_delta=hist_delta,
        eot_ratio_a=ratio_a,
        eot_ratio_b=ratio_b,
    )
