"""Anchor-proximity confidence reweighting.

Positions near an anchor get a weight w in [0, 1] that decays
exponentially with distance; confidences there are scaled down by
1 - w * (1 - p)^gamma, where p is decoding progress. Early in the run
(p small) the penalty is strong; as p -> 1 it vanishes, so anchor-adjacent
positions are decoded late instead of never.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

from .confidence import ConfidenceVector, Score, is_suppressed
from .errors import ConfigurationError
from .jsonfmt import quantize

DEFAULT_KAPPA = 14.0
DEFAULT_BETA = 1.3
DEFAULT_GAMMA = 0.85


@dataclass(frozen=True)
class ModulationParams:
    """kappa: decay length (positions); beta: peak scale before the cap at 1;
    gamma: progress exponent. progress_dependent=False freezes the penalty
    at its p=0 value (ablation hook)."""

    kappa: float = DEFAULT_KAPPA
    beta: float = DEFAULT_BETA
    gamma: float = DEFAULT_GAMMA
    progress_dependent: bool = True

    def __post_init__(self) -> None:
        # pin to trace precision so header round-trips replay bit-exactly
        object.__setattr__(self, "kappa", quantize(self.kappa))
        object.__setattr__(self, "beta", quantize(self.beta))
        object.__setattr__(self, "gamma", quantize(self.gamma))
        if not self.kappa > 0:
            raise ConfigurationError(f"kappa must be > 0, got {self.kappa}")
        if not self.beta > 0:
            raise ConfigurationError(f"beta must be > 0, got {self.beta}")
        if not self.gamma > 0:
            raise ConfigurationError(f"gamma must be > 0, got {self.gamma}")


@dataclass(frozen=True)
class WeightField:
    """Per-position anchor-proximity weights for one response region."""

    values: tuple[float, ...]

    def __getitem__(self, pos: int) -> float:
        return self.values[pos]

    def __len__(self) -> int:
        return len(self.values)


def compute_weights(length: int, anchor_positions: Iterable[int], params: ModulationParams) -> WeightField:
    """w_i = min(1, beta * exp(-d_i / kappa)) with d_i the distance to the
    nearest anchor position. No anchors yields all-zero weights."""
    anchors = sorted(set(anchor_positions))
    if not anchors:
        return WeightField(values=(0.0,) * length)
    for a in anchors:
        if not 0 <= a < length:
            raise ConfigurationError(f"anchor position {a} outside response region of length {length}")
    values = []
    for i in range(length):
        d = min(abs(i - a) for a in anchors)
        values.append(min(1.0, params.beta * math.exp(-d / params.kappa)))
    return WeightField(values=tuple(values))


def modulation_factor(weight: float, progress: float, params: ModulationParams) -> float:
    """Multiplier applied to a confidence score: 1 - w * (1 - p)^gamma."""
    if params.progress_dependent:
        return 1.0 - weight * (1.0 - progress) ** params.gamma
    return 1.0 - weight


def modulate(conf: ConfidenceVector, weights: WeightField, progress: float,
             params: ModulationParams) -> ConfidenceVector:
    """Scale finite confidences by the proximity penalty.

    SUPPRESSED entries pass through untouched: suppression and modulation
    target the same failure mode and are compared as alternatives, so a
    suppressed score stays suppressed regardless of ordering.
    """
    if not 0.0 <= progress <= 1.0:
        raise ConfigurationError(f"progress must lie in [0, 1], got {progress}")
    entries: dict[int, Score] = {}
    for pos, score in conf.entries.items():
        if is_suppressed(score):
            entries[pos] = score
        else:
            entries[pos] = score * modulation_factor(weights[pos], progress, params)
    return ConfidenceVector(entries=entries, strategy_tag=conf.strategy_tag)
