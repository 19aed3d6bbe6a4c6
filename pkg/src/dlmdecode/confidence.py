"""Confidence strategies: score masked positions from denoiser predictions.

A ConfidenceVector maps each masked position to a finite score or to the
SUPPRESSED sentinel, which orders below every finite value without the
portability hazards of floating-point infinities.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Union

from .denoiser import DenoiserResponse
from .errors import ContractViolationError
from .rng import uniform

TOP_PROBABILITY = "top_probability"
TOP_MARGIN = "top_margin"
RANDOM = "random"
STRATEGY_TAGS = (TOP_PROBABILITY, TOP_MARGIN, RANDOM)


class _Suppressed:
    """Sentinel score ranked below all finite confidences."""

    _instance = None

    def __new__(cls) -> "_Suppressed":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "SUPPRESSED"


SUPPRESSED = _Suppressed()

Score = Union[float, _Suppressed]


def is_suppressed(score: Score) -> bool:
    return score is SUPPRESSED


@dataclass(frozen=True)
class ConfidenceVector:
    """Scores for the masked positions of one step."""

    entries: dict[int, Score]
    strategy_tag: str

    def positions(self) -> list[int]:
        return sorted(self.entries)


def sort_key(entries: dict[int, Score]):
    """Selection order: finite scores descending, SUPPRESSED last, ties by
    lowest position. Usable directly as a sort key over positions."""

    def key(pos: int):
        score = entries[pos]
        if is_suppressed(score):
            return (1, 0.0, pos)
        return (0, -score, pos)

    return key


def top_probability(response: DenoiserResponse) -> ConfidenceVector:
    """Confidence = probability of the top predicted token."""
    entries: dict[int, Score] = {
        pos: pairs[0][1] for pos, pairs in response.predictions.items()
    }
    return ConfidenceVector(entries=entries, strategy_tag=TOP_PROBABILITY)


def top_margin(response: DenoiserResponse) -> ConfidenceVector:
    """Confidence = gap between the two highest predicted probabilities."""
    entries: dict[int, Score] = {}
    for pos, pairs in response.predictions.items():
        if len(pairs) < 2:
            raise ContractViolationError(
                f"top_margin needs at least 2 pairs at position {pos}, got {len(pairs)}"
            )
        entries[pos] = pairs[0][1] - pairs[1][1]
    return ConfidenceVector(entries=entries, strategy_tag=TOP_MARGIN)


def random_scores(masked_positions: Iterable[int], seed: int, step: int) -> ConfidenceVector:
    """Seeded uniform scores keyed by (seed, step, position).

    Counter-based: no generator state, so any (seed, step, position)
    triple yields the same score on every platform.
    """
    entries: dict[int, Score] = {
        pos: uniform(seed, step, pos) for pos in masked_positions
    }
    return ConfidenceVector(entries=entries, strategy_tag=RANDOM)


def eot_suppress(conf: ConfidenceVector, response: DenoiserResponse, eot_id: int) -> ConfidenceVector:
    """Replace the score of every position whose argmax is the EOT token.

    Affects selection order only: the argmax token decoded when a
    suppressed position is eventually selected is unchanged (a hard ban
    on decoding EOT is a separate scheduler option).
    """
    entries: dict[int, Score] = {}
    for pos, score in conf.entries.items():
        if response.argmax(pos) == eot_id:
            entries[pos] = SUPPRESSED
        else:
            entries[pos] = score
    return ConfidenceVector(entries=entries, strategy_tag=conf.strategy_tag)
