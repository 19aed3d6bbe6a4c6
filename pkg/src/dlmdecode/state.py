"""Sequence state for iterative unmasking over a fixed-length response region.

Positions are response-relative (0..length-1). A masked slot is held as
None; decided slots hold token ids. Anchor slots are pre-filled at
initialization and recorded as pre-decoded (decided_at == PRE_DECODED).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .errors import ConfigurationError, ContractViolationError

# decided_at value for slots filled before the first step (anchors)
PRE_DECODED = -1


@dataclass(frozen=True)
class Vocabulary:
    """Token id space of the active model.

    The engine never tokenizes text; it only needs the special ids to
    recognize mask/end-of-text tokens and to bound-check inputs.
    """

    size: int
    mask_id: int
    eot_id: int

    def __post_init__(self) -> None:
        if self.size < 2:
            raise ConfigurationError(f"vocabulary size must be >= 2, got {self.size}")
        for name in ("mask_id", "eot_id"):
            tok = getattr(self, name)
            if not 0 <= tok < self.size:
                raise ConfigurationError(f"{name}={tok} outside vocabulary of size {self.size}")
        if self.mask_id == self.eot_id:
            raise ConfigurationError("mask_id and eot_id must differ")

    def check_token(self, token: int) -> None:
        if not 0 <= token < self.size:
            raise ConfigurationError(f"token id {token} outside vocabulary of size {self.size}")


@dataclass(frozen=True)
class AnchorSpec:
    """A short token run pre-filled near the end of the response region.

    The run ends offset_from_end positions before the last slot: for
    length L it occupies [L - offset_from_end - len(tokens),
    L - offset_from_end - 1]. Empty tokens disable anchoring.
    """

    tokens: tuple[int, ...] = ()
    offset_from_end: int = 20
    display: str = ""

    def __post_init__(self) -> None:
        if self.offset_from_end < 0:
            raise ConfigurationError(f"offset_from_end must be >= 0, got {self.offset_from_end}")

    @property
    def enabled(self) -> bool:
        return len(self.tokens) > 0

    def positions(self, length: int) -> range:
        """Anchor slot indices for a response region of the given length."""
        if not self.enabled:
            return range(0)
        start = length - self.offset_from_end - len(self.tokens)
        if start < 0:
            raise ConfigurationError(
                f"anchor of length {len(self.tokens)} at offset {self.offset_from_end} "
                f"does not fit in a response region of length {length}"
            )
        return range(start, start + len(self.tokens))


@dataclass
class SequenceState:
    """Mutable decode state owned by a single decode loop."""

    slots: list[Optional[int]]
    anchor_positions: frozenset[int] = frozenset()
    decided_at: list[Optional[int]] = field(default_factory=list)
    step: int = 0          # countdown step t, set by the scheduler (T..1)
    total_steps: int = 0   # T, set by the scheduler

    @property
    def length(self) -> int:
        return len(self.slots)

    def masked_positions(self) -> list[int]:
        return [i for i, tok in enumerate(self.slots) if tok is None]

    def masked_count(self) -> int:
        return sum(1 for tok in self.slots if tok is None)

    def progress(self) -> float:
        """Fraction of the response region already decided: 1 - masked/L."""
        return 1.0 - self.masked_count() / self.length

    def unmask(self, assignments: dict[int, int]) -> "SequenceState":
        """Fill masked slots with decided tokens.

        Records the forward step index (total_steps - step) in decided_at.
        Empty assignments are a no-op. Assigning a non-masked position or
        passing out-of-range positions is a contract violation.
        """
        forward = self.total_steps - self.step
        for pos, token in assignments.items():
            if not 0 <= pos < self.length:
                raise ContractViolationError(f"position {pos} outside response region of length {self.length}")
            if self.slots[pos] is not None:
                raise ContractViolationError(f"position {pos} is already decided")
            self.slots[pos] = token
            self.decided_at[pos] = forward
        return self


def init_state(length: int, anchor: AnchorSpec, vocab: Optional[Vocabulary] = None) -> SequenceState:
    """Build an all-masked state with anchor slots pre-filled.

    Parameters
    ----------
    length : response region length L
    anchor : anchor specification; empty tokens leave every slot masked
    vocab  : when given, anchor tokens are bound-checked against it
    """
    if length < 1:
        raise ConfigurationError(f"response length must be >= 1, got {length}")
    slots: list[Optional[int]] = [None] * length
    decided: list[Optional[int]] = [None] * length
    positions = anchor.positions(length)
    if vocab is not None:
        for tok in anchor.tokens:
            vocab.check_token(tok)
            if tok == vocab.mask_id:
                raise ConfigurationError("anchor tokens may not include the mask token")
    for pos, tok in zip(positions, anchor.tokens):
        slots[pos] = tok
        decided[pos] = PRE_DECODED
    return SequenceState(slots=slots, anchor_positions=frozenset(positions), decided_at=decided)
