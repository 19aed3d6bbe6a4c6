"""Line-delimited decode traces.

One header line (flat run-config object), then one JSON object per step:

    {"step": ..., "progress": ..., "selected": [...], "tokens": [...],
     "conf_base": {"pos": score, ...}, "conf_mod": {"pos": score, ...}}

step is the forward step index (0-based); conf maps cover every masked
position at that step, with null marking a suppressed score. Floats are
printed with 9 significant digits. Re-running the header configuration
regenerates the file byte-for-byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

from .confidence import SUPPRESSED, Score, is_suppressed
from .errors import TraceFormatError
from .jsonfmt import dumps
from .state import AnchorSpec, SequenceState, init_state

STEP_FIELDS = ("step", "progress", "selected", "tokens", "conf_base", "conf_mod")


@dataclass(frozen=True)
class StepRecord:
    step: int
    progress: float
    selected: tuple[int, ...]
    tokens: tuple[int, ...]
    conf_base: dict[int, Score]
    conf_mod: dict[int, Score]

    @property
    def masked_before(self) -> int:
        return len(self.conf_base)

    def to_line(self) -> str:
        return dumps(
            {
                "step": self.step,
                "progress": self.progress,
                "selected": list(self.selected),
                "tokens": list(self.tokens),
                "conf_base": _conf_out(self.conf_base),
                "conf_mod": _conf_out(self.conf_mod),
            }
        )


def _conf_out(entries: dict[int, Score]) -> dict[str, Optional[float]]:
    return {
        str(pos): (None if is_suppressed(entries[pos]) else entries[pos])
        for pos in sorted(entries)
    }


def _conf_in(raw: dict, line_no: int) -> dict[int, Score]:
    entries: dict[int, Score] = {}
    for key, value in raw.items():
        try:
            pos = int(key)
        except ValueError:
            raise TraceFormatError(f"line {line_no}: non-integer position key {key!r}") from None
        entries[pos] = SUPPRESSED if value is None else float(value)
    return entries


@dataclass
class DecodeTrace:
    header: dict
    steps: list[StepRecord]

    def lines(self) -> list[str]:
        return [dumps(self.header)] + [s.to_line() for s in self.steps]

    def to_text(self) -> str:
        return "\n".join(self.lines()) + "\n"

    def step_text(self) -> str:
        """Step lines only; lets runs with different headers be compared."""
        return "\n".join(s.to_line() for s in self.steps) + "\n"

    def write(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_text())

    @classmethod
    def from_text(cls, text: str) -> "DecodeTrace":
        lines = [ln for ln in text.split("\n") if ln.strip()]
        if not lines:
            raise TraceFormatError("empty trace")
        header = _parse_line(lines[0], 1)
        if not isinstance(header, dict) or "L" not in header:
            raise TraceFormatError("line 1: missing or malformed header")
        steps = []
        for idx, line in enumerate(lines[1:], start=2):
            obj = _parse_line(line, idx)
            missing = [f for f in STEP_FIELDS if f not in obj]
            if missing:
                raise TraceFormatError(f"line {idx}: missing fields {missing}")
            steps.append(
                StepRecord(
                    step=int(obj["step"]),
                    progress=float(obj["progress"]),
                    selected=tuple(obj["selected"]),
                    tokens=tuple(obj["tokens"]),
                    conf_base=_conf_in(obj["conf_base"], idx),
                    conf_mod=_conf_in(obj["conf_mod"], idx),
                )
            )
        return cls(header=header, steps=steps)

    @classmethod
    def read(cls, path: str) -> "DecodeTrace":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_text(fh.read())

    def anchor_spec(self) -> AnchorSpec:
        return AnchorSpec(
            tokens=tuple(self.header.get("anchor_tokens", ())),
            offset_from_end=self.header.get("anchor_offset", 20),
            display=self.header.get("anchor_display", ""),
        )

    def replay(self) -> SequenceState:
        """Rebuild the final state by applying each step's assignments.

        Validates that the selected positions across steps partition the
        non-anchor region exactly.
        """
        length = self.header["L"]
        state = init_state(length, self.anchor_spec())
        state.total_steps = len(self.steps)
        for n, record in enumerate(self.steps):
            if len(record.selected) != len(record.tokens):
                raise TraceFormatError(f"step {record.step}: selected/tokens length mismatch")
            state.step = state.total_steps - n
            try:
                state.unmask(dict(zip(record.selected, record.tokens)))
            except Exception as exc:
                raise TraceFormatError(f"step {record.step}: invalid assignment ({exc})") from exc
        if state.masked_count() != 0:
            raise TraceFormatError("trace does not decide every non-anchor position")
        return state

    def final_tokens(self) -> list[int]:
        return list(self.replay().slots)  # type: ignore[arg-type]

    def decided_at(self) -> list[int]:
        return list(self.replay().decided_at)  # type: ignore[arg-type]


def _parse_line(line: str, line_no: int):
    try:
        return json.loads(line)
    except json.JSONDecodeError as exc:
        raise TraceFormatError(f"line {line_no}: invalid JSON ({exc.msg})") from None
