"""Decode loops: fully parallel and block-wise (semi-autoregressive).

Each step issues one denoiser call over the full region, scores the
masked positions with the configured strategy, optionally suppresses
argmax-EOT positions and reweights near-anchor scores, then unmasks the
k_t highest-scoring positions with their argmax tokens (ties resolved
toward the lowest position index unless seeded random tie-break is on).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .confidence import (
    RANDOM,
    STRATEGY_TAGS,
    ConfidenceVector,
    eot_suppress,
    is_suppressed,
    random_scores,
    top_margin,
    top_probability,
)
from .denoiser import Denoiser, DenoiserRequest, predict_checked
from .errors import ConfigurationError
from .modulation import ModulationParams, compute_weights
from .modulation import modulate as modulate_conf
from .rng import mix64
from .state import AnchorSpec, Vocabulary, init_state
from .trace import DecodeTrace, StepRecord

FULLY_NON_AR = "fully_non_ar"
SEMI_AR = "semi_ar"

TIE_BREAK_INDEX = "index"
TIE_BREAK_RANDOM = "random"


@dataclass(frozen=True)
class DecodeConfig:
    length: int
    steps: int
    strategy: str = "top_probability"
    anchor: AnchorSpec = field(default_factory=AnchorSpec)
    modulation: Optional[ModulationParams] = None
    eot_suppression: bool = False
    eot_hard_ban: bool = False
    mode: str = FULLY_NON_AR
    block_size: Optional[int] = None
    tie_break: str = TIE_BREAK_INDEX
    seed: int = 0
    top_k: int = 2
    prompt_tokens: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.length < 1:
            raise ConfigurationError(f"length must be >= 1, got {self.length}")
        if self.strategy not in STRATEGY_TAGS:
            raise ConfigurationError(
                f"unknown strategy {self.strategy!r}; expected one of {STRATEGY_TAGS}"
            )
        if self.mode not in (FULLY_NON_AR, SEMI_AR):
            raise ConfigurationError(f"unknown mode {self.mode!r}")
        if self.mode == SEMI_AR:
            if self.block_size is None or self.block_size < 1:
                raise ConfigurationError("semi_ar mode requires block_size >= 1")
            if self.anchor.enabled:
                raise ConfigurationError("anchoring is disabled in semi_ar mode")
        if self.tie_break not in (TIE_BREAK_INDEX, TIE_BREAK_RANDOM):
            raise ConfigurationError(f"unknown tie_break {self.tie_break!r}")
        if self.eot_hard_ban and not self.eot_suppression:
            raise ConfigurationError("eot_hard_ban requires eot_suppression")
        if self.top_k < 2:
            raise ConfigurationError(f"top_k must be >= 2, got {self.top_k}")


@dataclass
class DecodeResult:
    tokens: list[int]
    trace: DecodeTrace


def schedule_counts(length: int, steps: int, anchor_len: int = 0) -> list[int]:
    """Per-step unmask counts: k_t = ceil(remaining / steps_left).

    Sums to the masked pool (length - anchor_len); every count stays
    within 1 of the pool/steps average, and equals it exactly when steps
    divides the pool.
    """
    pool = length - anchor_len
    if steps < 1:
        raise ConfigurationError(f"steps must be >= 1, got {steps}")
    if steps > pool:
        raise ConfigurationError(
            f"steps={steps} exceeds the maskable pool of {pool} positions "
            f"(length {length}, anchor {anchor_len})"
        )
    counts = []
    remaining = pool
    for left in range(steps, 0, -1):
        k = -(-remaining // left)
        counts.append(k)
        remaining -= k
    return counts


def _select(entries: dict, k: int, tie_break: str, seed: int, step: int) -> list[int]:
    """Positions of the k best scores, best first. SUPPRESSED ranks below
    every finite score; ties go to the lowest index (or a seeded shuffle)."""
    if tie_break == TIE_BREAK_RANDOM:
        def key(pos: int):
            score = entries[pos]
            if is_suppressed(score):
                return (1, 0.0, mix64(seed, step, pos), pos)
            return (0, -score, mix64(seed, step, pos), pos)
    else:
        def key(pos: int):
            score = entries[pos]
            if is_suppressed(score):
                return (1, 0.0, pos)
            return (0, -score, pos)
    return sorted(entries, key=key)[:k]


def _base_confidence(strategy: str, response, masked: list[int], seed: int, step: int) -> ConfidenceVector:
    if strategy == "top_probability":
        return top_probability(response)
    if strategy == "top_margin":
        return top_margin(response)
    if strategy == RANDOM:
        return random_scores(masked, seed, step)
    raise ConfigurationError(f"unknown strategy {strategy!r}")


def _model_info(denoiser: Denoiser, override: Optional[dict]) -> dict:
    if override is not None:
        return override
    getter = getattr(denoiser, "model_info", None)
    if callable(getter):
        return getter()
    return {"model": "unknown"}


def _vocab_from_info(info: dict) -> Optional[Vocabulary]:
    keys = ("vocab_size", "mask_id", "eot_id")
    if all(info.get(k) is not None for k in keys):
        return Vocabulary(size=info["vocab_size"], mask_id=info["mask_id"], eot_id=info["eot_id"])
    return None


def build_header(config: DecodeConfig, model_info: dict) -> dict:
    mod = config.modulation
    header = {
        "trace_version": 1,
        "L": config.length,
        "steps": config.steps,
        "strategy": config.strategy,
        "top_k": config.top_k,
        "anchor_tokens": list(config.anchor.tokens),
        "anchor_offset": config.anchor.offset_from_end,
        "anchor_display": config.anchor.display,
        "modulation": mod is not None,
        "kappa": mod.kappa if mod else None,
        "beta": mod.beta if mod else None,
        "gamma": mod.gamma if mod else None,
        "progress_dependent": mod.progress_dependent if mod else None,
        "eot_suppression": config.eot_suppression,
        "eot_hard_ban": config.eot_hard_ban,
        "mode": config.mode,
        "block_size": config.block_size,
        "tie_break": config.tie_break,
        "seed": config.seed,
        "prompt_tokens": list(config.prompt_tokens),
    }
    header.update(model_info)
    return header


def decode(config: DecodeConfig, denoiser: Denoiser, model_info: Optional[dict] = None) -> DecodeResult:
    """Run a full decode and return final tokens plus the step trace."""
    if config.mode == SEMI_AR:
        return decode_semi_ar(config, denoiser, model_info)

    info = _model_info(denoiser, model_info)
    vocab = _vocab_from_info(info)
    eot_id = info.get("eot_id")
    if (config.eot_suppression or config.eot_hard_ban) and eot_id is None:
        raise ConfigurationError("EOT suppression requires a model that exposes eot_id")

    anchor_len = len(config.anchor.tokens)
    counts = schedule_counts(config.length, config.steps, anchor_len)
    state = init_state(config.length, config.anchor, vocab)
    state.total_steps = config.steps
    weights = None
    if config.modulation is not None:
        weights = compute_weights(config.length, state.anchor_positions, config.modulation)

    records: list[StepRecord] = []
    for forward, k in enumerate(counts):
        state.step = config.steps - forward
        masked = state.masked_positions()
        request = DenoiserRequest(
            prompt_tokens=config.prompt_tokens,
            response_slots=tuple(state.slots),
            top_k=config.top_k,
        )
        response = predict_checked(denoiser, request)
        conf_base = _base_confidence(config.strategy, response, masked, config.seed, forward)
        progress = state.progress()
        conf = conf_base
        if config.eot_suppression:
            conf = eot_suppress(conf, response, eot_id)
        if config.modulation is not None:
            conf = modulate_conf(conf, weights, progress, config.modulation)
        selected = _select(conf.entries, k, config.tie_break, config.seed, forward)
        tokens = [_decode_token(response, pos, config, eot_id) for pos in selected]
        records.append(
            StepRecord(
                step=forward,
                progress=progress,
                selected=tuple(selected),
                tokens=tuple(tokens),
                conf_base=dict(conf_base.entries),
                conf_mod=dict(conf.entries),
            )
        )
        state.unmask(dict(zip(selected, tokens)))

    trace = DecodeTrace(header=build_header(config, info), steps=records)
    return DecodeResult(tokens=list(state.slots), trace=trace)  # type: ignore[arg-type]


def _decode_token(response, pos: int, config: DecodeConfig, eot_id: Optional[int]) -> int:
    pairs = response.predictions[pos]
    if config.eot_hard_ban and pairs[0][0] == eot_id:
        return pairs[1][0]
    return pairs[0][0]


def block_budgets(sizes: list[int], total: int) -> list[int]:
    """Split a step budget across blocks, proportional to block size.

    Greedy left to right with the same ceil rule as schedule_counts,
    clamped so every block gets at least one step and no block gets more
    steps than tokens.
    """
    n = len(sizes)
    pool = sum(sizes)
    if total < n:
        raise ConfigurationError(f"steps={total} cannot cover {n} blocks (need >= 1 step per block)")
    if total > pool:
        raise ConfigurationError(f"steps={total} exceeds the {pool} maskable positions")
    budgets = []
    rem_steps = total
    rem_tokens = pool
    for idx, size in enumerate(sizes):
        blocks_after = n - idx - 1
        tokens_after = rem_tokens - size
        b = -(-rem_steps * size // rem_tokens)
        b = min(b, size, rem_steps - blocks_after)
        b = max(b, 1, rem_steps - tokens_after)
        budgets.append(b)
        rem_steps -= b
        rem_tokens -= size
    if rem_steps != 0:
        raise ConfigurationError("internal error: block budgets do not sum to the step budget")
    return budgets


def decode_semi_ar(config: DecodeConfig, denoiser: Denoiser, model_info: Optional[dict] = None) -> DecodeResult:
    """Block-wise decode: blocks complete strictly left to right.

    The denoiser still sees the whole region each step; selection is
    restricted to the active block. Block step budgets follow
    block_budgets, so block_size == length reproduces the fully parallel
    decode exactly.
    """
    if config.mode != SEMI_AR:
        raise ConfigurationError("decode_semi_ar requires mode='semi_ar'")
    info = _model_info(denoiser, model_info)
    vocab = _vocab_from_info(info)
    eot_id = info.get("eot_id")
    if (config.eot_suppression or config.eot_hard_ban) and eot_id is None:
        raise ConfigurationError("EOT suppression requires a model that exposes eot_id")

    length = config.length
    bs = config.block_size
    blocks = [(start, min(start + bs, length)) for start in range(0, length, bs)]
    sizes = [end - start for start, end in blocks]
    budgets = block_budgets(sizes, config.steps)

    state = init_state(length, config.anchor, vocab)
    state.total_steps = config.steps
    weights = None
    if config.modulation is not None:
        weights = compute_weights(length, state.anchor_positions, config.modulation)

    records: list[StepRecord] = []
    forward = 0
    for (start, end), size, budget in zip(blocks, sizes, budgets):
        for k in schedule_counts(size, budget, 0):
            state.step = config.steps - forward
            masked = state.masked_positions()
            request = DenoiserRequest(
                prompt_tokens=config.prompt_tokens,
                response_slots=tuple(state.slots),
                top_k=config.top_k,
            )
            response = predict_checked(denoiser, request)
            conf_base = _base_confidence(config.strategy, response, masked, config.seed, forward)
            progress = state.progress()
            conf = conf_base
            if config.eot_suppression:
                conf = eot_suppress(conf, response, eot_id)
            if config.modulation is not None:
                conf = modulate_conf(conf, weights, progress, config.modulation)
            in_block = {pos: conf.entries[pos] for pos in conf.entries if start <= pos < end}
            selected = _select(in_block, k, config.tie_break, config.seed, forward)
            tokens = [_decode_token(response, pos, config, eot_id) for pos in selected]
            records.append(
                StepRecord(
                    step=forward,
                    progress=progress,
                    selected=tuple(selected),
                    tokens=tuple(tokens),
                    conf_base=dict(conf_base.entries),
                    conf_mod=dict(conf.entries),
                )
            )
            state.unmask(dict(zip(selected, tokens)))
            forward += 1

    trace = DecodeTrace(header=build_header(config, info), steps=records)
    return DecodeResult(tokens=list(state.slots), trace=trace)  # type: ignore[arg-type]
