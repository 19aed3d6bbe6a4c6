"""Synthetic denoiser: a deterministic stand-in for a masked LM.

The model hides a fixed target completion whose tail is a run of EOT
tokens, and reports confidence q per masked position:

    q = clamp(base_conf
              + context_gain * decided_neighbors_within_W / (2 W)
              + eot_boost    * [effective target is EOT]
              + anchor_pull  * [within W of an anchor slot], 0, 1)

Three independent knobs reproduce the decode pathologies the engine
guards against: confidence that grows with resolved context, inflated
confidence on EOT tails, and inflated confidence next to anchors.
Everything is a pure function of (config, anchors, request), so repeated
runs serialize byte-for-byte identically.

When an anchor is present the model treats it as evidence that content
continues up to it: EOT-targeted positions before the last anchor slot
predict a deterministic filler token instead of EOT. Without this the
hidden target alone would fix the decoded output, and anchoring could
never change the EOT share of a decode.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .denoiser import DenoiserRequest, DenoiserResponse, Pair
from .errors import ConfigurationError
from .jsonfmt import canonical_dumps, quantize, sha256_hex
from .rng import mix64
from .state import Vocabulary

# salts separating the filler-token stream from the distractor stream
_FILLER_SALT = 0xF1
_DISTRACTOR_SALT = 0xD5


@dataclass(frozen=True)
class SyntheticModelConfig:
    """Fixed parameters of the synthetic model.

    target        hidden completion, one token per response position,
                  normally ending in a run of eot_id tokens
    context_window  W: neighborhood radius for the context term
    base_conf     confidence floor, in (0, 1)
    context_gain  weight of the resolved-neighbor fraction
    eot_boost     additive boost where the (effective) target is EOT
    anchor_pull   additive boost within W of an anchor slot
    noise_vocab   candidate pool for distractor / filler tokens
    seed          keys the deterministic distractor choices
    """

    target: tuple[int, ...]
    context_window: int = 4
    base_conf: float = 0.4
    context_gain: float = 0.1
    eot_boost: float = 0.0
    anchor_pull: float = 0.0
    noise_vocab: tuple[int, ...] = ()
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "base_conf", quantize(self.base_conf))
        object.__setattr__(self, "context_gain", quantize(self.context_gain))
        object.__setattr__(self, "eot_boost", quantize(self.eot_boost))
        object.__setattr__(self, "anchor_pull", quantize(self.anchor_pull))
        if not self.target:
            raise ConfigurationError("target must be non-empty")
        if self.context_window < 1:
            raise ConfigurationError(f"context_window must be >= 1, got {self.context_window}")
        if not 0.0 < self.base_conf < 1.0:
            raise ConfigurationError(f"base_conf must lie in (0, 1), got {self.base_conf}")
        for name in ("context_gain", "eot_boost", "anchor_pull"):
            if getattr(self, name) < 0.0:
                raise ConfigurationError(f"{name} must be >= 0")
            if self.base_conf + getattr(self, name) > 1.0:
                raise ConfigurationError(f"base_conf + {name} must be <= 1")
        if not self.noise_vocab:
            raise ConfigurationError("noise_vocab must be non-empty")
        if len(set(self.noise_vocab)) != len(self.noise_vocab):
            raise ConfigurationError("noise_vocab entries must be distinct")

    def eot_suffix_length(self, eot_id: int) -> int:
        n = 0
        for tok in reversed(self.target):
            if tok != eot_id:
                break
            n += 1
        return n

    def eot_suffix_fraction(self, eot_id: int) -> float:
        return self.eot_suffix_length(eot_id) / len(self.target)


class SyntheticDenoiser:
    """Deterministic toy model over a fixed-length response region.

    anchor_positions are the slots pre-filled by the decode loop; the
    model conditions on them (anchor_pull term and the content-continues
    reading of pre-anchor EOT targets).
    """

    def __init__(self, config: SyntheticModelConfig, vocab: Vocabulary,
                 anchor_positions: Iterable[int] = ()) -> None:
        self.config = config
        self.vocab = vocab
        self.anchor_positions = frozenset(anchor_positions)
        for tok in config.target:
            vocab.check_token(tok)
            if tok == vocab.mask_id:
                raise ConfigurationError("target may not contain the mask token")
        for tok in config.noise_vocab:
            vocab.check_token(tok)
            if tok in (vocab.mask_id, vocab.eot_id):
                raise ConfigurationError("noise_vocab may not contain mask or EOT tokens")
        for pos in self.anchor_positions:
            if not 0 <= pos < len(config.target):
                raise ConfigurationError(f"anchor position {pos} outside target of length {len(config.target)}")
        self._effective_target = self._resolve_targets()
        self._near_anchor = self._resolve_pull()

    def _resolve_targets(self) -> tuple[int, ...]:
        cfg = self.config
        if not self.anchor_positions:
            return tuple(cfg.target)
        last_anchor = max(self.anchor_positions)
        resolved = []
        for i, tok in enumerate(cfg.target):
            if tok == self.vocab.eot_id and i < last_anchor:
                resolved.append(self._pick_token(_FILLER_SALT, i, exclude=()))
            else:
                resolved.append(tok)
        return tuple(resolved)

    def _resolve_pull(self) -> tuple[bool, ...]:
        w = self.config.context_window
        return tuple(
            any(abs(i - a) <= w for a in self.anchor_positions)
            for i in range(len(self.config.target))
        )

    def _pick_token(self, salt: int, position: int, exclude: tuple[int, ...]) -> int:
        pool = self.config.noise_vocab
        idx = mix64(self.config.seed, salt, position) % len(pool)
        for _ in range(len(pool)):
            tok = pool[idx]
            if tok not in exclude:
                return tok
            idx = (idx + 1) % len(pool)
        raise ConfigurationError(
            f"noise_vocab too small to provide distinct candidates at position {position}"
        )

    def q(self, position: int, slots: tuple[Optional[int], ...]) -> float:
        cfg = self.config
        w = cfg.context_window
        lo = max(0, position - w)
        hi = min(len(slots), position + w + 1)
        decided = sum(
            1 for j in range(lo, hi) if j != position and slots[j] is not None
        )
        q = cfg.base_conf + cfg.context_gain * decided / (2 * w)
        if self._effective_target[position] == self.vocab.eot_id:
            q += cfg.eot_boost
        if self._near_anchor[position]:
            q += cfg.anchor_pull
        return min(1.0, max(0.0, q))

    def predict(self, request: DenoiserRequest) -> DenoiserResponse:
        cfg = self.config
        if len(request.response_slots) != len(cfg.target):
            raise ConfigurationError(
                f"request length {len(request.response_slots)} != target length {len(cfg.target)}"
            )
        predictions: dict[int, tuple[Pair, ...]] = {}
        for pos in request.masked_positions():
            predictions[pos] = self._pairs(pos, request.response_slots, request.top_k)
        return DenoiserResponse(predictions=predictions)

    def _pairs(self, position: int, slots: tuple[Optional[int], ...], top_k: int) -> tuple[Pair, ...]:
        q = self.q(position, slots)
        top = self._effective_target[position]
        pairs: list[Pair] = [(top, q)]
        # runner-up mass capped at q so the list stays sorted descending
        prob = min(q, 0.9 * (1.0 - q))
        used = (top,)
        for _ in range(top_k - 1):
            tok = self._pick_token(_DISTRACTOR_SALT, position, exclude=used)
            pairs.append((tok, prob))
            used = used + (tok,)
            prob *= 0.1
        return tuple(pairs)

    def model_info(self) -> dict:
        cfg = self.config
        info = {
            "model": "synthetic",
            "model_digest": self.digest(),
            "vocab_size": self.vocab.size,
            "mask_id": self.vocab.mask_id,
            "eot_id": self.vocab.eot_id,
            "model_target": list(cfg.target),
            "model_context_window": cfg.context_window,
            "model_base_conf": cfg.base_conf,
            "model_context_gain": cfg.context_gain,
            "model_eot_boost": cfg.eot_boost,
            "model_anchor_pull": cfg.anchor_pull,
            "model_noise_vocab": list(cfg.noise_vocab),
            "model_seed": cfg.seed,
        }
        return info

    def digest(self) -> str:
        cfg = self.config
        payload = {
            "target": list(cfg.target),
            "context_window": cfg.context_window,
            "base_conf": cfg.base_conf,
            "context_gain": cfg.context_gain,
            "eot_boost": cfg.eot_boost,
            "anchor_pull": cfg.anchor_pull,
            "noise_vocab": list(cfg.noise_vocab),
            "seed": cfg.seed,
            "vocab": {"size": self.vocab.size, "mask_id": self.vocab.mask_id, "eot_id": self.vocab.eot_id},
            "anchor_positions": sorted(self.anchor_positions),
        }
        return sha256_hex(canonical_dumps(payload))


def load_synthetic_config(path: str) -> tuple[SyntheticModelConfig, Vocabulary]:
    """Read a synthetic model description from a JSON file.

    Expected shape:
      {"vocab": {"size": ..., "mask_id": ..., "eot_id": ...},
       "target": [...], "context_window": ..., "base_conf": ...,
       "context_gain": ..., "eot_boost": ..., "anchor_pull": ...,
       "noise_vocab": [...], "seed": ...}
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read synthetic model config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"synthetic model config {path} is not valid JSON: {exc}") from exc
    try:
        vocab = Vocabulary(
            size=raw["vocab"]["size"],
            mask_id=raw["vocab"]["mask_id"],
            eot_id=raw["vocab"]["eot_id"],
        )
        config = SyntheticModelConfig(
            target=tuple(raw["target"]),
            context_window=raw.get("context_window", 4),
            base_conf=raw.get("base_conf", 0.4),
            context_gain=raw.get("context_gain", 0.1),
            eot_boost=raw.get("eot_boost", 0.0),
            anchor_pull=raw.get("anchor_pull", 0.0),
            noise_vocab=tuple(raw.get("noise_vocab", ())),
            seed=raw.get("seed", 0),
        )
    except KeyError as exc:
        raise ConfigurationError(f"synthetic model config {path} missing field {exc}") from exc
    return config, vocab
