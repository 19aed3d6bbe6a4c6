"""Assemble denoisers and decode configs from run descriptions.

Model specs are strings: "synthetic:<config.json>", "table:<table.json>",
or "remote:<host:port>". The DLMDECODE_ENDPOINT environment variable
overrides the remote address. Trace headers written by the scheduler
carry everything needed to re-run a synthetic-backed decode, which
rerun_from_header does.
"""

from __future__ import annotations

import json
import os
from typing import Iterable, Optional

from .errors import ConfigurationError
from .modulation import ModulationParams
from .remote import RemoteDenoiser
from .scheduler import DecodeConfig, DecodeResult, decode
from .state import AnchorSpec, Vocabulary
from .synthetic import SyntheticDenoiser, SyntheticModelConfig, load_synthetic_config
from .tables import TableDenoiser

ENDPOINT_ENV = "DLMDECODE_ENDPOINT"

_STRATEGY_ALIASES = {
    "top_probability": "top_probability",
    "top-prob": "top_probability",
    "top_prob": "top_probability",
    "top_margin": "top_margin",
    "top-margin": "top_margin",
    "random": "random",
}


def resolve_strategy(name: str) -> str:
    try:
        return _STRATEGY_ALIASES[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown strategy {name!r}; expected one of {sorted(set(_STRATEGY_ALIASES.values()))}"
        ) from None


def load_anchor_file(path: str) -> AnchorSpec:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read anchor file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"anchor file {path} is not valid JSON: {exc}") from exc
    if "tokens" not in raw:
        raise ConfigurationError(f"anchor file {path} lacks a 'tokens' field")
    return AnchorSpec(
        tokens=tuple(raw["tokens"]),
        offset_from_end=raw.get("offset_from_end", 20),
        display=raw.get("display", ""),
    )


def build_denoiser(model_spec: str, anchor_positions: Iterable[int] = (),
                   eot_id: Optional[int] = None, mask_id: Optional[int] = None,
                   vocab_size: Optional[int] = None):
    """Instantiate the denoiser named by a model spec.

    Returns (denoiser, model_info). Explicit vocab ids override whatever
    the backend reports (needed for remote models, which carry none).
    """
    kind, sep, rest = model_spec.partition(":")
    if not sep:
        raise ConfigurationError(
            f"model spec {model_spec!r} must look like synthetic:<path>, table:<path>, or remote:<host:port>"
        )
    if kind == "synthetic":
        config, vocab = load_synthetic_config(rest)
        denoiser = SyntheticDenoiser(config, vocab, anchor_positions)
    elif kind == "table":
        denoiser = TableDenoiser.load(rest)
    elif kind == "remote":
        address = os.environ.get(ENDPOINT_ENV) or rest
        denoiser = RemoteDenoiser(address, eot_id=eot_id, mask_id=mask_id, vocab_size=vocab_size)
    else:
        raise ConfigurationError(f"unknown model backend {kind!r}")
    info = denoiser.model_info()
    for key, value in (("eot_id", eot_id), ("mask_id", mask_id), ("vocab_size", vocab_size)):
        if value is not None:
            info[key] = value
    return denoiser, info


def rerun_from_header(header: dict) -> DecodeResult:
    """Re-run the decode described by a trace header (synthetic backend only)."""
    if header.get("model") != "synthetic":
        raise ConfigurationError(
            f"rerun requires a synthetic-backed trace, got model={header.get('model')!r}"
        )
    vocab = Vocabulary(
        size=header["vocab_size"], mask_id=header["mask_id"], eot_id=header["eot_id"]
    )
    model_config = SyntheticModelConfig(
        target=tuple(header["model_target"]),
        context_window=header["model_context_window"],
        base_conf=header["model_base_conf"],
        context_gain=header["model_context_gain"],
        eot_boost=header["model_eot_boost"],
        anchor_pull=header["model_anchor_pull"],
        noise_vocab=tuple(header["model_noise_vocab"]),
        seed=header["model_seed"],
    )
    anchor = AnchorSpec(
        tokens=tuple(header.get("anchor_tokens", ())),
        offset_from_end=header.get("anchor_offset", 20),
        display=header.get("anchor_display", ""),
    )
    modulation = None
    if header.get("modulation"):
        modulation = ModulationParams(
            kappa=header["kappa"],
            beta=header["beta"],
            gamma=header["gamma"],
            progress_dependent=header.get("progress_dependent", True),
        )
    config = DecodeConfig(
        length=header["L"],
        steps=header["steps"],
        strategy=header["strategy"],
        anchor=anchor,
        modulation=modulation,
        eot_suppression=header.get("eot_suppression", False),
        eot_hard_ban=header.get("eot_hard_ban", False),
        mode=header.get("mode", "fully_non_ar"),
        block_size=header.get("block_size"),
        tie_break=header.get("tie_break", "index"),
        seed=header.get("seed", 0),
        top_k=header.get("top_k", 2),
        prompt_tokens=tuple(header.get("prompt_tokens", ())),
    )
    denoiser = SyntheticDenoiser(model_config, vocab, anchor.positions(config.length))
    return decode(config, denoiser)
