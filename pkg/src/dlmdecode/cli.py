"""Command-line front end.

    dlmdecode decode --model synthetic:model.json --length 256 --trace out.jsonl
    dlmdecode sweep  --model synthetic:model.json --length 256 --anchor-file a.json
    dlmdecode stats  out.jsonl --bins 32

Exit codes: 0 success, 1 configuration error, 2 denoiser/protocol error,
3 trace or IO error. A JSON config file (--config) may supply any flag
value by its long name with dashes as underscores; explicit flags win.
"""

from __future__ import annotations

import argparse
import importlib.resources
import json
import sys
import time
from typing import Optional, Sequence

from .errors import ConfigurationError, DenoiserError, TraceFormatError
from .jsonfmt import dumps
from .modulation import DEFAULT_BETA, DEFAULT_GAMMA, DEFAULT_KAPPA, ModulationParams
from .runs import build_denoiser, load_anchor_file, resolve_strategy
from .scheduler import DecodeConfig, decode
from .state import AnchorSpec
from .stats import (
    DEFAULT_BIN_COUNT,
    DEFAULT_EARLY_FRACTION,
    compare_runs,
    early_decode_histogram,
    trace_eot_ratio,
)
from .tables import RecordingDenoiser
from .trace import DecodeTrace

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DENOISER = 2
EXIT_IO = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; route through the config-error path
    def error(self, message: str):
        raise ConfigurationError(message)


def _bool_action():
    return argparse.BooleanOptionalAction


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dlmdecode", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    dec = sub.add_parser("decode", parents=[], help="run one or more decodes")
    _add_run_flags(dec, with_modulation_values=True)
    dec.add_argument("--trace", help="trace output path (seed index inserted for multi-seed runs)")
    dec.add_argument("--record-table", help="record the denoiser's answers to a prediction table")

    sw = sub.add_parser("sweep", help="grid-sweep modulation parameters")
    _add_run_flags(sw, with_modulation_values=False)
    sw.add_argument("--grid", help="JSON grid file with kappa/beta/gamma lists (default: built-in)")
    sw.add_argument("--bins", type=int, default=DEFAULT_BIN_COUNT)
    sw.add_argument("--early-fraction", type=float, default=DEFAULT_EARLY_FRACTION)
    sw.add_argument("--out", help="CSV output path (default: stdout)")

    st = sub.add_parser("stats", help="report trace diagnostics")
    st.add_argument("traces", nargs="+", help="trace files")
    st.add_argument("--bins", type=int, default=DEFAULT_BIN_COUNT)
    st.add_argument("--early-fraction", type=float, default=DEFAULT_EARLY_FRACTION)
    st.add_argument("--compare", action="store_true", help="compare exactly two traces (second minus first)")
    st.add_argument("--format", choices=("jsonl", "csv"), default="jsonl")
    st.add_argument("--out", help="output path (default: stdout)")
    return parser


def _add_run_flags(p: argparse.ArgumentParser, with_modulation_values: bool) -> None:
    p.add_argument("--config", help="JSON file supplying flag defaults")
    p.add_argument("--model", help="synthetic:<path> | table:<path> | remote:<host:port>")
    p.add_argument("--length", type=int)
    p.add_argument("--steps", type=int, help="decoding steps (default: length/2)")
    p.add_argument("--strategy", help="top_probability | top_margin | random")
    p.add_argument("--anchor-file", help="JSON anchor spec: tokens, offset_from_end, display")
    if with_modulation_values:
        p.add_argument("--kappa", type=float)
        p.add_argument("--beta", type=float)
        p.add_argument("--gamma", type=float)
    p.add_argument("--modulation", action=_bool_action(), default=None,
                   help="force reweighting on/off (default: on when an anchor is set)")
    p.add_argument("--progress-dependent", action=_bool_action(), default=None)
    p.add_argument("--eot-suppression", action=_bool_action(), default=None)
    p.add_argument("--eot-hard-ban", action=_bool_action(), default=None)
    p.add_argument("--mode", choices=("fully_non_ar", "semi_ar"))
    p.add_argument("--block-size", type=int)
    p.add_argument("--tie-break", choices=("index", "random"))
    p.add_argument("--seed", type=int)
    p.add_argument("--seeds", help="comma-separated seed list (overrides --seed/--repeat)")
    p.add_argument("--repeat", type=int, help="run this many consecutive seeds")
    p.add_argument("--top-k", type=int)
    p.add_argument("--prompt-file", help="JSON file holding a prompt token list")
    p.add_argument("--eot-id", type=int, help="EOT token id (remote backends)")
    p.add_argument("--mask-id", type=int, help="mask token id (remote backends)")
    p.add_argument("--vocab-size", type=int, help="vocabulary size (remote backends)")


_RUN_DEFAULTS = {
    "model": None,
    "length": None,
    "steps": None,
    "strategy": "top_probability",
    "anchor_file": None,
    "kappa": DEFAULT_KAPPA,
    "beta": DEFAULT_BETA,
    "gamma": DEFAULT_GAMMA,
    "modulation": None,
    "progress_dependent": True,
    "eot_suppression": False,
    "eot_hard_ban": False,
    "mode": "fully_non_ar",
    "block_size": None,
    "tie_break": "index",
    "seed": 0,
    "seeds": None,
    "repeat": 1,
    "top_k": 2,
    "prompt_file": None,
    "eot_id": None,
    "mask_id": None,
    "vocab_size": None,
}


def _load_json(path: str, what: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read {what} {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{what} {path} is not valid JSON: {exc}") from exc


def _merge_settings(args: argparse.Namespace) -> dict:
    """Defaults < config file < explicit flags."""
    settings = dict(_RUN_DEFAULTS)
    if getattr(args, "config", None):
        file_values = _load_json(args.config, "config file")
        if not isinstance(file_values, dict):
            raise ConfigurationError(f"config file {args.config} must hold a JSON object")
        unknown = sorted(set(file_values) - set(_RUN_DEFAULTS))
        if unknown:
            raise ConfigurationError(f"config file {args.config} has unknown keys {unknown}")
        settings.update(file_values)
    for key in _RUN_DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    return settings


def _resolve_seeds(settings: dict) -> list[int]:
    if settings["seeds"]:
        raw = settings["seeds"]
        parts = raw.split(",") if isinstance(raw, str) else list(raw)
        try:
            return [int(s) for s in parts]
        except ValueError:
            raise ConfigurationError(f"bad seed list {raw!r}") from None
    repeat = settings["repeat"]
    if repeat < 1:
        raise ConfigurationError(f"repeat must be >= 1, got {repeat}")
    return [settings["seed"] + i for i in range(repeat)]


def _build_run(settings: dict, seed: int) -> tuple[DecodeConfig, AnchorSpec]:
    if settings["length"] is None:
        raise ConfigurationError("--length is required")
    if settings["model"] is None:
        raise ConfigurationError("--model is required")
    length = settings["length"]
    steps = settings["steps"] if settings["steps"] is not None else length // 2
    anchor = AnchorSpec()
    if settings["anchor_file"]:
        anchor = load_anchor_file(settings["anchor_file"])
    anchor.positions(length)  # geometry check before any work
    modulation = None
    want_mod = settings["modulation"]
    if want_mod is None:
        want_mod = anchor.enabled
    if want_mod:
        modulation = ModulationParams(
            kappa=settings["kappa"],
            beta=settings["beta"],
            gamma=settings["gamma"],
            progress_dependent=settings["progress_dependent"],
        )
    prompt: tuple[int, ...] = ()
    if settings["prompt_file"]:
        raw = _load_json(settings["prompt_file"], "prompt file")
        if not isinstance(raw, list):
            raise ConfigurationError(f"prompt file {settings['prompt_file']} must hold a JSON list")
        prompt = tuple(int(t) for t in raw)
    config = DecodeConfig(
        length=length,
        steps=steps,
        strategy=resolve_strategy(settings["strategy"]),
        anchor=anchor,
        modulation=modulation,
        eot_suppression=settings["eot_suppression"],
        eot_hard_ban=settings["eot_hard_ban"],
        mode=settings["mode"],
        block_size=settings["block_size"],
        tie_break=settings["tie_break"],
        seed=seed,
        top_k=settings["top_k"],
        prompt_tokens=prompt,
    )
    return config, anchor


def _trace_path(base: str, seed: int, multi: bool) -> str:
    if not multi:
        return base
    stem, dot, ext = base.rpartition(".")
    if not dot:
        return f"{base}.s{seed}"
    return f"{stem}.s{seed}.{ext}"


def cmd_decode(args: argparse.Namespace) -> int:
    settings = _merge_settings(args)
    seeds = _resolve_seeds(settings)
    multi = len(seeds) > 1
    recorder = None
    for seed in seeds:
        config, anchor = _build_run(settings, seed)
        denoiser, info = build_denoiser(
            settings["model"],
            anchor.positions(config.length),
            eot_id=settings["eot_id"],
            mask_id=settings["mask_id"],
            vocab_size=settings["vocab_size"],
        )
        if args.record_table:
            recorder = RecordingDenoiser(denoiser)
            denoiser = recorder
        result = decode(config, denoiser, info)
        summary = {"seed": seed, "length": config.length, "steps": config.steps}
        if info.get("eot_id") is not None:
            summary["eot_ratio"] = trace_eot_ratio(result.trace)
        if args.trace:
            path = _trace_path(args.trace, seed, multi)
            try:
                result.trace.write(path)
            except OSError as exc:
                raise TraceFormatError(f"cannot write trace {path}: {exc}") from exc
            summary["trace"] = path
        print(dumps(summary))
        if recorder is not None:
            meta = {}
            if info.get("vocab_size") is not None:
                meta["vocab"] = {
                    "size": info.get("vocab_size"),
                    "mask_id": info.get("mask_id"),
                    "eot_id": info.get("eot_id"),
                }
            try:
                recorder.save(args.record_table, meta)
            except OSError as exc:
                raise TraceFormatError(f"cannot write table {args.record_table}: {exc}") from exc
    return EXIT_OK


def _load_grid(path: Optional[str]) -> dict:
    if path:
        grid = _load_json(path, "grid file")
    else:
        resource = importlib.resources.files("dlmdecode").joinpath("presets/default_grid.json")
        grid = json.loads(resource.read_text(encoding="utf-8"))
    for key in ("kappa", "beta", "gamma"):
        if key not in grid or not isinstance(grid[key], list) or not grid[key]:
            raise ConfigurationError(f"grid must provide a non-empty list for {key!r}")
    return grid


def cmd_sweep(args: argparse.Namespace) -> int:
    settings = _merge_settings(args)
    seeds = _resolve_seeds(settings)
    grid = _load_grid(args.grid)
    rows = ["kappa,beta,gamma,runs,failures,eot_ratio,anchor_mass_ratio,runtime_s"]
    for kappa in grid["kappa"]:
        for beta in grid["beta"]:
            for gamma in grid["gamma"]:
                cell = dict(settings, kappa=kappa, beta=beta, gamma=gamma, modulation=True)
                ratios: list[float] = []
                masses: list[float] = []
                failures = 0
                started = time.perf_counter()
                for seed in seeds:
                    try:
                        config, anchor = _build_run(cell, seed)
                        denoiser, info = build_denoiser(
                            cell["model"],
                            anchor.positions(config.length),
                            eot_id=cell["eot_id"],
                            mask_id=cell["mask_id"],
                            vocab_size=cell["vocab_size"],
                        )
                        result = decode(config, denoiser, info)
                        if info.get("eot_id") is not None:
                            ratios.append(trace_eot_ratio(result.trace))
                        hist = early_decode_histogram(result.trace, args.bins, args.early_fraction)
                        mass = hist.anchor_mass_ratio()
                        if mass is not None:
                            masses.append(mass)
                    except (ConfigurationError, DenoiserError, TraceFormatError) as exc:
                        failures += 1
                        print(f"# failed kappa={kappa} beta={beta} gamma={gamma} seed={seed}: {exc}",
                              file=sys.stderr)
                elapsed = time.perf_counter() - started
                mean_ratio = sum(ratios) / len(ratios) if ratios else ""
                mean_mass = sum(masses) / len(masses) if masses else ""
                rows.append(
                    f"{_csv_num(kappa)},{_csv_num(beta)},{_csv_num(gamma)},{len(seeds)},{failures},"
                    f"{_csv_num(mean_ratio)},{_csv_num(mean_mass)},{_csv_num(elapsed)}"
                )
    _emit(rows, args.out)
    return EXIT_OK


def _csv_num(value) -> str:
    if value == "":
        return ""
    if isinstance(value, float):
        return format(value, ".9g")
    return str(value)


def _read_trace(path: str) -> DecodeTrace:
    try:
        return DecodeTrace.read(path)
    except OSError as exc:
        raise TraceFormatError(f"cannot read trace {path}: {exc}") from exc


def cmd_stats(args: argparse.Namespace) -> int:
    traces = [(_trace_label(p), _read_trace(p)) for p in args.traces]
    if args.compare:
        if len(traces) != 2:
            raise ConfigurationError("--compare requires exactly two traces")
        (label_a, trace_a), (label_b, trace_b) = traces
        comparison = compare_runs(trace_a, trace_b, args.bins, args.early_fraction)
        if args.format == "jsonl":
            record = {
                "trace_a": label_a,
                "trace_b": label_b,
                "eot_ratio_a": comparison.eot_ratio_a,
                "eot_ratio_b": comparison.eot_ratio_b,
                "eot_ratio_delta": comparison.eot_ratio_delta,
                "decided_at_delta": list(comparison.decided_at_delta),
                "histogram_delta": list(comparison.histogram_delta),
            }
            _emit([dumps(record)], args.out)
        else:
            rows = ["bin,histogram_delta"]
            rows += [f"{b},{_csv_num(d)}" for b, d in enumerate(comparison.histogram_delta)]
            rows.append(f"eot_ratio_delta,{_csv_num(comparison.eot_ratio_delta)}")
            _emit(rows, args.out)
        return EXIT_OK
    out_lines: list[str] = []
    csv_rows = ["trace,bin,fraction,anchor_bin,eot_ratio"]
    for label, trace in traces:
        hist = early_decode_histogram(trace, args.bins, args.early_fraction)
        ratio = trace_eot_ratio(trace) if trace.header.get("eot_id") is not None else None
        if args.format == "jsonl":
            record = {
                "trace": label,
                "L": trace.header["L"],
                "steps": len(trace.steps),
                "early_steps": hist.early_steps,
                "bin_count": hist.bin_count,
                "eot_ratio": ratio,
                "anchor_bins": list(hist.anchor_bins),
                "anchor_mass_ratio": hist.anchor_mass_ratio(),
                "histogram": list(hist.fractions),
            }
            out_lines.append(dumps(record))
        else:
            for b, frac in enumerate(hist.fractions):
                csv_rows.append(
                    f"{label},{b},{_csv_num(frac)},{int(b in hist.anchor_bins)},"
                    f"{_csv_num(ratio) if ratio is not None else ''}"
                )
    _emit(out_lines if args.format == "jsonl" else csv_rows, args.out)
    return EXIT_OK


def _trace_label(path: str) -> str:
    return path


def _emit(lines: list[str], out: Optional[str]) -> None:
    text = "\n".join(lines) + "\n"
    if out:
        try:
            with open(out, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            raise TraceFormatError(f"cannot write output {out}: {exc}") from exc
    else:
        sys.stdout.write(text)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "decode":
            return cmd_decode(args)
        if args.command == "sweep":
            return cmd_sweep(args)
        if args.command == "stats":
            return cmd_stats(args)
        raise ConfigurationError(f"unknown command {args.command!r}")
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DenoiserError as exc:
        print(f"denoiser error: {exc}", file=sys.stderr)
        return EXIT_DENOISER
    except (TraceFormatError, OSError) as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
