"""Command line entry point: bind an address, pick a backend, serve."""

from __future__ import annotations

import argparse
import sys

from .adapter import ModelLoadError, ModelResponder, load_model
from .protocol import ProtocolError, load_table
from .stub import PredictionServer, TableResponder


def parse_address(address: str) -> tuple[str, int]:
    host, sep, port = address.rpartition(":")
    if not sep or not host:
        raise ValueError(f"address must look like host:port, got {address!r}")
    try:
        return host, int(port)
    except ValueError:
        raise ValueError(f"invalid port in address {address!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dlmserve",
        description="Serve masked-LM predictions as line-delimited JSON over TCP.",
    )
    parser.add_argument("--address", default="127.0.0.1:9000", help="host:port to bind (port 0 picks a free one)")
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--table", help="replay a recorded prediction table file")
    source.add_argument("--model", help="module:attr of a model object exposing .logits")
    parser.add_argument("--top-k-max", type=int, default=64, help="reject requests asking for more pairs than this")
    return parser


def build_server(args: argparse.Namespace) -> PredictionServer:
    host, port = parse_address(args.address)
    if args.table:
        _, entries = load_table(args.table)
        responder = TableResponder(entries, top_k_max=args.top_k_max)
    else:
        responder = ModelResponder(load_model(args.model), top_k_max=args.top_k_max)
    return PredictionServer((host, port), responder)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        server = build_server(args)
    except (OSError, ValueError, ProtocolError, ModelLoadError) as exc:
        print(f"dlmserve: {exc}", file=sys.stderr)
        return 1
    host, port = server.server_address[:2]
    print(f"dlmserve: listening on {host}:{port}", file=sys.stderr)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
