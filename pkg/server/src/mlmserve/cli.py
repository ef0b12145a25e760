"""Command line: serve a masked LM over the /v1 protocol."""

from __future__ import annotations

import argparse

import uvicorn

from .server import ServedModel, create_app


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mlm-server", description=__doc__)
    parser.add_argument("--model", default="bert-base-uncased",
                        help="model id or local path (default bert-base-uncased)")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8000)
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--write-vocab", default=None, metavar="PATH",
                        help="dump the vocabulary file for clients and exit")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        served = ServedModel(args.model, device=args.device)
    except Exception as exc:  # unknown model id, missing files, bad device
        print(f"startup failure: {exc}")
        return 1
    if args.write_vocab:
        served.write_vocab(args.write_vocab)
        print(f"wrote vocabulary ({served.vocab_size} tokens) to {args.write_vocab}")
        return 0
    uvicorn.run(create_app(served), host=args.host, port=args.port, log_level="warning")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
