"""CLI entry point: run the sidecar under uvicorn."""

from __future__ import annotations

import argparse

import uvicorn

from .app import create_app
from .config import SidecarConfig


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hmrag-sidecar", description=__doc__)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8089)
    parser.add_argument("--embed-text-model", default="hash")
    parser.add_argument("--embed-image-model", default="hash")
    parser.add_argument("--summarize-model", default="hash")
    parser.add_argument("--classify-model", default="hash")
    parser.add_argument("--max-batch", type=int, default=64)
    parser.add_argument("--token", default=None, help="require this bearer token")
    parser.add_argument("--seed", type=int, default=0)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    config = SidecarConfig(
        embed_text_model=args.embed_text_model,
        embed_image_model=args.embed_image_model,
        summarize_model=args.summarize_model,
        classify_model=args.classify_model,
        host=args.host,
        port=args.port,
        max_batch=args.max_batch,
        token=args.token,
        seed=args.seed,
    )
    uvicorn.run(create_app(config), host=config.host, port=config.port, log_level="warning")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
