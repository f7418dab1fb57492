"""Command-line frontend: ``ppembed export`` writes one store file.

All output goes to the file named by ``--out``; stdout carries a short
summary only, and errors name the failing resource precisely.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .export import (DEFAULT_MODEL_ID, POOLING_MODES, SidecarConfig,
                     SidecarError, export_embeddings)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ppembed",
        description="Precompute node-text embeddings for a policy XML corpus.",
    )
    commands = parser.add_subparsers(dest="command", required=True)
    export = commands.add_parser(
        "export", help="embed every title/paragraph node into a store file"
    )
    export.add_argument("--corpus", required=True,
                        help="directory of .ppxml documents")
    export.add_argument("--out", required=True,
                        help="embedding store file to write")
    export.add_argument("--model", default=DEFAULT_MODEL_ID,
                        help="encoder model id or local directory")
    export.add_argument("--pool", choices=POOLING_MODES, default="mean",
                        help="token pooling strategy")
    export.add_argument("--max-length", type=int, default=512,
                        help="tokenizer truncation bound")
    export.add_argument("--batch-size", type=int, default=16)
    return parser


def cmd_export(args) -> int:
    cfg = SidecarConfig(model_id=args.model, pooling=args.pool,
                        max_length=args.max_length,
                        batch_size=args.batch_size)
    count = export_embeddings(args.corpus, args.out, cfg)
    with open(args.out, encoding="utf-8") as handle:
        dimension = handle.readline().strip().removeprefix("#dim=")
    print(f"export: {count} records (dim {dimension}) -> {Path(args.out)}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return cmd_export(args)
    except SidecarError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
