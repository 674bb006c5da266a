"""Command-line wrapper: items JSONL in, EMB1 matrix + sidecars out."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .embed import EmbedderError, embed_items, load_item_records

DEFAULT_MODEL = "sentence-transformers/sentence-t5-xxl"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="text-embedder",
        description="Embed item metadata text with a pretrained sentence "
                    "encoder and write an EMB1 embedding matrix.",
    )
    parser.add_argument("items", help="items file (JSONL: item_id + metadata "
                                      "fields title/brand/categories/description, "
                                      "or a prebuilt 'text' field)")
    parser.add_argument("output", help="output EMB1 path (.ids and "
                                       ".warnings.jsonl are written next to it)")
    parser.add_argument("--model", default=DEFAULT_MODEL,
                        help="sentence-transformers model name, or hash:<dim> "
                             "for the offline deterministic encoder "
                             f"(default: {DEFAULT_MODEL})")
    parser.add_argument("--batch-size", type=int, default=32)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if not Path(args.items).exists():
        print(f"error: no such items file: {args.items}", file=sys.stderr)
        return 2
    try:
        records = load_item_records(args.items)
        summary = embed_items(records, args.model, args.batch_size, args.output)
    except EmbedderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    print(json.dumps(summary))
    return 0


if __name__ == "__main__":
    sys.exit(main())
