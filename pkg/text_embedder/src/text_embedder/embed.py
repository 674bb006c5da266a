"""Batch text embedding with pluggable encoders and EMB1 output.

Two encoder families resolve from the model name:

* ``hash:<dim>``  - a deterministic character-n-gram hashing encoder.
  No network, no model weights, byte-identical across runs and machines;
  purely lexical, meant for smoke tests and air-gapped pipelines.
* anything else   - a sentence-transformers model name (the intended
  production path, e.g. ``sentence-transformers/sentence-t5-xxl`` or
  ``princeton-nlp/sup-simcse-bert-base-uncased``).

Items with empty text are embedded from the placeholder "unknown item"
and listed in a warnings file next to the output.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

EMPTY_TEXT_PLACEHOLDER = "unknown item"
METADATA_FIELDS = ("title", "brand", "categories", "description")
FIELD_SEPARATOR = " ; "

_EMB_MAGIC = b"EMB1"


class EmbedderError(Exception):
    """Input, model-resolution, or capacity failure."""


@dataclass(frozen=True)
class ItemTextRecord:
    item_id: str
    text: str

    def __post_init__(self):
        if not self.item_id:
            raise EmbedderError("item_id must be non-empty")


def build_item_text(metadata: dict) -> str:
    """Join the available metadata fields in fixed order with ' ; '."""
    parts = []
    for field in METADATA_FIELDS:
        value = metadata.get(field)
        if value is None:
            continue
        if isinstance(value, (list, tuple)):
            value = ", ".join(str(v) for v in value)
        value = str(value).strip()
        if value:
            parts.append(value)
    return FIELD_SEPARATOR.join(parts)


def load_item_records(path) -> list[ItemTextRecord]:
    """Read a JSONL items file: one object per line with item_id + metadata."""
    records = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise EmbedderError(f"line {lineno}: invalid JSON: {exc.msg}") from None
            if "item_id" not in obj or not str(obj["item_id"]):
                raise EmbedderError(f"line {lineno}: missing item_id")
            text = obj.get("text")
            if text is None:
                text = build_item_text(obj)
            records.append(ItemTextRecord(item_id=str(obj["item_id"]), text=str(text)))
    return records


# ---------------------------------------------------------------------------
# Encoders
# ---------------------------------------------------------------------------

class HashingEncoder:
    """Character-n-gram hashing into a fixed number of buckets, unit norm.

    Stable across processes and platforms (blake2b, not Python's salted
    hash).  Lexically similar strings land on overlapping buckets, which
    is all the smoke tests need.
    """

    def __init__(self, dim: int, ngram_range=(3, 5)):
        if dim < 1:
            raise EmbedderError(f"hash encoder dim must be positive, got {dim}")
        self.dim = dim
        self.ngram_range = ngram_range

    def _bucket(self, ngram: str) -> tuple[int, float]:
        digest = hashlib.blake2b(ngram.encode("utf-8"), digest_size=8).digest()
        value = int.from_bytes(digest, "little")
        sign = 1.0 if value & 1 else -1.0
        return (value >> 1) % self.dim, sign

    def encode(self, texts: list[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float64)
        lo, hi = self.ngram_range
        for row, text in enumerate(texts):
            padded = f" {text.lower()} "
            for n in range(lo, hi + 1):
                for start in range(max(0, len(padded) - n + 1)):
                    bucket, sign = self._bucket(padded[start: start + n])
                    out[row, bucket] += sign
            norm = np.linalg.norm(out[row])
            if norm > 0:
                out[row] /= norm
        return out.astype(np.float32)


class SentenceTransformerEncoder:
    def __init__(self, model_name: str):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError:
            raise EmbedderError(
                "sentence-transformers is not installed; use a hash:<dim> "
                "model or install the 'st' extra"
            ) from None
        try:
            self.model = SentenceTransformer(model_name)
        except Exception as exc:
            raise EmbedderError(f"could not load model {model_name!r}: {exc}") from exc

    def encode(self, texts: list[str]) -> np.ndarray:
        vecs = self.model.encode(
            texts, batch_size=len(texts), convert_to_numpy=True,
            show_progress_bar=False, normalize_embeddings=False,
        )
        return np.asarray(vecs, dtype=np.float32)


def resolve_encoder(model_name: str):
    if model_name.startswith("hash:"):
        try:
            dim = int(model_name.split(":", 1)[1])
        except ValueError:
            raise EmbedderError(f"bad hash encoder spec {model_name!r}") from None
        return HashingEncoder(dim)
    return SentenceTransformerEncoder(model_name)


# ---------------------------------------------------------------------------
# EMB1 output (little-endian: magic, u32 rows, u32 dim, float32 payload)
# ---------------------------------------------------------------------------

def write_emb1(item_ids: list[str], rows: np.ndarray, path) -> None:
    rows = np.ascontiguousarray(rows, dtype="<f4")
    if rows.ndim != 2 or rows.shape[0] != len(item_ids):
        raise EmbedderError("one embedding row per item id required")
    with open(path, "wb") as fh:
        fh.write(_EMB_MAGIC)
        fh.write(struct.pack("<II", rows.shape[0], rows.shape[1]))
        fh.write(rows.tobytes())
    with open(str(path) + ".ids", "w") as fh:
        for item_id in item_ids:
            fh.write(item_id + "\n")


# ---------------------------------------------------------------------------
# Main entry
# ---------------------------------------------------------------------------

def embed_items(
    records: list[ItemTextRecord],
    model_name: str,
    batch_size: int,
    output_path,
) -> dict:
    """Embed every record's text, in input order, and write EMB1 + sidecars.

    Returns a small summary dict (counts, dim, warnings path).  Items with
    empty text are embedded from a fixed placeholder string and noted in
    ``<output>.warnings.jsonl``.
    """
    if not records:
        raise EmbedderError("no item records to embed")
    if batch_size < 1:
        raise EmbedderError("batch_size must be >= 1")
    seen = set()
    for rec in records:
        if rec.item_id in seen:
            raise EmbedderError(f"duplicate item_id {rec.item_id!r}")
        seen.add(rec.item_id)

    encoder = resolve_encoder(model_name)
    warnings = []
    texts = []
    for rec in records:
        if rec.text.strip():
            texts.append(rec.text)
        else:
            warnings.append({"item_id": rec.item_id, "reason": "empty_text",
                             "used_text": EMPTY_TEXT_PLACEHOLDER})
            texts.append(EMPTY_TEXT_PLACEHOLDER)

    chunks = []
    for start in range(0, len(texts), batch_size):
        batch = texts[start: start + batch_size]
        try:
            chunks.append(encoder.encode(batch))
        except MemoryError:
            raise EmbedderError(
                f"out of memory embedding a batch of {len(batch)}; "
                "try a smaller --batch-size"
            ) from None
    rows = np.vstack(chunks)

    output_path = Path(output_path)
    write_emb1([r.item_id for r in records], rows, output_path)
    warnings_path = Path(str(output_path) + ".warnings.jsonl")
    with open(warnings_path, "w") as fh:
        for entry in warnings:
            fh.write(json.dumps(entry) + "\n")
    return {
        "n_items": len(records),
        "dim": int(rows.shape[1]),
        "model": model_name,
        "n_warnings": len(warnings),
        "output": str(output_path),
        "warnings_file": str(warnings_path),
    }
