"""Frozen item-text embeddings for dense-retrieval recommenders.

Reads item metadata, embeds each item's text with a pretrained
sentence-embedding model (or the built-in deterministic hash encoder for
offline use), and writes the binary EMB1 matrix plus its .ids sidecar,
the format the recommender toolkit reads.
"""

from .embed import (
    EmbedderError,
    ItemTextRecord,
    build_item_text,
    embed_items,
)

__version__ = "0.1.0"

__all__ = [
    "EmbedderError",
    "ItemTextRecord",
    "build_item_text",
    "embed_items",
]
