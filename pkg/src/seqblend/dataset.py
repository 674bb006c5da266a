"""Interaction logs, core filtering, leave-one-out splits, and embedding files.

The processing convention is fixed: 5-core user/item filtering, sequences
ordered by ascending timestamp with input-file order breaking ties, and
dense item indices assigned by first appearance after filtering so that
repeated runs produce identical datasets.
"""

from __future__ import annotations

import csv
import json
import struct
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import ContractError, DataError, FormatError, ParseError, SchemaError

DEFAULT_CORE_K = 5
DEFAULT_MAX_SEQ_LEN = 20

_FIELDS = ("user_id", "item_id", "timestamp")
_EMB_MAGIC = b"EMB1"


@dataclass(frozen=True)
class Interaction:
    """One (user, item, timestamp) event. Timestamps only need to sort."""

    user_id: str
    item_id: str
    timestamp: int

    def __post_init__(self):
        if not self.user_id or not self.item_id:
            raise ContractError("user_id and item_id must be non-empty")


@dataclass(frozen=True)
class InteractionDataset:
    """Per-user time-ordered item-index sequences over a dense item catalog."""

    users: tuple[str, ...]            # user ids, dense user index = position
    items: tuple[str, ...]            # item ids, dense item index = position
    sequences: tuple[tuple[int, ...], ...]  # item indices, aligned with users

    @property
    def n_users(self) -> int:
        return len(self.users)

    @property
    def n_items(self) -> int:
        return len(self.items)

    @property
    def n_interactions(self) -> int:
        return sum(len(s) for s in self.sequences)


@dataclass(frozen=True)
class SplitView:
    """One evaluation split: per-pair (user index, input prefix, target item).

    Train holds every (prefix, next-item) pair up to the second-to-last
    target; validation and test hold exactly one pair per user.  Prefixes
    are already truncated to the most recent ``max_seq_len`` items.
    """

    split_kind: str                       # train | validation | test
    user_indices: tuple[int, ...]
    prefixes: tuple[tuple[int, ...], ...]
    targets: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.targets)


@dataclass
class EmbeddingMatrix:
    """Dense float32 item-embedding table with an item-id -> row index."""

    item_ids: tuple[str, ...]
    rows: np.ndarray                      # (n_items, dim) float32
    index: dict[str, int] = field(init=False)

    def __post_init__(self):
        self.rows = np.ascontiguousarray(self.rows, dtype=np.float32)
        if self.rows.ndim != 2:
            raise ContractError("embedding rows must be a 2-D matrix")
        if len(self.item_ids) != self.rows.shape[0]:
            raise ContractError(
                f"{len(self.item_ids)} item ids for {self.rows.shape[0]} rows"
            )
        if not np.isfinite(self.rows).all():
            raise ContractError("embedding matrix contains non-finite entries")
        self.index = {iid: i for i, iid in enumerate(self.item_ids)}
        if len(self.index) != len(self.item_ids):
            raise ContractError("duplicate item_id in embedding matrix")

    @property
    def dim(self) -> int:
        return self.rows.shape[1]

    @property
    def n_items(self) -> int:
        return self.rows.shape[0]

    def row_for(self, item_id: str) -> np.ndarray:
        return self.rows[self.index[item_id]]


# ---------------------------------------------------------------------------
# Interaction files
# ---------------------------------------------------------------------------

def load_interactions(path: str | Path, fmt: str | None = None) -> list[Interaction]:
    """Read an interaction file (tsv, csv, or jsonl) in file order.

    A leading header naming the ``user_id,item_id,timestamp`` columns is
    honored when present; otherwise columns are taken in that order.  No
    filtering happens here.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such interaction file: {path}")
    if fmt is None:
        fmt = {".tsv": "tsv", ".csv": "csv", ".jsonl": "jsonl"}.get(
            path.suffix.lower(), "tsv"
        )
    if fmt not in ("tsv", "csv", "jsonl"):
        raise ContractError(f"unknown interaction format: {fmt!r}")

    if fmt == "jsonl":
        return _load_jsonl(path)
    return _load_delimited(path, delimiter="\t" if fmt == "tsv" else ",")


def _parse_row(cols: list[str], lineno: int) -> Interaction:
    if len(cols) != 3:
        raise ParseError(f"expected 3 columns, got {len(cols)}", line=lineno)
    user, item, ts = (c.strip() for c in cols)
    if not user or not item:
        raise ParseError("empty user_id or item_id", line=lineno)
    try:
        ts_int = int(ts)
    except ValueError:
        raise ParseError(f"timestamp {ts!r} is not an integer", line=lineno) from None
    return Interaction(user, item, ts_int)


def _load_delimited(path: Path, delimiter: str) -> list[Interaction]:
    out: list[Interaction] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        for lineno, cols in enumerate(reader, start=1):
            if not cols or (len(cols) == 1 and not cols[0].strip()):
                continue
            if lineno == 1 and [c.strip().lower() for c in cols] == list(_FIELDS):
                continue  # header row
            out.append(_parse_row(cols, lineno))
    return out


def _load_jsonl(path: Path) -> list[Interaction]:
    out: list[Interaction] = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", line=lineno) from None
            missing = [f for f in _FIELDS if f not in rec]
            if missing:
                raise SchemaError(
                    f"line {lineno}: record missing field(s) {', '.join(missing)}"
                )
            try:
                ts_int = int(rec["timestamp"])
            except (TypeError, ValueError):
                raise ParseError(
                    f"timestamp {rec['timestamp']!r} is not an integer", line=lineno
                ) from None
            out.append(Interaction(str(rec["user_id"]), str(rec["item_id"]), ts_int))
    return out


def write_interactions(path: str | Path, interactions: Iterable[Interaction]) -> None:
    """Write a TSV interaction file with header, in the given order."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
        writer.writerow(_FIELDS)
        for it in interactions:
            writer.writerow((it.user_id, it.item_id, it.timestamp))


# ---------------------------------------------------------------------------
# Core filtering and grouping
# ---------------------------------------------------------------------------

def core_filter(interactions: list[Interaction], k: int = DEFAULT_CORE_K) -> InteractionDataset:
    """Iteratively drop users and items with fewer than ``k`` interactions.

    Runs to a fixpoint, then groups the survivors into per-user sequences
    sorted by timestamp (ties keep input-file order).  Duplicate records
    are kept; counts are over interaction records, not distinct partners.
    """
    if k < 1:
        raise ContractError(f"k must be >= 1, got {k}")

    # (user, item) records in input order; position is the tie-break key.
    records = [(it.user_id, it.item_id, it.timestamp, pos)
               for pos, it in enumerate(interactions)]
    while True:
        before = len(records)
        user_counts = Counter(u for u, _, _, _ in records)
        records = [r for r in records if user_counts[r[0]] >= k]
        item_counts = Counter(i for _, i, _, _ in records)
        records = [r for r in records if item_counts[r[1]] >= k]
        if len(records) == before:
            break

    if not records:
        raise DataError(f"dataset is empty after {k}-core filtering")

    item_index: dict[str, int] = {}
    user_index: dict[str, int] = {}
    for u, i, _, _ in records:       # records retain input order here
        if i not in item_index:
            item_index[i] = len(item_index)
        if u not in user_index:
            user_index[u] = len(user_index)

    per_user: list[list[tuple[int, int, int]]] = [[] for _ in user_index]
    for u, i, ts, pos in records:
        per_user[user_index[u]].append((ts, pos, item_index[i]))

    sequences = tuple(
        tuple(item for _, _, item in sorted(events)) for events in per_user
    )
    users = tuple(sorted(user_index, key=user_index.__getitem__))
    items = tuple(sorted(item_index, key=item_index.__getitem__))
    return InteractionDataset(users=users, items=items, sequences=sequences)


def leave_one_out_split(
    dataset: InteractionDataset, max_seq_len: int = DEFAULT_MAX_SEQ_LEN
) -> tuple[SplitView, SplitView, SplitView]:
    """Split each user sequence into train pairs, one validation, one test.

    For a sequence (i_1 .. i_n): test targets i_n, validation targets
    i_{n-1}, and train pairs are (i_1..i_k -> i_{k+1}) for k in 1..n-3.
    Prefixes keep only the most recent ``max_seq_len`` items.
    """
    if max_seq_len < 1:
        raise ContractError(f"max_seq_len must be >= 1, got {max_seq_len}")

    tr_u: list[int] = []
    tr_p: list[tuple[int, ...]] = []
    tr_t: list[int] = []
    va_u: list[int] = []
    va_p: list[tuple[int, ...]] = []
    va_t: list[int] = []
    te_u: list[int] = []
    te_p: list[tuple[int, ...]] = []
    te_t: list[int] = []

    for u, seq in enumerate(dataset.sequences):
        n = len(seq)
        if n < 2:
            continue
        te_u.append(u)
        te_p.append(tuple(seq[max(0, n - 1 - max_seq_len): n - 1]))
        te_t.append(seq[n - 1])
        if n < 3:
            continue
        va_u.append(u)
        va_p.append(tuple(seq[max(0, n - 2 - max_seq_len): n - 2]))
        va_t.append(seq[n - 2])
        for k in range(1, n - 2):
            tr_u.append(u)
            tr_p.append(tuple(seq[max(0, k - max_seq_len): k]))
            tr_t.append(seq[k])

    mk = lambda kind, u, p, t: SplitView(kind, tuple(u), tuple(p), tuple(t))
    return (
        mk("train", tr_u, tr_p, tr_t),
        mk("validation", va_u, va_p, va_t),
        mk("test", te_u, te_p, te_t),
    )


def last_train_pairs(train_split: SplitView) -> SplitView:
    """One pair per user: the training pair with the longest prefix.

    Used when a per-user score is wanted on the train split (e.g. for
    ensemble parameter selection) at the same cost as validation/test.
    """
    best: dict[int, int] = {}
    for i, u in enumerate(train_split.user_indices):
        if u not in best or len(train_split.prefixes[i]) > len(train_split.prefixes[best[u]]):
            best[u] = i
    picked = [best[u] for u in sorted(best)]
    return SplitView(
        split_kind="train",
        user_indices=tuple(train_split.user_indices[i] for i in picked),
        prefixes=tuple(train_split.prefixes[i] for i in picked),
        targets=tuple(train_split.targets[i] for i in picked),
    )


# ---------------------------------------------------------------------------
# Embedding files (binary EMB1 + .ids sidecar)
# ---------------------------------------------------------------------------

def write_embedding_matrix(matrix: EmbeddingMatrix, path: str | Path) -> None:
    """Write magic 'EMB1', u32 count, u32 dim, float32 rows (little-endian),
    plus a ``<path>.ids`` sidecar with one item_id per line."""
    path = Path(path)
    rows = np.ascontiguousarray(matrix.rows, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(_EMB_MAGIC)
        fh.write(struct.pack("<II", matrix.n_items, matrix.dim))
        fh.write(rows.tobytes())
    with open(str(path) + ".ids", "w") as fh:
        for iid in matrix.item_ids:
            fh.write(iid + "\n")


def read_embedding_matrix(path: str | Path) -> EmbeddingMatrix:
    path = Path(path)
    ids_path = Path(str(path) + ".ids")
    if not path.exists():
        raise DataError(f"no such embedding file: {path}")
    if not ids_path.exists():
        raise DataError(f"missing ids sidecar: {ids_path}")

    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _EMB_MAGIC:
            raise FormatError(f"bad magic {magic!r}, expected {_EMB_MAGIC!r}")
        header = fh.read(8)
        if len(header) != 8:
            raise FormatError("truncated embedding header")
        count, dim = struct.unpack("<II", header)
        payload = fh.read()
    expected = count * dim * 4
    if len(payload) != expected:
        raise FormatError(
            f"truncated embedding payload: expected {expected} bytes, got {len(payload)}"
        )
    rows = np.frombuffer(payload, dtype="<f4").reshape(count, dim)

    with open(ids_path) as fh:
        item_ids = tuple(line.rstrip("\n") for line in fh if line.rstrip("\n"))
    if len(item_ids) != count:
        raise FormatError(
            f"ids sidecar lists {len(item_ids)} items but header says {count} rows"
        )
    return EmbeddingMatrix(item_ids=item_ids, rows=rows.copy())


# ---------------------------------------------------------------------------
# Manifest
# ---------------------------------------------------------------------------

def dataset_manifest(
    dataset: InteractionDataset,
    splits: tuple[SplitView, SplitView, SplitView] | None = None,
    extra: dict | None = None,
) -> dict:
    manifest = {
        "n_users": dataset.n_users,
        "n_items": dataset.n_items,
        "n_interactions": dataset.n_interactions,
    }
    if splits is not None:
        manifest["split_sizes"] = {s.split_kind: len(s) for s in splits}
    if extra:
        manifest.update(extra)
    return manifest


def write_manifest(manifest: dict, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def save_dataset(dataset: InteractionDataset, path: str | Path) -> None:
    """Persist a processed dataset as JSON (users, items, sequences)."""
    payload = {
        "users": list(dataset.users),
        "items": list(dataset.items),
        "sequences": [list(s) for s in dataset.sequences],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, separators=(",", ":"))
        fh.write("\n")


def load_dataset(path: str | Path) -> InteractionDataset:
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such dataset file: {path}")
    with open(path) as fh:
        payload = json.load(fh)
    try:
        return InteractionDataset(
            users=tuple(payload["users"]),
            items=tuple(payload["items"]),
            sequences=tuple(tuple(s) for s in payload["sequences"]),
        )
    except KeyError as exc:
        raise SchemaError(f"dataset file missing key {exc}") from None
