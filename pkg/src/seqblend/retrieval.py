"""Full-catalog cosine scoring, ranks, top-K, and concatenated retrieval.

Ties are always broken by ascending item index, in both ``rank_of`` and
``top_k``, so every downstream metric is reproducible.  Exact brute-force
scoring is the only engine here; the concatenated matrices can be exported
in the EMB1 format if an external ANN index is wanted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError

NORM_EPS = 1e-12


def l2_normalize(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Rows scaled to unit norm, with an epsilon guard for zero vectors."""
    norms = np.linalg.norm(x, axis=axis, keepdims=True)
    return x / (norms + NORM_EPS)


@dataclass(frozen=True)
class ScoreVector:
    """Cosine scores of one user against the whole catalog."""

    user_id: str
    scores: np.ndarray                    # (n_items,)

    def __len__(self) -> int:
        return len(self.scores)


@dataclass(frozen=True)
class RankTable:
    """Per-user rank of the target item under some model, on one split."""

    split_kind: str
    user_ids: tuple[str, ...]
    targets: np.ndarray                   # (n_users,) item indices
    ranks: np.ndarray                     # (n_users,) ranks >= 1

    def __len__(self) -> int:
        return len(self.ranks)


def score_catalog(user_emb: np.ndarray, item_matrix: np.ndarray,
                  user_id: str = "") -> ScoreVector:
    """scores[i] = cosine(user_emb, item_matrix[i])."""
    user_emb = np.asarray(user_emb)
    item_matrix = np.asarray(item_matrix)
    if user_emb.ndim != 1 or item_matrix.ndim != 2:
        raise ContractError("expected a 1-D user vector and 2-D item matrix")
    if user_emb.shape[0] != item_matrix.shape[1]:
        raise ContractError(
            f"dimension mismatch: user {user_emb.shape[0]} vs items {item_matrix.shape[1]}"
        )
    if not (np.isfinite(user_emb).all() and np.isfinite(item_matrix).all()):
        raise ContractError("non-finite input to score_catalog")
    scores = l2_normalize(item_matrix) @ l2_normalize(user_emb)
    return ScoreVector(user_id=user_id, scores=scores)


def score_catalog_batch(user_embs: np.ndarray, item_matrix: np.ndarray) -> np.ndarray:
    """Cosine scores for a batch of users: (n_users, n_items)."""
    if user_embs.shape[1] != item_matrix.shape[1]:
        raise ContractError(
            f"dimension mismatch: users {user_embs.shape[1]} vs items {item_matrix.shape[1]}"
        )
    return l2_normalize(user_embs) @ l2_normalize(item_matrix).T


def rank_of(scores: ScoreVector | np.ndarray, target: int) -> int:
    """1-based rank of the target score, descending, ties by item index."""
    s = scores.scores if isinstance(scores, ScoreVector) else np.asarray(scores)
    if not 0 <= target < len(s):
        raise ContractError(f"target {target} outside catalog of {len(s)}")
    st = s[target]
    higher = int(np.count_nonzero(s > st))
    tied_before = int(np.count_nonzero((s[:target] == st)))
    return 1 + higher + tied_before


def ranks_of_targets(score_matrix: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Vectorized rank_of for a (n_users, n_items) score matrix."""
    targets = np.asarray(targets)
    st = score_matrix[np.arange(len(targets)), targets]
    higher = (score_matrix > st[:, None]).sum(axis=1)
    cols = np.arange(score_matrix.shape[1])
    tied_before = (
        (score_matrix == st[:, None]) & (cols[None, :] < targets[:, None])
    ).sum(axis=1)
    return (1 + higher + tied_before).astype(np.int64)


def top_k(scores: ScoreVector | np.ndarray, k: int) -> np.ndarray:
    """Indices of the k best-ranked items, in rank order."""
    s = scores.scores if isinstance(scores, ScoreVector) else np.asarray(scores)
    n = len(s)
    if not 1 <= k <= n:
        raise ContractError(f"k must be in [1, {n}], got {k}")
    # lexsort: primary key descending score, secondary ascending index
    order = np.lexsort((np.arange(n), -s))
    return order[:k]


def rank_table_from_scores(
    score_matrix: np.ndarray,
    targets: np.ndarray,
    user_ids: tuple[str, ...],
    split_kind: str,
) -> RankTable:
    ranks = ranks_of_targets(score_matrix, targets)
    return RankTable(
        split_kind=split_kind,
        user_ids=tuple(user_ids),
        targets=np.asarray(targets, dtype=np.int64),
        ranks=ranks,
    )


def concat_ensemble_embeddings(
    users_id: np.ndarray,
    users_text: np.ndarray,
    items_id: np.ndarray,
    items_text: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Part-normalize and concatenate user and item embeddings.

    With both parts unit-normalized, cosine over the concatenation equals
    (s_id + s_text) / 2, so ranking the concatenated vectors reproduces
    ranking by the score sum without re-normalization.
    """
    users_id = np.atleast_2d(np.asarray(users_id))
    users_text = np.atleast_2d(np.asarray(users_text))
    items_id = np.atleast_2d(np.asarray(items_id))
    items_text = np.atleast_2d(np.asarray(items_text))
    if users_id.shape[0] != users_text.shape[0]:
        raise ContractError("user part counts differ")
    if items_id.shape[0] != items_text.shape[0]:
        raise ContractError("item part counts differ")
    if users_id.shape[1] != items_id.shape[1] or users_text.shape[1] != items_text.shape[1]:
        raise ContractError("user/item part dimensions differ")
    for arr in (users_id, users_text, items_id, items_text):
        if not np.isfinite(arr).all():
            raise ContractError("non-finite input to concat_ensemble_embeddings")
    users = np.concatenate([l2_normalize(users_id), l2_normalize(users_text)], axis=1)
    items = np.concatenate([l2_normalize(items_id), l2_normalize(items_text)], axis=1)
    return users, items


# ---------------------------------------------------------------------------
# Scoring trained models over splits
# ---------------------------------------------------------------------------

def score_split(model, split, chunk_size: int = 1024) -> np.ndarray:
    """Full (n_pairs, n_items) cosine score matrix of a model on a split."""
    items, _ = model.catalog_embeddings()
    items_hat = l2_normalize(items)
    out = np.empty((len(split), items.shape[0]), dtype=items.dtype)
    for start in range(0, len(split), chunk_size):
        chunk = split.prefixes[start: start + chunk_size]
        users = model.user_embeddings(chunk)
        out[start: start + len(chunk)] = l2_normalize(users) @ items_hat.T
    return out


def rank_table_for_model(
    model, split, user_ids: tuple[str, ...], split_kind: str | None = None,
    chunk_size: int = 1024,
) -> RankTable:
    """Target ranks of a model on a split, computed in user chunks."""
    items, _ = model.catalog_embeddings()
    items_hat = l2_normalize(items)
    targets = np.asarray(split.targets, dtype=np.int64)
    ranks = np.empty(len(split), dtype=np.int64)
    for start in range(0, len(split), chunk_size):
        chunk = split.prefixes[start: start + chunk_size]
        users = model.user_embeddings(chunk)
        scores = l2_normalize(users) @ items_hat.T
        ranks[start: start + len(chunk)] = ranks_of_targets(
            scores, targets[start: start + len(chunk)]
        )
    pair_user_ids = tuple(user_ids[u] for u in split.user_indices)
    return RankTable(
        split_kind=split_kind or split.split_kind,
        user_ids=pair_user_ids,
        targets=targets,
        ranks=ranks,
    )


# ---------------------------------------------------------------------------
# Score dump (binary records for out-of-process metric computation)
# ---------------------------------------------------------------------------

def write_score_dump(
    path,
    user_ids: tuple[str, ...],
    targets: np.ndarray,
    ranks: np.ndarray,
    topk_indices: np.ndarray,
    topk_scores: np.ndarray,
) -> None:
    """Per-user records: user_id, target index, target rank, top-K ids+scores."""
    import struct

    k = topk_indices.shape[1]
    with open(path, "wb") as fh:
        fh.write(b"SCD1")
        fh.write(struct.pack("<II", len(user_ids), k))
        for i, uid in enumerate(user_ids):
            raw = uid.encode("utf-8")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<qq", int(targets[i]), int(ranks[i])))
            fh.write(np.asarray(topk_indices[i], dtype="<i8").tobytes())
            fh.write(np.asarray(topk_scores[i], dtype="<f4").tobytes())


def read_score_dump(path):
    import struct

    from .errors import FormatError

    with open(path, "rb") as fh:
        if fh.read(4) != b"SCD1":
            raise FormatError("bad score-dump magic")
        n, k = struct.unpack("<II", fh.read(8))
        user_ids, targets, ranks = [], [], []
        topk_indices = np.empty((n, k), dtype=np.int64)
        topk_scores = np.empty((n, k), dtype=np.float32)
        for i in range(n):
            (ulen,) = struct.unpack("<H", fh.read(2))
            user_ids.append(fh.read(ulen).decode("utf-8"))
            t, r = struct.unpack("<qq", fh.read(16))
            targets.append(t)
            ranks.append(r)
            topk_indices[i] = np.frombuffer(fh.read(8 * k), dtype="<i8")
            topk_scores[i] = np.frombuffer(fh.read(4 * k), dtype="<f4")
    return (
        tuple(user_ids),
        np.asarray(targets, dtype=np.int64),
        np.asarray(ranks, dtype=np.int64),
        topk_indices,
        topk_scores,
    )
