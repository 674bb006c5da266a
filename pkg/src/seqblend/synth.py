"""Seeded synthetic interaction data with controllable signal mix.

Items carry latent semantic vectors (cluster centroid plus jitter, unit
norm).  A random sparse item-transition graph, drawn independently of the
semantic vectors, defines collaborative dynamics.  Each user follows one
mechanism: semantic users pick the next item by softmax over semantic
cosine to the current item, collaborative users walk the hidden graph,
and any step is uniform-random with probability ``noise``.  Text
embeddings are the semantic vectors plus Gaussian noise, renormalized.

The two mechanisms are disjoint by construction, so an ID-based and a
text-based model trained on this data pick up separable signals.  The
per-user behavior label is emitted as provenance for diagnostics only;
nothing may read it during training.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .dataset import EmbeddingMatrix, Interaction, InteractionDataset
from .errors import ConfigError

SEMANTIC_SOFTMAX_TEMPERATURE = 0.2
CLUSTER_JITTER_NORM = 0.1  # expected jitter vector norm, independent of d_sem

LABEL_SEMANTIC = "semantic"
LABEL_COLLABORATIVE = "collaborative"


@dataclass(frozen=True)
class SynthConfig:
    n_users: int = 2000
    n_items: int = 500
    d_sem: int = 32
    n_clusters: int = 50
    seq_len_range: tuple[int, int] = (6, 16)
    p_semantic_user: float = 0.5
    collab_graph_degree: int = 4
    noise: float = 0.1
    text_noise_sigma: float = 0.05
    seed: int = 1234

    def __post_init__(self):
        if self.n_users < 1 or self.n_items < 2:
            raise ConfigError("need at least 1 user and 2 items")
        if self.n_clusters < 1 or self.n_clusters > self.n_items:
            raise ConfigError("n_clusters must be in [1, n_items]")
        lo, hi = self.seq_len_range
        if lo < 2 or lo > hi:
            raise ConfigError(f"bad seq_len_range {self.seq_len_range}")
        if not 0.0 <= self.p_semantic_user <= 1.0:
            raise ConfigError("p_semantic_user must be in [0, 1]")
        if not 0.0 <= self.noise <= 1.0:
            raise ConfigError("noise must be in [0, 1]")
        if self.text_noise_sigma < 0.0:
            raise ConfigError("text_noise_sigma must be non-negative")
        if not 1 <= self.collab_graph_degree < self.n_items:
            raise ConfigError("collab_graph_degree must be in [1, n_items)")
        if self.d_sem < 1:
            raise ConfigError("d_sem must be positive")


def _unit_rows(x: np.ndarray) -> np.ndarray:
    return x / (np.linalg.norm(x, axis=1, keepdims=True) + 1e-12)


def generate(
    config: SynthConfig,
) -> tuple[InteractionDataset, EmbeddingMatrix, dict[str, str]]:
    """Build (dataset, text embeddings, per-user behavior labels) from a seed.

    Self-transitions are excluded from both mechanisms.  All randomness
    comes from one generator in a fixed draw order, so the output is
    fully determined by ``config.seed``.
    """
    rng = np.random.default_rng(config.seed)
    n_items, n_users = config.n_items, config.n_users

    # latent semantics: balanced cluster assignment, jittered unit vectors
    centroids = _unit_rows(rng.normal(size=(config.n_clusters, config.d_sem)))
    cluster_of = np.arange(n_items) % config.n_clusters
    jitter_sigma = CLUSTER_JITTER_NORM / np.sqrt(config.d_sem)
    sem = _unit_rows(
        centroids[cluster_of] + rng.normal(0.0, jitter_sigma, (n_items, config.d_sem))
    )

    # hidden collaborative graph: fixed out-degree, no self-loops
    neighbors = np.empty((n_items, config.collab_graph_degree), dtype=np.int64)
    for i in range(n_items):
        drawn = rng.choice(n_items - 1, size=config.collab_graph_degree, replace=False)
        neighbors[i] = np.where(drawn >= i, drawn + 1, drawn)

    # semantic transition CDFs (softmax over cosine to the current item)
    logits = (sem @ sem.T) / SEMANTIC_SOFTMAX_TEMPERATURE
    np.fill_diagonal(logits, -np.inf)
    probs = np.exp(logits - logits.max(axis=1, keepdims=True))
    probs /= probs.sum(axis=1, keepdims=True)
    sem_cdf = np.cumsum(probs, axis=1)

    semantic_user = rng.random(n_users) < config.p_semantic_user
    lo, hi = config.seq_len_range
    lengths = rng.integers(lo, hi + 1, size=n_users)

    sequences = []
    for u in range(n_users):
        cur = int(rng.integers(n_items))
        seq = [cur]
        for _ in range(int(lengths[u]) - 1):
            if rng.random() < config.noise:
                nxt = int(rng.integers(n_items))
            elif semantic_user[u]:
                nxt = int(np.searchsorted(sem_cdf[cur], rng.random()))
            else:
                nxt = int(neighbors[cur][rng.integers(config.collab_graph_degree)])
            seq.append(nxt)
            cur = nxt
        sequences.append(tuple(seq))

    text = _unit_rows(sem + rng.normal(0.0, config.text_noise_sigma, sem.shape))

    uw = max(4, len(str(n_users - 1)))
    iw = max(4, len(str(n_items - 1)))
    users = tuple(f"u{u:0{uw}d}" for u in range(n_users))
    items = tuple(f"i{i:0{iw}d}" for i in range(n_items))
    dataset = InteractionDataset(users=users, items=items, sequences=tuple(sequences))
    embeddings = EmbeddingMatrix(item_ids=items, rows=text.astype(np.float32))
    provenance = {
        users[u]: (LABEL_SEMANTIC if semantic_user[u] else LABEL_COLLABORATIVE)
        for u in range(n_users)
    }
    return dataset, embeddings, provenance


def dataset_interactions(dataset: InteractionDataset) -> list[Interaction]:
    """Flatten a dataset back to records (timestamp = position in sequence)."""
    out = []
    for u, seq in zip(dataset.users, dataset.sequences):
        for t, item in enumerate(seq):
            out.append(Interaction(user_id=u, item_id=dataset.items[item], timestamp=t))
    return out


def write_provenance(provenance: dict[str, str], path) -> None:
    with open(path, "w") as fh:
        for user_id, label in provenance.items():
            fh.write(json.dumps({"user_id": user_id, "label": label}) + "\n")


def read_provenance(path) -> dict[str, str]:
    out = {}
    with open(path) as fh:
        for line in fh:
            if line.strip():
                rec = json.loads(line)
                out[rec["user_id"]] = rec["label"]
    return out
