"""Ranking metrics, correct-user sets, and model complementarity.

All set sizes are kept as integers until the final division, so the
identity jaccard = (recall_a + recall_b - genie) / genie holds exactly
for every single evaluation.  Multi-trial reports compute per-trial
values first and then average them, and say so in their output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import ContractError
from .retrieval import RankTable

DEFAULT_K = 10

# Model-pair presets for complementarity tables: the base model against
# each single-axis variant, plus the headline (id, text) pair.
VARIANT_PAIR_PRESET = (
    ("id_only", "id_t"),
    ("id_only", "id_ell"),
    ("id_only", "id_init"),
    ("text_only", "text_t"),
    ("text_only", "text_ell"),
    ("text_only", "text_e"),
)
FULL_PAIR_PRESET = VARIANT_PAIR_PRESET + (("id_only", "text_only"),)


@dataclass(frozen=True)
class CorrectSet:
    """Users whose target item ranked within the top ``k``."""

    k: int
    users: frozenset[str]

    def __len__(self) -> int:
        return len(self.users)


@dataclass(frozen=True)
class ComplementarityReport:
    recall_a: float
    recall_b: float
    genie: float
    jaccard: float
    intersection_size: int
    union_size: int
    universe_size: int

    def as_dict(self) -> dict:
        return {
            "recall_a": self.recall_a,
            "recall_b": self.recall_b,
            "genie": self.genie,
            "jaccard": self.jaccard,
            "intersection_size": self.intersection_size,
            "union_size": self.union_size,
            "universe_size": self.universe_size,
        }


@dataclass(frozen=True)
class SignificanceResult:
    t_statistic: float
    p_value: float
    degenerate_variance: bool = False


def recall_at_k(ranks: RankTable, k: int = DEFAULT_K) -> float:
    """Fraction of users whose target rank is <= k."""
    if len(ranks) == 0:
        raise ContractError("recall_at_k on an empty rank table")
    if k < 1:
        raise ContractError(f"k must be >= 1, got {k}")
    return float(np.count_nonzero(ranks.ranks <= k)) / len(ranks)


def ndcg_at_k(ranks: RankTable, k: int = DEFAULT_K) -> float:
    """Mean of 1/log2(rank+1) for ranks <= k, else 0 (single-target IDCG=1)."""
    if len(ranks) == 0:
        raise ContractError("ndcg_at_k on an empty rank table")
    if k < 1:
        raise ContractError(f"k must be >= 1, got {k}")
    r = ranks.ranks.astype(np.float64)
    gains = np.where(ranks.ranks <= k, 1.0 / np.log2(r + 1.0), 0.0)
    return float(gains.mean())


def per_user_ndcg(ranks: RankTable, k: int = DEFAULT_K) -> np.ndarray:
    r = ranks.ranks.astype(np.float64)
    return np.where(ranks.ranks <= k, 1.0 / np.log2(r + 1.0), 0.0)


def per_user_hit(ranks: RankTable, k: int = DEFAULT_K) -> np.ndarray:
    return (ranks.ranks <= k).astype(np.float64)


def correct_set(ranks: RankTable, k: int = DEFAULT_K) -> CorrectSet:
    if k < 1:
        raise ContractError(f"k must be >= 1, got {k}")
    hit = ranks.ranks <= k
    users = frozenset(uid for uid, h in zip(ranks.user_ids, hit) if h)
    return CorrectSet(k=k, users=users)


def complementarity(a: CorrectSet, b: CorrectSet, universe) -> ComplementarityReport:
    """Jaccard of two correct-user sets plus the union ('genie') recall."""
    if a.k != b.k:
        raise ContractError(f"mismatched cutoffs: {a.k} vs {b.k}")
    universe = frozenset(universe)
    if not universe:
        raise ContractError("empty user universe")
    if not (a.users <= universe and b.users <= universe):
        raise ContractError("correct sets must be subsets of the universe")

    inter = len(a.users & b.users)
    union = len(a.users | b.users)
    n = len(universe)
    return ComplementarityReport(
        recall_a=len(a.users) / n,
        recall_b=len(b.users) / n,
        genie=union / n,
        jaccard=(inter / union) if union else 0.0,
        intersection_size=inter,
        union_size=union,
        universe_size=n,
    )


def significance(per_user_a: np.ndarray, per_user_b: np.ndarray) -> SignificanceResult:
    """Two-sided paired t-test on per-user metric differences.

    Inputs are paired by user (pool trials by concatenating their paired
    vectors).  Zero variance of the differences is reported explicitly
    instead of a NaN statistic: p=1 when the mean difference is 0, p=0
    otherwise.
    """
    a = np.asarray(per_user_a, dtype=np.float64)
    b = np.asarray(per_user_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ContractError("paired vectors must be 1-D and equally long")
    if len(a) < 2:
        raise ContractError("need at least 2 paired observations")

    diffs = a - b
    if np.ptp(diffs) == 0.0:
        mean = float(diffs[0])
        return SignificanceResult(
            t_statistic=0.0 if mean == 0.0 else np.inf * np.sign(mean),
            p_value=1.0 if mean == 0.0 else 0.0,
            degenerate_variance=True,
        )
    t_stat, p_value = stats.ttest_rel(a, b)
    return SignificanceResult(t_statistic=float(t_stat), p_value=float(p_value))


def label_enrichment(
    set_a: CorrectSet, set_b: CorrectSet, labels: dict[str, str], label: str
) -> float:
    """How over-represented ``label`` users are in set_a relative to set_b.

    Ratio of the label's share among set_a's users to its share among
    set_b's users.  Used to check which behavioral population each model
    serves on provenance-labeled synthetic data.
    """
    if not set_a.users or not set_b.users:
        raise ContractError("enrichment needs two non-empty correct sets")
    share_a = sum(1 for u in set_a.users if labels[u] == label) / len(set_a.users)
    share_b = sum(1 for u in set_b.users if labels[u] == label) / len(set_b.users)
    if share_b == 0.0:
        return np.inf if share_a > 0 else 1.0
    return share_a / share_b


# ---------------------------------------------------------------------------
# Multi-trial complementarity tables (machine + human readable)
# ---------------------------------------------------------------------------

def pair_report(
    per_trial: list[ComplementarityReport], pair: tuple[str, str]
) -> dict:
    """Mean-over-trials summary for one model pair, per-trial values kept."""
    mean = lambda key: float(np.mean([getattr(r, key) for r in per_trial]))
    return {
        "pair": list(pair),
        "n_trials": len(per_trial),
        "aggregation": "per-trial metrics averaged after computation",
        "recall_a": mean("recall_a"),
        "recall_b": mean("recall_b"),
        "genie": mean("genie"),
        "jaccard": mean("jaccard"),
        "trials": [r.as_dict() for r in per_trial],
    }


def format_pair_table(reports: list[dict]) -> str:
    """Aligned text table with one row per model pair."""
    header = f"{'pair':<28}{'R@K (a)':>10}{'R@K (b)':>10}{'Genie':>10}{'Jaccard':>10}"
    lines = [header, "-" * len(header)]
    for rep in reports:
        name = f"({rep['pair'][0]}, {rep['pair'][1]})"
        lines.append(
            f"{name:<28}{rep['recall_a']:>10.4f}{rep['recall_b']:>10.4f}"
            f"{rep['genie']:>10.4f}{rep['jaccard']:>10.4f}"
        )
    return "\n".join(lines)
