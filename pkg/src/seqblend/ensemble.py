"""Inference-time score ensembling of two dense-retrieval models.

The basic ensembler adds the two cosine score vectors.  The generalized
family alpha*exp(s_id/tau) + (1-alpha)*exp(s_text/tau) interpolates
between a max-style combiner (small tau) and the plain sum (large tau,
alpha=0.5, up to a monotone transform).  Raw scores are ensembled as-is;
no normalization mode is offered.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError
from .retrieval import ScoreVector, ranks_of_targets

# exp(s/tau) stays finite in float64 for |s| <= 1 down to this tau; below
# it the combination is computed in the log domain (a strictly monotone
# transform, so every induced ranking is unchanged).
_RAW_TAU_FLOOR = 2e-3

DEFAULT_ALPHA_GRID = tuple(np.round(np.linspace(0.0, 1.0, 21), 10))
DEFAULT_LOG10_TAU_GRID = tuple(np.round(np.arange(-2.0, 3.0 + 1e-9, 0.25), 10))
ENSREC_REFERENCE = (0.5, 2.0)  # (alpha, log10 tau): the plain-sum operating point


@dataclass(frozen=True)
class EnsembleParams:
    alpha: float
    tau: float

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ContractError(f"alpha must be in [0, 1], got {self.alpha}")
        if not self.tau > 0.0:
            raise ContractError(f"tau must be positive, got {self.tau}")


def _unwrap(s) -> tuple[np.ndarray, str | None]:
    if isinstance(s, ScoreVector):
        return np.asarray(s.scores), s.user_id
    return np.asarray(s), None


def ens_sum(s_id, s_text):
    """Elementwise sum of two score vectors over the same catalog."""
    a, uid = _unwrap(s_id)
    b, _ = _unwrap(s_text)
    if a.shape != b.shape:
        raise ContractError(f"score length mismatch: {a.shape} vs {b.shape}")
    out = a + b
    if uid is not None:
        return ScoreVector(user_id=uid, scores=out)
    return out


def _alpha_tau_combine(a: np.ndarray, b: np.ndarray, alpha: float, tau: float) -> np.ndarray:
    """alpha*exp(a/tau) + (1-alpha)*exp(b/tau), order-exactly for any tau.

    Down to tau = 2e-3 the raw float64 expression is exact and is returned
    as-is.  Below that exp would overflow/underflow, so the log of the
    ensemble score is returned instead (logaddexp form): a strictly
    monotone transform, hence the induced ranking is identical.
    """
    a = a.astype(np.float64, copy=False)
    b = b.astype(np.float64, copy=False)
    if tau >= _RAW_TAU_FLOOR:
        return alpha * np.exp(a / tau) + (1.0 - alpha) * np.exp(b / tau)
    if alpha == 1.0:
        return a / tau
    if alpha == 0.0:
        return b / tau
    return np.logaddexp(np.log(alpha) + a / tau, np.log1p(-alpha) + b / tau)


def ens_alpha_tau(s_id, s_text, params: EnsembleParams):
    """alpha * exp(s_id/tau) + (1-alpha) * exp(s_text/tau), in float64.

    For very small tau, where the exponentials leave float64 range, the
    log of the combination is returned instead; log is strictly monotone,
    so the induced ranking is exactly the same for every tau.
    """
    a, uid = _unwrap(s_id)
    b, _ = _unwrap(s_text)
    if a.shape != b.shape:
        raise ContractError(f"score length mismatch: {a.shape} vs {b.shape}")
    out = _alpha_tau_combine(a, b, params.alpha, params.tau)
    if uid is not None:
        return ScoreVector(user_id=uid, scores=out)
    return out


# ---------------------------------------------------------------------------
# (alpha, log10 tau) grid sweep
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepInputs:
    """Per-split scoring inputs: one (s_id, s_text, target) triple per user.

    ``splits`` maps split name -> (s_id matrix, s_text matrix, targets),
    with score matrices of shape (n_users, n_items).  For the train split
    each user contributes their most recent training pair.
    """

    splits: dict[str, tuple[np.ndarray, np.ndarray, np.ndarray]]

    def __post_init__(self):
        for name, (sid, stx, tgt) in self.splits.items():
            if sid.shape != stx.shape:
                raise ContractError(f"{name}: s_id and s_text shapes differ")
            if sid.shape[0] != len(tgt):
                raise ContractError(f"{name}: one target per user required")


@dataclass
class SweepResult:
    alpha_grid: tuple[float, ...]
    log10_tau_grid: tuple[float, ...]
    recall_grid: dict[str, np.ndarray] = field(default_factory=dict)  # (A, T)
    argmax: dict[str, tuple[float, float]] = field(default_factory=dict)
    k: int = 10

    def recall_at(self, split: str, alpha: float, log10_tau: float) -> float:
        ai = self.alpha_grid.index(alpha)
        ti = self.log10_tau_grid.index(log10_tau)
        return float(self.recall_grid[split][ai, ti])

    def selected_test_recalls(self) -> dict[str, float]:
        """Test recall at each split's own argmax point."""
        out = {}
        for split, (alpha, lt) in self.argmax.items():
            out[split] = self.recall_at("test", alpha, lt)
        return out

    def summary(self) -> dict:
        return {
            "k": self.k,
            "alpha_grid": list(self.alpha_grid),
            "log10_tau_grid": list(self.log10_tau_grid),
            "reference_point": {
                "alpha": ENSREC_REFERENCE[0],
                "log10_tau": ENSREC_REFERENCE[1],
            },
            "argmax": {
                s: {"alpha": a, "log10_tau": t} for s, (a, t) in self.argmax.items()
            },
            "selected_test_recall": self.selected_test_recalls(),
        }


def _with_reference(grid: tuple[float, ...], ref: float) -> tuple[float, ...]:
    vals = sorted(set(float(g) for g in grid) | {float(ref)})
    return tuple(vals)


def sweep(
    inputs: SweepInputs,
    alpha_grid=DEFAULT_ALPHA_GRID,
    log10_tau_grid=DEFAULT_LOG10_TAU_GRID,
    k: int = 10,
) -> SweepResult:
    """Recall@k over the (alpha, log10 tau) grid for every split.

    The plain-sum reference point (alpha 0.5, log10 tau 2) is added to the
    grids when missing.  Per-split argmax ties go to the smallest alpha,
    then the smallest tau.
    """
    if not len(alpha_grid) or not len(log10_tau_grid):
        raise ContractError("grids must be non-empty")
    alphas = _with_reference(tuple(alpha_grid), ENSREC_REFERENCE[0])
    log_taus = _with_reference(tuple(log10_tau_grid), ENSREC_REFERENCE[1])

    result = SweepResult(alpha_grid=alphas, log10_tau_grid=log_taus, k=k)
    for split, (s_id, s_text, targets) in inputs.splits.items():
        grid = np.zeros((len(alphas), len(log_taus)))
        for ti, lt in enumerate(log_taus):
            tau = 10.0 ** lt
            raw = tau >= _RAW_TAU_FLOOR
            if raw:  # share the per-channel exponentials across alphas
                e_id = np.exp(s_id.astype(np.float64, copy=False) / tau)
                e_tx = np.exp(s_text.astype(np.float64, copy=False) / tau)
            for ai, alpha in enumerate(alphas):
                if raw:
                    combined = alpha * e_id + (1.0 - alpha) * e_tx
                else:
                    combined = _alpha_tau_combine(s_id, s_text, alpha, tau)
                ranks = ranks_of_targets(combined, targets)
                grid[ai, ti] = np.count_nonzero(ranks <= k) / len(ranks)
        result.recall_grid[split] = grid
        best_flat = int(np.argmax(grid))       # first max: smallest alpha, then tau
        ai, ti = divmod(best_flat, grid.shape[1])
        result.argmax[split] = (alphas[ai], log_taus[ti])
    return result


def write_sweep_csv(result: SweepResult, path) -> None:
    """One row per (alpha, log10_tau, split): plot-ready heatmap grid."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["alpha", "log10_tau", "split", f"recall@{result.k}"])
        for split, grid in result.recall_grid.items():
            for ai, alpha in enumerate(result.alpha_grid):
                for ti, lt in enumerate(result.log10_tau_grid):
                    writer.writerow([alpha, lt, split, f"{grid[ai, ti]:.6f}"])
