"""Contrastive next-item training with early stopping on validation recall.

The loss is InfoNCE over cosine similarities at a fixed temperature, with
negatives drawn either from the full catalog or from the batch's own
targets (duplicate targets are masked out of each other's denominators).
Gradients are exact and hand-derived; the optimizer is Adam with default
moment constants, no weight decay, and no schedule.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .dataset import SplitView
from .errors import ConfigError, ContractError, NumericalError
from .metrics import recall_at_k
from .model import SRModel
from .retrieval import NORM_EPS, rank_table_for_model

LOSS_MODES = ("full_batch", "in_batch")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 256
    loss_mode: str = "full_batch"
    loss_temperature: float = 0.05
    max_epochs: int = 200
    patience: int = 10
    seed: int = 0
    eval_every: int = 1
    eval_k: int = 10

    def __post_init__(self):
        if self.loss_mode not in LOSS_MODES:
            raise ConfigError(f"loss_mode must be one of {LOSS_MODES}")
        if self.loss_temperature <= 0:
            raise ConfigError("loss_temperature must be positive")
        if self.patience < 1 or self.max_epochs < 1 or self.eval_every < 1:
            raise ConfigError("patience, max_epochs, eval_every must be >= 1")
        if self.batch_size < 1 or self.learning_rate <= 0:
            raise ConfigError("batch_size must be >= 1 and learning_rate > 0")


# ---------------------------------------------------------------------------
# InfoNCE
# ---------------------------------------------------------------------------

def _normalize_with_grad(x: np.ndarray):
    """Unit rows plus a closure mapping d(x_hat) -> d(x) exactly."""
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    denom = norms + np.asarray(NORM_EPS, dtype=x.dtype)
    x_hat = x / denom

    def backward(g: np.ndarray) -> np.ndarray:
        # the radial term vanishes for zero rows; guard the 0/0 there
        inner = (x * g).sum(axis=1, keepdims=True)
        scale = np.maximum(norms * denom * denom, np.finfo(x.dtype).tiny)
        coef = np.where(norms > 0, inner / scale, 0.0)
        return g / denom - x * coef

    return x_hat, backward


def infonce_loss(
    user_embs: np.ndarray,
    target_items: np.ndarray,
    item_embs: np.ndarray,
    mode: str = "full_batch",
    temperature: float = 0.05,
):
    """Mean -log softmax(cos(u, e_target)/T) over the candidate set.

    Returns (loss, grad_user_embs, grad_item_embs), the exact analytic
    gradients in the dtype of the inputs.  In full_batch mode item_embs
    is the whole catalog and target_items indexes it; in in_batch mode
    item_embs holds the batch's target embeddings row-aligned with
    user_embs, and target_items is used only for duplicate masking.
    """
    if mode not in LOSS_MODES:
        raise ConfigError(f"loss mode must be one of {LOSS_MODES}")
    if temperature <= 0:
        raise ConfigError("temperature must be positive")
    user_embs = np.asarray(user_embs)
    item_embs = np.asarray(item_embs)
    target_items = np.asarray(target_items)
    B = user_embs.shape[0]
    if target_items.shape != (B,):
        raise ContractError("one target item per user embedding required")

    u_hat, u_back = _normalize_with_grad(user_embs)
    e_hat, e_back = _normalize_with_grad(item_embs)
    logits = (u_hat @ e_hat.T) / temperature                  # (B, C)

    if mode == "full_batch":
        if target_items.min(initial=0) < 0 or target_items.max(initial=0) >= item_embs.shape[0]:
            raise ContractError("target index outside the candidate catalog")
        pos = target_items
    else:
        if item_embs.shape[0] != B:
            raise ContractError("in_batch mode needs one candidate row per example")
        pos = np.arange(B)
        # exclude other rows holding the same item from each denominator
        dup = target_items[None, :] == target_items[:, None]
        mask_out = dup & ~np.eye(B, dtype=bool)
        logits = np.where(mask_out, -np.inf, logits)

    rows = np.arange(B)
    m = logits.max(axis=1, keepdims=True)
    exp = np.exp(logits - m)
    denom = exp.sum(axis=1, keepdims=True)
    log_softmax_pos = (logits[rows, pos] - m[:, 0]) - np.log(denom[:, 0])
    loss = float(-log_softmax_pos.mean())

    probs = exp / denom                                        # 0 at masked entries
    g_logits = probs
    g_logits[rows, pos] -= 1.0
    g_logits /= B

    g_u_hat = (g_logits @ e_hat) / temperature
    g_e_hat = (g_logits.T @ u_hat) / temperature
    return loss, u_back(g_u_hat), e_back(g_e_hat)


# ---------------------------------------------------------------------------
# Optimizer
# ---------------------------------------------------------------------------

class Adam:
    def __init__(self, params: dict[str, np.ndarray], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {n: np.zeros_like(a) for n, a in params.items()}
        self.v = {n: np.zeros_like(a) for n, a in params.items()}

    def step(self, grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        b1c = 1.0 - self.beta1 ** self.t
        b2c = 1.0 - self.beta2 ** self.t
        for name, p in self.params.items():
            g = grads[name]
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            update = (m / b1c) / (np.sqrt(v / b2c) + self.eps)
            p -= np.asarray(self.lr, dtype=p.dtype) * update


# ---------------------------------------------------------------------------
# Training loop
# ---------------------------------------------------------------------------

@dataclass
class TrainResult:
    model: SRModel
    best_epoch: int
    best_val_recall: float
    history: list[dict] = field(default_factory=list)

    def history_rows(self) -> list[dict]:
        return [dict(h) for h in self.history]


class Trainer:
    """Epoch loop with best-checkpoint tracking and serializable state.

    Keeps the parameters from the epoch with the highest validation
    Recall@k (earliest on ties) and stops once ``patience`` epochs pass
    without improvement.  Shuffling and dropout share one seeded
    generator, so identical config+seed reproduces the history bitwise;
    ``state_dict``/``load_state`` allow suspending and resuming a run.
    """

    def __init__(
        self,
        model: SRModel,
        train_split: SplitView,
        val_split: SplitView,
        config: TrainConfig,
        user_ids: tuple[str, ...] | None = None,
    ):
        if len(train_split) == 0:
            raise ContractError("empty train split")
        if len(val_split) == 0:
            raise ContractError("empty validation split")
        if user_ids is None:
            user_ids = tuple(str(u) for u in range(max(val_split.user_indices) + 1))
        self.model = model
        self.config = config
        self.user_ids = tuple(user_ids)
        self.val_split = val_split

        self.padded, self.lengths = model.pad_prefixes(train_split.prefixes)
        self.targets = np.asarray(train_split.targets, dtype=np.int64)

        self.rng = np.random.default_rng(config.seed)
        self.optimizer = Adam(model.params, lr=config.learning_rate)
        self.epoch = 0
        self.best_recall = -1.0
        self.best_epoch = -1
        self.best_params: dict[str, np.ndarray] | None = None
        self.last_improve_epoch = 0
        self.history: list[dict] = []

    # -- stepping ------------------------------------------------------

    def _train_step(self, batch_idx: np.ndarray) -> float:
        model, config = self.model, self.config
        user_embs, cache = model.forward_batch(
            self.padded[batch_idx], self.lengths[batch_idx],
            train=True, rng=self.rng, need_cache=True,
        )
        batch_targets = self.targets[batch_idx]
        if config.loss_mode == "full_batch":
            item_embs, proj_cache = model.catalog_embeddings(need_cache=True)
        elif model.embedder.source == "id_table":
            item_embs, proj_cache = model.params["embed.table"][batch_targets], None
        else:
            item_embs, proj_cache = model._project_text(
                model.text_rows[batch_targets], need_cache=True
            )
        loss, g_user, g_items = infonce_loss(
            user_embs, batch_targets, item_embs,
            mode=config.loss_mode, temperature=config.loss_temperature,
        )
        grads = model.zero_grads()
        model.backward_batch(g_user, cache, grads)
        if config.loss_mode == "full_batch":
            model.catalog_backward(g_items, proj_cache, grads)
        elif model.embedder.source == "id_table":
            np.add.at(grads["embed.table"], batch_targets, g_items)
        else:
            model._project_text_backward(g_items, proj_cache, grads)
        self.optimizer.step(grads)
        return loss

    def run_epoch(self) -> dict:
        config = self.config
        self.epoch += 1
        t0 = time.perf_counter()
        n = len(self.targets)
        total = 0.0
        perm = self.rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = perm[start: start + config.batch_size]
            loss = self._train_step(idx)
            if not np.isfinite(loss):
                raise NumericalError(
                    f"non-finite loss at epoch {self.epoch}; try a lower learning rate"
                )
            total += loss * len(idx)
        epoch_loss = total / n

        val_recall = None
        if self.epoch % config.eval_every == 0:
            table = rank_table_for_model(
                self.model, self.val_split, self.user_ids, "validation"
            )
            val_recall = recall_at_k(table, config.eval_k)
            if val_recall > self.best_recall:
                self.best_recall = val_recall
                self.best_epoch = self.epoch
                self.best_params = {n_: a.copy() for n_, a in self.model.params.items()}
                self.last_improve_epoch = self.epoch

        row = {
            "epoch": self.epoch,
            "loss": epoch_loss,
            f"val_recall@{config.eval_k}": val_recall,
            "wall_time": time.perf_counter() - t0,
        }
        self.history.append(row)
        return row

    @property
    def should_stop(self) -> bool:
        if self.epoch >= self.config.max_epochs:
            return True
        return self.epoch - self.last_improve_epoch >= self.config.patience

    def run(self, log=None) -> TrainResult:
        while not self.should_stop:
            row = self.run_epoch()
            if log is not None:
                log(row)
        return self.result()

    def result(self) -> TrainResult:
        if self.best_params is not None:
            self.model.params = {n: a.copy() for n, a in self.best_params.items()}
        return TrainResult(
            model=self.model, best_epoch=self.best_epoch,
            best_val_recall=self.best_recall, history=self.history,
        )

    # -- suspend / resume ----------------------------------------------

    def state_dict(self) -> dict:
        arrays = {}
        for n, a in self.model.params.items():
            arrays[f"param/{n}"] = a
            arrays[f"adam_m/{n}"] = self.optimizer.m[n]
            arrays[f"adam_v/{n}"] = self.optimizer.v[n]
        if self.best_params is not None:
            for n, a in self.best_params.items():
                arrays[f"best/{n}"] = a
        meta = {
            "epoch": self.epoch,
            "adam_t": self.optimizer.t,
            "best_recall": self.best_recall,
            "best_epoch": self.best_epoch,
            "last_improve_epoch": self.last_improve_epoch,
            # wall times are log material, not state: dropping them keeps
            # the serialized bytes identical across identically-seeded runs
            "history": [
                {k: v for k, v in row.items() if k != "wall_time"}
                for row in self.history
            ],
            "rng_state": self.rng.bit_generator.state,
        }
        return {"arrays": arrays, "meta": meta}

    def load_state(self, state: dict) -> None:
        arrays, meta = state["arrays"], state["meta"]
        for n in self.model.params:
            self.model.params[n] = arrays[f"param/{n}"].copy()
            self.optimizer.m[n] = arrays[f"adam_m/{n}"].copy()
            self.optimizer.v[n] = arrays[f"adam_v/{n}"].copy()
        self.optimizer.params = self.model.params
        if any(k.startswith("best/") for k in arrays):
            self.best_params = {
                n: arrays[f"best/{n}"].copy() for n in self.model.params
            }
        self.epoch = int(meta["epoch"])
        self.optimizer.t = int(meta["adam_t"])
        self.best_recall = float(meta["best_recall"])
        self.best_epoch = int(meta["best_epoch"])
        self.last_improve_epoch = int(meta["last_improve_epoch"])
        self.history = list(meta["history"])
        self.rng.bit_generator.state = meta["rng_state"]


def save_trainer_state(trainer: Trainer, path) -> None:
    """Deterministic on-disk state: no archive timestamps, stable order."""
    import struct

    state = trainer.state_dict()
    names = sorted(state["arrays"])
    header = {
        "meta": state["meta"],
        "tensors": [
            {"name": n, "shape": list(state["arrays"][n].shape),
             "dtype": str(state["arrays"][n].dtype)}
            for n in names
        ],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(b"TRS1")
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for n in names:
            fh.write(np.ascontiguousarray(state["arrays"][n]).tobytes())


def load_trainer_state(path) -> dict:
    import struct

    from .errors import FormatError

    with open(path, "rb") as fh:
        if fh.read(4) != b"TRS1":
            raise FormatError("bad trainer-state magic")
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen).decode("utf-8"))
        arrays = {}
        for spec in header["tensors"]:
            shape = tuple(spec["shape"])
            dtype = np.dtype(spec["dtype"])
            count = int(np.prod(shape)) if shape else 1
            buf = fh.read(dtype.itemsize * count)
            if len(buf) != dtype.itemsize * count:
                raise FormatError(f"truncated state tensor {spec['name']}")
            arrays[spec["name"]] = np.frombuffer(buf, dtype=dtype).reshape(shape).copy()
    return {"arrays": arrays, "meta": header["meta"]}


def train(
    model: SRModel,
    train_split: SplitView,
    val_split: SplitView,
    config: TrainConfig,
    user_ids: tuple[str, ...] | None = None,
    log=None,
) -> TrainResult:
    """One full training run; see Trainer for the loop semantics."""
    return Trainer(model, train_split, val_split, config, user_ids).run(log=log)


def config_as_dict(config: TrainConfig) -> dict:
    return asdict(config)
