"""Pipeline orchestration: prepare | synth | train | evaluate | ensemble | sweep.

One experiment config (JSON or TOML, plus flag overrides) drives every
subcommand.  Each run writes into one output directory containing a
config snapshot, content hashes of the inputs, and the produced
artifacts; everything except the logs/ subdirectory is byte-identical
across reruns with the same config and seed.

Exit codes: 0 success, 2 usage/config error, 3 data error, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import dataset as ds_mod
from . import synth as synth_mod
from .ensemble import (
    DEFAULT_ALPHA_GRID,
    DEFAULT_LOG10_TAU_GRID,
    ENSREC_REFERENCE,
    SweepInputs,
    sweep,
    write_sweep_csv,
)
from .errors import ConfigError, DataError, NumericalError, SeqblendError
from .metrics import (
    FULL_PAIR_PRESET,
    complementarity,
    correct_set,
    format_pair_table,
    ndcg_at_k,
    pair_report,
    per_user_hit,
    per_user_ndcg,
    recall_at_k,
    significance,
)
from .model import EmbedderConfig, EncoderConfig, SRModel, load_checkpoint, save_checkpoint
from .retrieval import rank_table_for_model, ranks_of_targets, score_split
from .trainer import (
    TrainConfig,
    Trainer,
    load_trainer_state,
    save_trainer_state,
)

OUTPUT_ROOT_ENV = "SEQBLEND_OUTPUT_ROOT"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4

DEFAULT_MODELS = {
    "id_only": {"embedder": {"source": "id_table"}},
    "text_only": {
        "embedder": {"source": "frozen_text", "projection": "linear"},
        "text_embeddings": "synth",
    },
}

# the base pair plus the six single-axis variants used in the pairwise
# complementarity tables: alternate sequence encoder (_t), in-batch loss
# (_ell), 5x init std (id_init), and an alternate text-embedding file
# (text_e, which needs models.text_e.text_embeddings pointed somewhere).
VARIANT_MODELS = {
    "id_only": {"embedder": {"source": "id_table"}},
    "id_t": {
        "embedder": {"source": "id_table"},
        "encoder": {"kind": "causal_decoder", "n_layers": 2, "n_heads": 1},
    },
    "id_ell": {
        "embedder": {"source": "id_table"},
        "train": {"loss_mode": "in_batch"},
    },
    "id_init": {"embedder": {"source": "id_table", "init_std_multiplier": 5.0}},
    "text_only": {
        "embedder": {"source": "frozen_text", "projection": "linear"},
        "text_embeddings": "synth",
    },
    "text_t": {
        "embedder": {"source": "frozen_text", "projection": "linear"},
        "encoder": {"kind": "causal_decoder", "n_layers": 2, "n_heads": 1},
        "text_embeddings": "synth",
    },
    "text_ell": {
        "embedder": {"source": "frozen_text", "projection": "linear"},
        "train": {"loss_mode": "in_batch"},
        "text_embeddings": "synth",
    },
    "text_e": {
        "embedder": {"source": "frozen_text", "projection": "linear"},
        "text_embeddings": "synth",
    },
}

MODEL_PRESETS = {"default": DEFAULT_MODELS, "variants": VARIANT_MODELS}


@dataclass
class ExperimentConfig:
    seed: int = 1234
    trials: int = 3
    output_dir: str = "seqblend-run"
    dataset: dict = field(default_factory=lambda: {"kind": "synth"})
    models: dict = field(default_factory=lambda: json.loads(json.dumps(DEFAULT_MODELS)))
    train: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=lambda: {"ks": [10]})
    ensemble: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if len(set(self.models)) != len(self.models):
            raise ConfigError("model names must be unique")
        for name, mcfg in self.models.items():
            emb = mcfg.get("embedder", {})
            if emb.get("source") == "frozen_text":
                ref = mcfg.get("text_embeddings")
                if ref is None:
                    raise ConfigError(f"model {name}: frozen_text needs text_embeddings")
                if ref != "synth" and not Path(ref).exists():
                    raise ConfigError(f"model {name}: no such embedding file {ref}")

    def as_dict(self) -> dict:
        return asdict(self)


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"no such config file: {p}")
    text = p.read_text()
    if p.suffix.lower() == ".toml":
        try:
            import tomllib  # py311+
        except ModuleNotFoundError:
            import tomli as tomllib
        return tomllib.loads(text)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid config JSON: {exc}") from None


def _apply_overrides(raw: dict, args) -> dict:
    if getattr(args, "seed", None) is not None:
        raw["seed"] = args.seed
    if getattr(args, "trials", None) is not None:
        raw["trials"] = args.trials
    if getattr(args, "out", None) is not None:
        raw["output_dir"] = args.out
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        try:
            value = json.loads(value)
        except json.JSONDecodeError:
            pass  # keep as string
        node = raw
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
    return raw


def build_experiment_config(args) -> ExperimentConfig:
    raw = _apply_overrides(load_config(getattr(args, "config", None)), args)
    if isinstance(raw.get("models"), str):
        preset = raw["models"]
        if preset not in MODEL_PRESETS:
            raise ConfigError(
                f"unknown model preset {preset!r}; available: {sorted(MODEL_PRESETS)}"
            )
        raw["models"] = json.loads(json.dumps(MODEL_PRESETS[preset]))
    known = {f for f in ExperimentConfig.__dataclass_fields__}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return ExperimentConfig(**raw)


# ---------------------------------------------------------------------------
# Run directory plumbing
# ---------------------------------------------------------------------------

def resolve_outdir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.output_dir)
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root and not out.is_absolute():
        out = Path(root) / out
    out.mkdir(parents=True, exist_ok=True)
    (out / "logs").mkdir(exist_ok=True)
    return out


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def snapshot_run(cfg: ExperimentConfig, outdir: Path) -> None:
    write_json(cfg.as_dict(), outdir / "config.json")
    hashes = {}
    data = cfg.dataset
    for key in ("interactions", "text_embeddings"):
        ref = data.get(key)
        if ref and Path(ref).exists():
            hashes[ref] = _sha256(Path(ref))
    for mcfg in cfg.models.values():
        ref = mcfg.get("text_embeddings")
        if ref and ref != "synth" and Path(ref).exists():
            hashes[ref] = _sha256(Path(ref))
    write_json({"sha256": hashes}, outdir / "inputs.json")


def write_json(payload: dict, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _log_line(outdir: Path, message: str) -> None:
    with open(outdir / "logs" / "run.log", "a") as fh:
        fh.write(f"{time.strftime('%Y-%m-%dT%H:%M:%S')} {message}\n")


# ---------------------------------------------------------------------------
# Dataset / model materialization
# ---------------------------------------------------------------------------

def build_dataset(cfg: ExperimentConfig):
    """Returns (dataset, (train, val, test), synth_text, provenance)."""
    data = cfg.dataset
    kind = data.get("kind", "synth")
    max_seq_len = int(data.get("max_seq_len", ds_mod.DEFAULT_MAX_SEQ_LEN))
    if kind == "synth":
        synth_kwargs = dict(data.get("synth", {}))
        synth_kwargs.setdefault("seed", cfg.seed)
        if "seq_len_range" in synth_kwargs:
            synth_kwargs["seq_len_range"] = tuple(synth_kwargs["seq_len_range"])
        scfg = synth_mod.SynthConfig(**synth_kwargs)
        dataset, text, provenance = synth_mod.generate(scfg)
    elif kind == "files":
        path = data.get("interactions")
        if not path:
            raise ConfigError("dataset.kind=files requires dataset.interactions")
        if not Path(path).exists():
            raise ConfigError(f"no such interactions file: {path}")
        interactions = ds_mod.load_interactions(path, data.get("format"))
        dataset = ds_mod.core_filter(interactions, int(data.get("core_k", ds_mod.DEFAULT_CORE_K)))
        text, provenance = None, None
    else:
        raise ConfigError(f"unknown dataset kind: {kind!r}")
    splits = ds_mod.leave_one_out_split(dataset, max_seq_len)
    return dataset, splits, text, provenance


def _aligned_text_rows(ref: str, dataset, synth_text) -> np.ndarray:
    """Text matrix rows reordered to the catalog's dense item indices."""
    if ref == "synth":
        if synth_text is None:
            raise ConfigError("model wants synth text embeddings but dataset is not synth")
        matrix = synth_text
    else:
        matrix = ds_mod.read_embedding_matrix(ref)
    try:
        order = [matrix.index[item] for item in dataset.items]
    except KeyError as exc:
        raise DataError(f"embedding file missing item {exc}") from None
    return matrix.rows[order]


def build_model(cfg: ExperimentConfig, name: str, dataset, synth_text,
                trial: int) -> SRModel:
    if name not in cfg.models:
        raise ConfigError(
            f"unknown model {name!r}; configured models: {sorted(cfg.models)}"
        )
    mcfg = cfg.models[name]
    data_msl = int(cfg.dataset.get("max_seq_len", ds_mod.DEFAULT_MAX_SEQ_LEN))
    encoder_kwargs = {"max_seq_len": data_msl, **mcfg.get("encoder", {})}
    embedder = EmbedderConfig(**mcfg.get("embedder", {}))
    encoder = EncoderConfig(**encoder_kwargs)
    text_rows = None
    if embedder.source == "frozen_text":
        text_rows = _aligned_text_rows(mcfg["text_embeddings"], dataset, synth_text)
    model_seed = cfg.seed + trial + int(mcfg.get("seed_offset", 0))
    return SRModel(embedder, encoder, dataset.n_items,
                   text_matrix=text_rows, seed=model_seed)


def model_train_config(cfg: ExperimentConfig, name: str, trial: int) -> TrainConfig:
    merged = {**cfg.train, **cfg.models[name].get("train", {})}
    merged["seed"] = cfg.seed + trial
    return TrainConfig(**merged)


def _ckpt_path(outdir: Path, name: str, trial: int) -> Path:
    return outdir / "checkpoints" / f"{name}_trial{trial}.ckpt"


def _state_path(outdir: Path, name: str, trial: int) -> Path:
    return outdir / "checkpoints" / f"{name}_trial{trial}.state.bin"


def _load_trained(outdir: Path, name: str, trial: int) -> SRModel:
    path = _ckpt_path(outdir, name, trial)
    if not path.exists():
        raise DataError(f"missing checkpoint {path}; run `seqblend train` first")
    return load_checkpoint(path)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_prepare(args) -> int:
    cfg = build_experiment_config(args)
    if args.input is not None:
        cfg.dataset = {
            "kind": "files",
            "interactions": args.input,
            "format": args.format,
            "core_k": args.core_k,
            "max_seq_len": cfg.dataset.get("max_seq_len", ds_mod.DEFAULT_MAX_SEQ_LEN),
        }
    if cfg.dataset.get("kind") != "files":
        raise ConfigError("prepare needs --input or a dataset.kind=files config")
    outdir = resolve_outdir(cfg)
    snapshot_run(cfg, outdir)
    dataset, splits, _, _ = build_dataset(cfg)
    ds_mod.save_dataset(dataset, outdir / "dataset.json")
    ds_mod.write_manifest(
        ds_mod.dataset_manifest(dataset, splits), outdir / "manifest.json"
    )
    _log_line(outdir, f"prepare: {dataset.n_users} users, {dataset.n_items} items")
    print(f"prepared dataset: {dataset.n_users} users, {dataset.n_items} items, "
          f"{dataset.n_interactions} interactions -> {outdir}")
    return EXIT_OK


def cmd_synth(args) -> int:
    cfg = build_experiment_config(args)
    cfg.dataset.setdefault("kind", "synth")
    if cfg.dataset.get("kind") != "synth":
        raise ConfigError("synth needs a dataset.kind=synth config")
    outdir = resolve_outdir(cfg)
    snapshot_run(cfg, outdir)
    dataset, splits, text, provenance = build_dataset(cfg)
    ds_mod.write_interactions(
        outdir / "interactions.tsv", synth_mod.dataset_interactions(dataset)
    )
    ds_mod.write_embedding_matrix(text, outdir / "text_embeddings.emb1")
    synth_mod.write_provenance(provenance, outdir / "provenance.jsonl")
    ds_mod.save_dataset(dataset, outdir / "dataset.json")
    ds_mod.write_manifest(
        ds_mod.dataset_manifest(dataset, splits), outdir / "manifest.json"
    )
    _log_line(outdir, "synth: dataset generated")
    print(f"synthetic dataset: {dataset.n_users} users, {dataset.n_items} items, "
          f"{dataset.n_interactions} interactions -> {outdir}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = build_experiment_config(args)
    outdir = resolve_outdir(cfg)
    snapshot_run(cfg, outdir)
    dataset, (train_split, val_split, _), synth_text, _ = build_dataset(cfg)
    names = args.models or sorted(cfg.models)
    for name in names:
        if name not in cfg.models:
            raise ConfigError(
                f"unknown model {name!r}; configured models: {sorted(cfg.models)}"
            )
    for name in names:
        for trial in range(cfg.trials):
            tconfig = model_train_config(cfg, name, trial)
            model = build_model(cfg, name, dataset, synth_text, trial)
            trainer = Trainer(model, train_split, val_split, tconfig, dataset.users)
            state_path = _state_path(outdir, name, trial)
            if args.resume and state_path.exists():
                trainer.load_state(load_trainer_state(state_path))
                _log_line(outdir, f"train: resumed {name} trial {trial} "
                                  f"at epoch {trainer.epoch}")
            result = trainer.run()
            ckpt = _ckpt_path(outdir, name, trial)
            ckpt.parent.mkdir(parents=True, exist_ok=True)
            save_checkpoint(result.model, ckpt, extra={
                "model_name": name, "trial": trial,
                "best_epoch": result.best_epoch,
                "best_val_recall": result.best_val_recall,
            })
            save_trainer_state(trainer, state_path)
            hist_path = outdir / "history" / f"{name}_trial{trial}.history.jsonl"
            hist_path.parent.mkdir(parents=True, exist_ok=True)
            times_path = outdir / "logs" / f"{name}_trial{trial}.times.jsonl"
            with open(hist_path, "w") as hfh, open(times_path, "w") as tfh:
                for row in result.history:
                    stable = {k: v for k, v in row.items() if k != "wall_time"}
                    hfh.write(json.dumps(stable, sort_keys=True) + "\n")
                    tfh.write(json.dumps(
                        {"epoch": row["epoch"], "wall_time": row.get("wall_time")}
                    ) + "\n")
            _log_line(outdir, f"train: {name} trial {trial} best_epoch="
                              f"{result.best_epoch} val={result.best_val_recall:.4f}")
            print(f"trained {name} trial {trial}: best epoch {result.best_epoch}, "
                  f"val recall@{tconfig.eval_k} {result.best_val_recall:.4f}")
    return EXIT_OK


def _metric_block(table, ks) -> dict:
    return {
        f"recall@{k}": recall_at_k(table, k) for k in ks
    } | {
        f"ndcg@{k}": ndcg_at_k(table, k) for k in ks
    }


def _write_rank_table(table, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write("user_id,target,rank\n")
        for uid, target, rank in zip(table.user_ids, table.targets, table.ranks):
            fh.write(f"{uid},{target},{rank}\n")


def cmd_evaluate(args) -> int:
    cfg = build_experiment_config(args)
    outdir = resolve_outdir(cfg)
    snapshot_run(cfg, outdir)
    dataset, (_, val_split, test_split), _, _ = build_dataset(cfg)
    ks = [int(k) for k in cfg.metrics.get("ks", [10])]
    names = args.models or sorted(cfg.models)

    per_model: dict[str, dict] = {}
    test_tables: dict[tuple[str, int], object] = {}
    for name in names:
        rows = []
        for trial in range(cfg.trials):
            model = _load_trained(outdir, name, trial)
            val_table = rank_table_for_model(model, val_split, dataset.users, "validation")
            test_table = rank_table_for_model(model, test_split, dataset.users, "test")
            test_tables[(name, trial)] = test_table
            for table in (val_table, test_table):
                _write_rank_table(
                    table,
                    outdir / "reports" / "ranks"
                    / f"{name}_trial{trial}_{table.split_kind}.csv",
                )
            rows.append({
                "trial": trial,
                "validation": _metric_block(val_table, ks),
                "test": _metric_block(test_table, ks),
            })
        mean = {
            split: {
                key: float(np.mean([r[split][key] for r in rows]))
                for key in rows[0][split]
            }
            for split in ("validation", "test")
        }
        per_model[name] = {"trials": rows, "mean": mean}
        print(f"{name}: test " + "  ".join(
            f"{key}={val:.4f}" for key, val in mean["test"].items()
        ))

    report = {"k_values": ks, "n_trials": cfg.trials, "models": per_model}
    write_json(report, outdir / "reports" / "metrics.json")
    lines = [f"{'model':<16}" + "".join(f"{f'R@{k}':>10}{f'NDCG@{k}':>10}" for k in ks)]
    for name in names:
        mean_test = per_model[name]["mean"]["test"]
        lines.append(f"{name:<16}" + "".join(
            f"{mean_test[f'recall@{k}']:>10.4f}{mean_test[f'ndcg@{k}']:>10.4f}"
            for k in ks
        ))
    (outdir / "reports" / "metrics.txt").write_text("\n".join(lines) + "\n")

    if args.pairs:
        _evaluate_pairs(cfg, outdir, names, test_tables, k=ks[0])
    _log_line(outdir, f"evaluate: {len(names)} models x {cfg.trials} trials")
    return EXIT_OK


def _evaluate_pairs(cfg, outdir, names, test_tables, k):
    pairs = [tuple(p) for p in cfg.metrics.get("pairs", [])] or [
        p for p in FULL_PAIR_PRESET if p[0] in names and p[1] in names
    ]
    if not pairs:
        raise ConfigError("no evaluable model pairs; configure metrics.pairs")
    universe = frozenset(test_tables[(names[0], 0)].user_ids)
    reports = []
    for a, b in pairs:
        per_trial = []
        sig_inputs = {"hit": ([], []), "ndcg": ([], [])}
        for trial in range(cfg.trials):
            ta, tb = test_tables[(a, trial)], test_tables[(b, trial)]
            per_trial.append(
                complementarity(correct_set(ta, k), correct_set(tb, k), universe)
            )
            sig_inputs["hit"][0].append(per_user_hit(ta, k))
            sig_inputs["hit"][1].append(per_user_hit(tb, k))
            sig_inputs["ndcg"][0].append(per_user_ndcg(ta, k))
            sig_inputs["ndcg"][1].append(per_user_ndcg(tb, k))
        rep = pair_report(per_trial, (a, b))
        for metric, (va, vb) in sig_inputs.items():
            sig = significance(np.concatenate(va), np.concatenate(vb))
            rep[f"significance_{metric}"] = {
                "t_statistic": sig.t_statistic,
                "p_value": sig.p_value,
                "degenerate_variance": sig.degenerate_variance,
                "significant_p<0.05": bool(sig.p_value < 0.05),
            }
        reports.append(rep)
    write_json({"k": k, "pairs": reports}, outdir / "reports" / "pairs.json")
    (outdir / "reports" / "pairs.txt").write_text(format_pair_table(reports) + "\n")
    print(format_pair_table(reports))


def _ensemble_pair(cfg) -> tuple[str, str]:
    pair = cfg.ensemble.get("pair") or cfg.sweep.get("pair") or ["id_only", "text_only"]
    if len(pair) != 2:
        raise ConfigError("ensemble.pair must name exactly two models")
    for name in pair:
        if name not in cfg.models:
            raise ConfigError(f"ensemble pair names unknown model {name!r}")
    return tuple(pair)


def cmd_ensemble(args) -> int:
    cfg = build_experiment_config(args)
    outdir = resolve_outdir(cfg)
    snapshot_run(cfg, outdir)
    dataset, (_, _, test_split), _, _ = build_dataset(cfg)
    a, b = _ensemble_pair(cfg)
    k = int(cfg.metrics.get("ks", [10])[0])
    targets = np.asarray(test_split.targets)

    rows = []
    for trial in range(cfg.trials):
        ma = _load_trained(outdir, a, trial)
        mb = _load_trained(outdir, b, trial)
        s_a = score_split(ma, test_split).astype(np.float64)
        s_b = score_split(mb, test_split).astype(np.float64)
        r_a = ranks_of_targets(s_a, targets)
        r_b = ranks_of_targets(s_b, targets)
        r_ens = ranks_of_targets(s_a + s_b, targets)
        to_metrics = lambda r: {
            f"recall@{k}": float(np.mean(r <= k)),
            f"ndcg@{k}": float(np.mean(np.where(r <= k, 1.0 / np.log2(r + 1.0), 0.0))),
        }
        rows.append({
            "trial": trial,
            a: to_metrics(r_a),
            b: to_metrics(r_b),
            "ensemble": to_metrics(r_ens),
        })
    mean = {
        side: {
            key: float(np.mean([r[side][key] for r in rows]))
            for key in rows[0][side]
        }
        for side in (a, b, "ensemble")
    }
    payload = {"pair": [a, b], "k": k, "trials": rows, "mean": mean}
    write_json(payload, outdir / "reports" / "ensemble.json")
    print(f"ensemble({a}+{b}): " + "  ".join(
        f"{key}={val:.4f}" for key, val in mean["ensemble"].items()
    ))
    _log_line(outdir, f"ensemble: {a}+{b}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = build_experiment_config(args)
    outdir = resolve_outdir(cfg)
    snapshot_run(cfg, outdir)
    dataset, (train_split, val_split, test_split), _, _ = build_dataset(cfg)
    a, b = _ensemble_pair(cfg)
    trial = int(cfg.sweep.get("trial", 0))
    alpha_grid = cfg.sweep.get("alpha_grid", list(DEFAULT_ALPHA_GRID))
    tau_grid = cfg.sweep.get("log10_tau_grid", list(DEFAULT_LOG10_TAU_GRID))

    ma = _load_trained(outdir, a, trial)
    mb = _load_trained(outdir, b, trial)
    train_last = ds_mod.last_train_pairs(train_split)
    splits = {}
    for split in (train_last, val_split, test_split):
        splits[split.split_kind] = (
            score_split(ma, split).astype(np.float64),
            score_split(mb, split).astype(np.float64),
            np.asarray(split.targets),
        )
    result = sweep(SweepInputs(splits), alpha_grid, tau_grid,
                   k=int(cfg.metrics.get("ks", [10])[0]))
    write_sweep_csv(result, outdir / "reports" / "sweep.csv")
    summary = result.summary()
    summary["pair"] = [a, b]
    summary["trial"] = trial
    summary["reference_test_recall"] = result.recall_at(
        "test", ENSREC_REFERENCE[0], ENSREC_REFERENCE[1]
    )
    write_json(summary, outdir / "reports" / "sweep.json")
    for split, (alpha, lt) in result.argmax.items():
        print(f"{split}: argmax alpha={alpha:g} log10_tau={lt:g} "
              f"-> test recall {result.summary()['selected_test_recall'][split]:.4f}")
    _log_line(outdir, f"sweep: {a}+{b} trial {trial}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="experiment config file (JSON or TOML)")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--seed", type=int, help="global seed override")
    parser.add_argument("--trials", type=int, help="number of trials override")
    parser.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="dotted config override, e.g. train.max_epochs=5")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seqblend",
        description="Train ID- and text-based sequential recommenders, "
                    "measure their complementarity, and blend their scores.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="filter and split an interaction file")
    p.add_argument("--input", help="raw interaction file (tsv/csv/jsonl)")
    p.add_argument("--format", choices=["tsv", "csv", "jsonl"])
    p.add_argument("--core-k", type=int, default=ds_mod.DEFAULT_CORE_K)
    _add_common(p)
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    _add_common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train configured models over trials")
    p.add_argument("--models", nargs="*", help="subset of model names")
    p.add_argument("--resume", action="store_true",
                   help="continue from saved training state")
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="metrics and complementarity reports")
    p.add_argument("--models", nargs="*", help="subset of model names")
    p.add_argument("--pairs", action="store_true",
                   help="also produce pairwise complementarity reports")
    _add_common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ensemble", help="score-sum ensemble of a model pair")
    _add_common(p)
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("sweep", help="(alpha, log10 tau) ensemble grid sweep")
    _add_common(p)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except SeqblendError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
