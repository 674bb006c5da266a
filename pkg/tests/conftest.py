"""Shared fixtures, most importantly the pinned synthetic experiment.

The pinned experiment (default synthetic dataset, desk-scale encoders,
fixed seeds) backs several slow assertions, so it is trained once per
session and shared.  BLAS pools are capped at one thread: the tiny GEMMs
here lose more to handoff than they gain from parallelism.
"""

import numpy as np
import pytest
import threadpoolctl

_BLAS_LIMIT = threadpoolctl.threadpool_limits(limits=1)

import seqblend as sb
from seqblend.retrieval import rank_table_for_model, score_split

PINNED_MAX_SEQ_LEN = 12
PINNED_TRAIN = dict(learning_rate=0.005, batch_size=256, patience=6, eval_every=1)
PINNED_EPOCHS = {"id_table": 20, "frozen_text": 30}


@pytest.fixture(scope="session")
def pinned_experiment():
    """Train ID-Only, ID-Only (reseeded), and Text-Only on synth defaults."""
    cfg = sb.SynthConfig()
    dataset, text_emb, provenance = sb.generate(cfg)
    train, val, test = sb.leave_one_out_split(dataset, PINNED_MAX_SEQ_LEN)
    encoder = sb.EncoderConfig(max_seq_len=PINNED_MAX_SEQ_LEN)

    def fit(embedder, text, model_seed, train_seed, epochs):
        model = sb.SRModel(embedder, encoder, dataset.n_items,
                           text_matrix=text, seed=model_seed)
        config = sb.TrainConfig(max_epochs=epochs, seed=train_seed, **PINNED_TRAIN)
        return sb.train(model, train, val, config, user_ids=dataset.users)

    id_cfg = sb.EmbedderConfig(source="id_table")
    text_cfg = sb.EmbedderConfig(source="frozen_text", projection="linear")
    res_id = fit(id_cfg, None, 1, 101, PINNED_EPOCHS["id_table"])
    res_id2 = fit(id_cfg, None, 2, 202, PINNED_EPOCHS["id_table"])
    res_text = fit(text_cfg, text_emb.rows, 1, 101, PINNED_EPOCHS["frozen_text"])

    tables = {
        name: rank_table_for_model(res.model, test, dataset.users, "test")
        for name, res in (("id", res_id), ("id2", res_id2), ("text", res_text))
    }
    scores = {
        "id": score_split(res_id.model, test).astype(np.float64),
        "text": score_split(res_text.model, test).astype(np.float64),
    }
    return {
        "config": cfg,
        "dataset": dataset,
        "text_emb": text_emb,
        "provenance": provenance,
        "splits": (train, val, test),
        "results": {"id": res_id, "id2": res_id2, "text": res_text},
        "test_tables": tables,
        "test_scores": scores,
    }
