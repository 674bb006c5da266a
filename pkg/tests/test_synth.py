import io
import json

import numpy as np
import pytest

import seqblend as sb
from seqblend import ConfigError, SynthConfig, generate
from seqblend.synth import (
    LABEL_COLLABORATIVE,
    LABEL_SEMANTIC,
    dataset_interactions,
    read_provenance,
    write_provenance,
)


def serialize(dataset, emb, prov):
    buf = io.BytesIO()
    buf.write(json.dumps({
        "users": dataset.users, "items": dataset.items,
        "sequences": dataset.sequences, "prov": prov,
    }, sort_keys=True, default=list).encode())
    buf.write(emb.rows.tobytes())
    return buf.getvalue()


def test_determinism_bitwise():
    cfg = SynthConfig(n_users=120, n_items=50, n_clusters=10, seed=42)
    a = serialize(*generate(cfg))
    b = serialize(*generate(cfg))
    assert a == b


def test_different_seed_differs():
    a = serialize(*generate(SynthConfig(n_users=60, n_items=50, n_clusters=10, seed=1)))
    b = serialize(*generate(SynthConfig(n_users=60, n_items=50, n_clusters=10, seed=2)))
    assert a != b


def test_sequence_lengths_and_indices():
    cfg = SynthConfig(n_users=150, n_items=70, n_clusters=7,
                      seq_len_range=(5, 9), seed=3)
    ds, emb, prov = generate(cfg)
    assert ds.n_users == 150 and ds.n_items == 70
    for seq in ds.sequences:
        assert 5 <= len(seq) <= 9
        assert all(0 <= i < 70 for i in seq)
    assert emb.rows.shape == (70, cfg.d_sem)
    assert set(prov.values()) <= {LABEL_SEMANTIC, LABEL_COLLABORATIVE}


def test_all_collaborative_when_p_zero():
    ds, emb, prov = generate(SynthConfig(n_users=50, n_items=40, n_clusters=8,
                                         p_semantic_user=0.0, seed=5))
    assert set(prov.values()) == {LABEL_COLLABORATIVE}


def test_text_embeddings_unit_norm():
    ds, emb, prov = generate(SynthConfig(n_users=30, n_items=40, n_clusters=8, seed=6))
    norms = np.linalg.norm(emb.rows, axis=1)
    np.testing.assert_allclose(norms, 1.0, atol=1e-4)


def test_config_validation():
    with pytest.raises(ConfigError):
        SynthConfig(n_items=10, n_clusters=11)
    with pytest.raises(ConfigError):
        SynthConfig(seq_len_range=(9, 5))
    with pytest.raises(ConfigError):
        SynthConfig(noise=1.5)
    with pytest.raises(ConfigError):
        SynthConfig(collab_graph_degree=0)
    with pytest.raises(ConfigError):
        SynthConfig(text_noise_sigma=-0.1)


def test_provenance_roundtrip(tmp_path):
    ds, emb, prov = generate(SynthConfig(n_users=25, n_items=30, n_clusters=6, seed=7))
    path = tmp_path / "prov.jsonl"
    write_provenance(prov, path)
    assert read_provenance(path) == prov


def test_dataset_interactions_flatten():
    ds, emb, prov = generate(SynthConfig(n_users=10, n_items=20, n_clusters=5, seed=8))
    recs = dataset_interactions(ds)
    assert len(recs) == ds.n_interactions
    # grouping them back reproduces the sequences (as item ids; the dense
    # indices are reassigned by first appearance)
    back = sb.core_filter(recs, k=1)
    assert back.users == ds.users
    orig = [tuple(ds.items[i] for i in seq) for seq in ds.sequences]
    rebuilt = [tuple(back.items[i] for i in seq) for seq in back.sequences]
    assert rebuilt == orig


def test_uniform_noise_gives_chance_recall():
    """noise=1: transitions are uniform, so any model scores ~10/n_items."""
    cfg = SynthConfig(n_users=300, n_items=100, n_clusters=10, d_sem=8,
                      seq_len_range=(6, 10), noise=1.0, seed=9)
    ds, emb, prov = generate(cfg)
    tr, va, te = sb.leave_one_out_split(ds, max_seq_len=8)
    enc = sb.EncoderConfig(n_layers=1, n_heads=2, d_model=16, d_ff=24, d_kv=8,
                           max_seq_len=8)
    m = sb.SRModel(sb.EmbedderConfig(source="id_table", d_model=16), enc,
                   ds.n_items, seed=0)
    res = sb.train(m, tr, va, sb.TrainConfig(max_epochs=3, seed=1), ds.users)
    from seqblend.metrics import recall_at_k
    from seqblend.retrieval import rank_table_for_model
    table = rank_table_for_model(res.model, te, ds.users, "test")
    recall = recall_at_k(table, 10)
    p = 10.0 / ds.n_items
    se = np.sqrt(p * (1 - p) / ds.n_users)
    assert abs(recall - p) <= 3 * se
