"""Train an ID-embedding model and a frozen-text model on the same data.

Both share the same small transformer encoder; they differ only in where
item vectors come from: a trainable lookup table versus a frozen text
matrix behind a trainable projection.  Training is full-catalog InfoNCE
with early stopping on validation Recall@10.
"""

import threadpoolctl

threadpoolctl.threadpool_limits(limits=1)  # tiny GEMMs: avoid thread handoff

import seqblend as sb
from seqblend.metrics import recall_at_k
from seqblend.retrieval import rank_table_for_model

config = sb.SynthConfig(n_users=400, n_items=150, n_clusters=30, seed=11)
dataset, text_embeddings, _ = sb.generate(config)
train_split, val_split, test_split = sb.leave_one_out_split(dataset, max_seq_len=10)

encoder = sb.EncoderConfig(n_layers=2, n_heads=2, d_model=32, d_ff=64,
                           d_kv=16, max_seq_len=10)
train_config = sb.TrainConfig(learning_rate=0.005, max_epochs=10, patience=4,
                              seed=123)

id_model = sb.SRModel(
    sb.EmbedderConfig(source="id_table", d_model=32),
    encoder, dataset.n_items, seed=1,
)
text_model = sb.SRModel(
    sb.EmbedderConfig(source="frozen_text", d_model=32, projection="linear"),
    encoder, dataset.n_items, text_matrix=text_embeddings.rows, seed=1,
)

for name, model in (("id-only", id_model), ("text-only", text_model)):
    result = sb.train(model, train_split, val_split, train_config,
                      user_ids=dataset.users)
    print(f"\n{name}: stopped after epoch {result.history[-1]['epoch']}, "
          f"best epoch {result.best_epoch} "
          f"(val recall@10 {result.best_val_recall:.3f})")
    for row in result.history[:3]:
        print(f"  epoch {row['epoch']}: loss {row['loss']:.3f} "
              f"val recall@10 {row['val_recall@10']:.3f}")
    table = rank_table_for_model(result.model, test_split, dataset.users, "test")
    print(f"  test recall@10 {recall_at_k(table, 10):.3f}  "
          f"chance level {10 / dataset.n_items:.3f}")
