"""Dense-retrieval sequential recommendation with ID/text score blending.

Train an ID-embedding model and a frozen-text model independently, measure
how complementary they are (Jaccard of correct-user sets, union "genie"
recall), and combine their scores at inference, either by plain summation
or with the generalized alpha/tau exponential family.
"""

from .dataset import (
    EmbeddingMatrix,
    Interaction,
    InteractionDataset,
    SplitView,
    core_filter,
    leave_one_out_split,
    load_interactions,
    read_embedding_matrix,
    write_embedding_matrix,
)
from .ensemble import (
    EnsembleParams,
    SweepInputs,
    SweepResult,
    ens_alpha_tau,
    ens_sum,
    sweep,
)
from .errors import (
    ConfigError,
    ContractError,
    DataError,
    FormatError,
    NumericalError,
    ParseError,
    SchemaError,
    SeqblendError,
)
from .metrics import (
    ComplementarityReport,
    CorrectSet,
    complementarity,
    correct_set,
    label_enrichment,
    ndcg_at_k,
    recall_at_k,
    significance,
)
from .model import (
    EmbedderConfig,
    EncoderConfig,
    SRModel,
    load_checkpoint,
    paper_scale_encoder,
    sasrec_style_encoder,
    save_checkpoint,
)
from .retrieval import (
    RankTable,
    ScoreVector,
    concat_ensemble_embeddings,
    rank_of,
    rank_table_for_model,
    score_catalog,
    score_split,
    top_k,
)
from .synth import SynthConfig, generate
from .trainer import TrainConfig, TrainResult, infonce_loss, train

__version__ = "0.1.0"

__all__ = [
    "ComplementarityReport",
    "ConfigError",
    "ContractError",
    "CorrectSet",
    "DataError",
    "EmbedderConfig",
    "EmbeddingMatrix",
    "EncoderConfig",
    "EnsembleParams",
    "FormatError",
    "Interaction",
    "InteractionDataset",
    "NumericalError",
    "ParseError",
    "RankTable",
    "SRModel",
    "SchemaError",
    "ScoreVector",
    "SeqblendError",
    "SplitView",
    "SweepInputs",
    "SweepResult",
    "SynthConfig",
    "TrainConfig",
    "TrainResult",
    "complementarity",
    "concat_ensemble_embeddings",
    "core_filter",
    "correct_set",
    "ens_alpha_tau",
    "ens_sum",
    "generate",
    "infonce_loss",
    "label_enrichment",
    "leave_one_out_split",
    "load_checkpoint",
    "load_interactions",
    "ndcg_at_k",
    "paper_scale_encoder",
    "rank_of",
    "rank_table_for_model",
    "read_embedding_matrix",
    "recall_at_k",
    "sasrec_style_encoder",
    "save_checkpoint",
    "score_catalog",
    "score_split",
    "significance",
    "sweep",
    "top_k",
    "train",
    "write_embedding_matrix",
]
