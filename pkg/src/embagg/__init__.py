"""Sentiment classification toolkit: TF-IDF and pooled token-embedding features,
a deterministic AdamW/STLR logistic head, and ROC-AUC ranking across datasets."""

from .corpus import (
    DatasetStats,
    Document,
    LabeledDataset,
    concat_datasets,
    load_dataset,
    summarize,
    tokenize_words,
)
from .linear import (
    FINETUNE_GRID,
    LinearHead,
    LogisticHead,
    StlrSchedule,
    TrainConfig,
    adamw_step,
    load_head,
    predict_proba,
    save_head,
    select_hyperparams,
    stlr_lr_at,
    train_head,
)
from .metrics import (
    CrossMatrix,
    EvalReport,
    RankingTable,
    average_rank,
    cross_matrix,
    evaluate_head,
    log_loss,
    roc_auc,
)
from .pooling import (
    AggregationStrategy,
    DocumentEmbedding,
    EmbeddingAggregator,
    aggregate,
    aggregate_batch,
    output_dim,
)
from .store import (
    EmbeddingStore,
    StoreWriter,
    TokenEmbeddingMatrix,
    inspect_store,
    open_store,
    to_f16,
    to_f32,
    write_store,
)
from .tfidf import SparseVector, TfidfVectorizer, Vocabulary, fit_vocabulary
from .toy_encoder import ToyEncoderConfig, build_toy_store, toy_encode

__version__ = "0.1.0"

__all__ = [
    "AggregationStrategy",
    "CrossMatrix",
    "DatasetStats",
    "Document",
    "DocumentEmbedding",
    "EmbeddingAggregator",
    "EmbeddingStore",
    "EvalReport",
    "FINETUNE_GRID",
    "LabeledDataset",
    "LinearHead",
    "LogisticHead",
    "RankingTable",
    "SparseVector",
    "StlrSchedule",
    "StoreWriter",
    "TfidfVectorizer",
    "TokenEmbeddingMatrix",
    "ToyEncoderConfig",
    "TrainConfig",
    "Vocabulary",
    "adamw_step",
    "aggregate",
    "aggregate_batch",
    "average_rank",
    "build_toy_store",
    "concat_datasets",
    "cross_matrix",
    "evaluate_head",
    "fit_vocabulary",
    "inspect_store",
    "load_dataset",
    "load_head",
    "log_loss",
    "open_store",
    "output_dim",
    "predict_proba",
    "roc_auc",
    "save_head",
    "select_hyperparams",
    "stlr_lr_at",
    "summarize",
    "to_f16",
    "to_f32",
    "tokenize_words",
    "toy_encode",
    "train_head",
    "write_store",
]
