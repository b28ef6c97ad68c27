"""Transformer-to-store bridge: embedding export and fine-tuning."""

from .export import ExportJob, encode_texts, export_embeddings
from .finetune import PRESETS, SEARCH_GRID, Candidate, FinetuneJob, finetune, stlr_factor
from .store_io import EmbsWriter, read_store

__all__ = [
    "Candidate",
    "EmbsWriter",
    "ExportJob",
    "FinetuneJob",
    "PRESETS",
    "SEARCH_GRID",
    "encode_texts",
    "export_embeddings",
    "finetune",
    "read_store",
    "stlr_factor",
]
