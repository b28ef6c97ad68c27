"""Run a transformer checkpoint over a dataset and store per-token embeddings."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np
import torch
from transformers import AutoModel, AutoTokenizer

from .corpus_csv import iter_documents, read_ids
from .store_io import EmbsWriter


@dataclass(frozen=True)
class ExportJob:
    checkpoint: str
    dataset_dir: str
    out_path: str
    positions: int = 60
    precision: str = "f32"
    batch_size: int = 32
    device: str = "cpu"
    model_tag: str = ""  # defaults to the checkpoint name


def _batched(items: Iterable, size: int) -> Iterator[list]:
    batch: list = []
    for item in items:
        batch.append(item)
        if len(batch) == size:
            yield batch
            batch = []
    if batch:
        yield batch


def export_embeddings(job: ExportJob) -> dict:
    """Encode every document and write the store; returns a summary dict.

    Documents are tokenized with padding/truncation to ``job.positions``
    tokens and encoded batch by batch; each batch is flushed to disk
    immediately, so memory stays flat regardless of corpus size.
    """
    tokenizer = AutoTokenizer.from_pretrained(job.checkpoint)
    model = AutoModel.from_pretrained(job.checkpoint)
    model.to(job.device)
    model.eval()
    hidden_size = int(model.config.hidden_size)

    doc_ids = read_ids(job.dataset_dir)
    tag = job.model_tag or Path(str(job.checkpoint)).name
    with EmbsWriter(
        job.out_path,
        doc_ids,
        positions=job.positions,
        hidden_size=hidden_size,
        precision=job.precision,
        model_tag=tag,
    ) as writer:
        texts = (text for _, text, _ in iter_documents(job.dataset_dir))
        for batch in _batched(texts, job.batch_size):
            encoded = tokenizer(
                batch,
                padding="max_length",
                truncation=True,
                max_length=job.positions,
                return_tensors="pt",
            ).to(job.device)
            with torch.no_grad():
                hidden = model(**encoded).last_hidden_state
            writer.append_batch(hidden.cpu().to(torch.float32).numpy())
    return {
        "out": str(job.out_path),
        "count": len(doc_ids),
        "positions": job.positions,
        "hidden_size": hidden_size,
        "precision": job.precision,
        "model_tag": tag,
        "clamped": writer.clamped,
    }


def encode_texts(checkpoint: str, texts: list[str], positions: int = 60, device: str = "cpu") -> np.ndarray:
    """In-memory reference encoding used by validation tests: (n, T, H) float32."""
    tokenizer = AutoTokenizer.from_pretrained(checkpoint)
    model = AutoModel.from_pretrained(checkpoint)
    model.to(device)
    model.eval()
    encoded = tokenizer(texts, padding="max_length", truncation=True, max_length=positions, return_tensors="pt")
    with torch.no_grad():
        hidden = model(**encoded.to(device)).last_hidden_state
    return hidden.cpu().to(torch.float32).numpy()
