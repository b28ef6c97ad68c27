"""Sequence-classification fine-tuning with the grid-search recipe.

A linear classification head sits on the CLS position; training uses AdamW
with a slanted triangular learning rate (warm-up fraction 0.1, linear decay
to zero) for at most 4 epochs, and the winning (learning rate, dropout,
epoch) combination is the one with the lowest validation log-loss, ties
broken toward lower learning rate, then lower dropout, then fewer epochs.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from torch.nn.functional import cross_entropy
from transformers import AutoModelForSequenceClassification, AutoTokenizer

from .corpus_csv import iter_split

WARMUP_FRACTION = 0.1


@dataclass(frozen=True)
class Candidate:
    """One grid point: base learning rate, dropout rate, epoch budget."""

    lr: float
    dropout: float
    max_epochs: int = 4


SEARCH_GRID = tuple(Candidate(lr, dr, 4) for lr in (2.5e-5, 5e-5) for dr in (0.0, 0.10))

# best-known single-candidate defaults per encoder family
PRESETS: dict[str, tuple[Candidate, ...]] = {
    "grid": SEARCH_GRID,
    "language-specific": (Candidate(2.5e-5, 0.10, 1),),
    "multilingual": (Candidate(2.5e-5, 0.0, 2),),
}


def stlr_factor(step: int, total_steps: int, warmup_fraction: float = WARMUP_FRACTION) -> float:
    """Triangular multiplier in [0, 1]: peak 1.0 at the end of warm-up."""
    w = math.ceil(warmup_fraction * total_steps)
    if step <= w:
        return step / w
    return (total_steps - step) / (total_steps - w)


def _load_split(dataset_dir, split, limit=None):
    texts, labels = [], []
    for _, text, label in iter_split(dataset_dir, split):
        texts.append(text)
        labels.append(label)
        if limit is not None and len(texts) >= limit:
            break
    return texts, labels


def _valid_log_loss(model, tokenizer, texts, labels, positions, batch_size, device) -> float:
    model.eval()
    total = 0.0
    n = 0
    with torch.no_grad():
        for start in range(0, len(texts), batch_size):
            chunk = texts[start : start + batch_size]
            target = torch.tensor(labels[start : start + batch_size], device=device)
            encoded = tokenizer(
                chunk, padding="max_length", truncation=True, max_length=positions, return_tensors="pt"
            ).to(device)
            logits = model(**encoded).logits
            total += float(cross_entropy(logits, target, reduction="sum"))
            n += len(chunk)
    return total / n


@dataclass(frozen=True)
class FinetuneJob:
    checkpoint: str
    dataset_dir: str
    out_dir: str
    preset: str = "grid"
    positions: int = 60
    batch_size: int = 16
    seed: int = 0
    device: str = "cpu"
    limit_train: "int | None" = None  # desk-scale smoke runs
    limit_valid: "int | None" = None


def finetune(job: FinetuneJob) -> dict:
    """Run the candidate grid and save the best checkpoint to ``job.out_dir``.

    Returns a summary with the per-candidate, per-epoch validation losses and
    the selected combination.
    """
    if job.preset not in PRESETS:
        raise ValueError(f"unknown preset {job.preset!r}; expected one of {sorted(PRESETS)}")
    candidates = PRESETS[job.preset]
    tokenizer = AutoTokenizer.from_pretrained(job.checkpoint)
    train_texts, train_labels = _load_split(job.dataset_dir, "train", job.limit_train)
    valid_texts, valid_labels = _load_split(job.dataset_dir, "valid", job.limit_valid)

    records = []
    best_key = None
    best_state = None
    best_info = None
    for candidate in candidates:
        torch.manual_seed(job.seed)
        model = AutoModelForSequenceClassification.from_pretrained(
            job.checkpoint,
            num_labels=2,
            hidden_dropout_prob=candidate.dropout,
            attention_probs_dropout_prob=candidate.dropout,
            classifier_dropout=candidate.dropout,
        )
        model.to(job.device)
        optimizer = torch.optim.AdamW(model.parameters(), lr=candidate.lr, weight_decay=0.01)
        n = len(train_texts)
        n_batches = math.ceil(n / job.batch_size)
        total_steps = candidate.max_epochs * n_batches
        generator = torch.Generator().manual_seed(job.seed)

        step = 0
        epoch_losses = []
        for epoch in range(1, candidate.max_epochs + 1):
            model.train()
            order = torch.randperm(n, generator=generator).tolist()
            for start in range(0, n, job.batch_size):
                batch_idx = order[start : start + job.batch_size]
                chunk = [train_texts[i] for i in batch_idx]
                target = torch.tensor([train_labels[i] for i in batch_idx], device=job.device)
                encoded = tokenizer(
                    chunk, padding="max_length", truncation=True, max_length=job.positions, return_tensors="pt"
                ).to(job.device)
                step += 1
                lr = candidate.lr * stlr_factor(step, total_steps)
                for group in optimizer.param_groups:
                    group["lr"] = lr
                optimizer.zero_grad()
                loss = model(**encoded, labels=target).loss
                loss.backward()
                optimizer.step()

            valid_loss = _valid_log_loss(
                model, tokenizer, valid_texts, valid_labels, job.positions, job.batch_size, job.device
            )
            epoch_losses.append(valid_loss)
            key = (valid_loss, candidate.lr, candidate.dropout, epoch)
            if best_key is None or key < best_key:
                best_key = key
                best_state = {k: v.detach().cpu().clone() for k, v in model.state_dict().items()}
                best_info = {"lr": candidate.lr, "dropout": candidate.dropout, "epoch": epoch, "valid_loss": valid_loss}
        records.append({"lr": candidate.lr, "dropout": candidate.dropout, "valid_losses": epoch_losses})

    out_dir = Path(job.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    final = AutoModelForSequenceClassification.from_pretrained(
        job.checkpoint,
        num_labels=2,
        hidden_dropout_prob=best_info["dropout"],
        attention_probs_dropout_prob=best_info["dropout"],
        classifier_dropout=best_info["dropout"],
    )
    final.load_state_dict(best_state)
    final.save_pretrained(out_dir)
    tokenizer.save_pretrained(out_dir)
    summary = {"selected": best_info, "candidates": records, "out_dir": str(out_dir)}
    (out_dir / "selection.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return summary
