"""Deterministic stand-in encoder for desk-scale experiments.

Each output value is a counter-based pseudo-random function of
(seed, token id, position, channel) built from the splitmix64 finalizer,
so matrices are bit-identical across runs and platforms -- no global RNG
state, no torch dependency.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import LabeledDataset, tokenize_words
from .store import StoreWriter, TokenEmbeddingMatrix

PAD_ID = 0

_MASK = 0xFFFFFFFFFFFFFFFF
_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_C_TOKEN = np.uint64(0xD6E8FEB86659FD93)
_C_POSITION = np.uint64(0xA5A3B31C9E3779B1)
_C_CHANNEL = np.uint64(0xC2B2AE3D27D4EB4F)


@dataclass(frozen=True)
class ToyEncoderConfig:
    """Same config => bit-identical outputs."""

    seed: int
    hidden_size: int = 16
    positions: int = 60


def _mix64(x: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer; uint64 arithmetic wraps, which is what we want
    x = x ^ (x >> np.uint64(30))
    x = x * np.uint64(0xBF58476D1CE4E5B9)
    x = x ^ (x >> np.uint64(27))
    x = x * np.uint64(0x94D049BB133111EB)
    x = x ^ (x >> np.uint64(31))
    return x


def _mix64_scalar(x: int) -> int:
    # same finalizer on a Python int, avoiding numpy's scalar-overflow warning
    x &= _MASK
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & _MASK
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & _MASK
    x ^= x >> 31
    return x


def toy_encode(token_ids: Sequence[int], config: ToyEncoderConfig, doc_id: str = "") -> TokenEmbeddingMatrix:
    """Encode a token-id sequence to a positions x hidden matrix in [-1, 1].

    Inputs longer than ``config.positions`` are truncated; shorter inputs are
    padded with PAD_ID (0).  Pure function of (token_ids, config).
    """
    t, h = config.positions, config.hidden_size
    ids = list(token_ids)[:t] + [PAD_ID] * max(0, t - len(token_ids))
    tok = np.asarray([i & _MASK for i in ids], dtype=np.uint64).reshape(t, 1)
    pos = np.arange(t, dtype=np.uint64).reshape(t, 1)
    chan = np.arange(h, dtype=np.uint64).reshape(1, h)

    state = np.uint64(_mix64_scalar((config.seed & _MASK) ^ int(_GAMMA)))
    with np.errstate(over="ignore"):
        x = _mix64(state ^ (tok * _C_TOKEN))
        x = _mix64(x ^ (pos * _C_POSITION))
        x = _mix64(x ^ (chan * _C_CHANNEL))
    unit = (x >> np.uint64(11)).astype(np.float64) * 2.0**-53  # [0, 1)
    data = (2.0 * unit - 1.0).astype(np.float32)
    return TokenEmbeddingMatrix(doc_id=doc_id, data=data, precision="f32")


def toy_token_ids(text: str, vocab_size: int = 4096) -> list[int]:
    """Map word tokens to stable ids in 1..vocab_size-1 (0 is reserved for PAD)."""
    ids = []
    for token in tokenize_words(text):
        digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
        ids.append(int.from_bytes(digest, "little") % (vocab_size - 1) + 1)
    return ids


def build_toy_store(
    dataset: LabeledDataset,
    config: ToyEncoderConfig,
    path: str | Path,
    precision: str = "f32",
    vocab_size: int = 4096,
) -> int:
    """Encode every document of a dataset into a store file; returns the count."""
    docs = dataset.documents
    tag = f"toy:seed={config.seed}"
    with StoreWriter(
        path,
        [d.id for d in docs],
        positions=config.positions,
        hidden_size=config.hidden_size,
        precision=precision,
        model_tag=tag,
    ) as writer:
        for doc in docs:
            writer.append(toy_encode(toy_token_ids(doc.text, vocab_size), config, doc_id=doc.id).data)
    return len(docs)
