"""File-backed store of per-document token-embedding matrices.

Binary layout (all integers little-endian):

    magic  b"EMBS"                      4 bytes
    version u8 = 1
    precision u8                        0 = f32, 1 = f16
    T u32, H u32                        matrix shape, shared by every entry
    count u64                           number of matrices
    model tag: u16 length + UTF-8 bytes
    index: count x (u16 id length + UTF-8 id + u64 absolute file offset)
    payload: count x T*H little-endian values

Matrices are fixed-size, so offsets are precomputable and the writer can
stream the payload without buffering the whole dataset.  Readers mmap the
file: concurrent reads need no locking and matrices load lazily.
"""
from __future__ import annotations

import mmap
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import CorruptStore, ShapeError, UnknownDocument

MAGIC = b"EMBS"
VERSION = 1
F16_MAX = 65504.0

_PRECISION_CODE = {"f32": 0, "f16": 1}
_PRECISION_NAME = {0: "f32", 1: "f16"}
_DTYPE = {"f32": np.dtype("<f4"), "f16": np.dtype("<f2")}


def to_f16(values: np.ndarray) -> tuple[np.ndarray, int]:
    """Convert to IEEE-754 binary16 with round-to-nearest-even.

    Values outside the f16 normal range clamp to +/-65504; the second return
    value counts how many were clamped (clamping is reported, never fatal).
    """
    arr = np.asarray(values, dtype=np.float32)
    over = np.abs(arr) > F16_MAX
    n_clamped = int(np.count_nonzero(over))
    if n_clamped:
        arr = np.clip(arr, -F16_MAX, F16_MAX)
    return arr.astype(np.float16), n_clamped


def to_f32(values: np.ndarray) -> np.ndarray:
    """Widen binary16 values back to f32 (exact)."""
    return np.asarray(values, dtype=np.float16).astype(np.float32)


@dataclass(frozen=True)
class TokenEmbeddingMatrix:
    """T x H matrix of per-token output embeddings for one document."""

    doc_id: str
    data: np.ndarray
    precision: str = "f32"

    @property
    def positions(self) -> int:
        return int(self.data.shape[0])

    @property
    def hidden_size(self) -> int:
        return int(self.data.shape[1])

    def as_f32(self) -> np.ndarray:
        return self.data.astype(np.float32) if self.data.dtype != np.float32 else self.data


def _header_bytes(precision: str, positions: int, hidden: int, count: int, model_tag: str) -> bytes:
    tag = model_tag.encode("utf-8")
    return (
        MAGIC
        + struct.pack("<BB", VERSION, _PRECISION_CODE[precision])
        + struct.pack("<IIQ", positions, hidden, count)
        + struct.pack("<H", len(tag))
        + tag
    )


class StoreWriter:
    """Write-once store builder; call append() once per id, in order."""

    def __init__(
        self,
        path: str | Path,
        doc_ids: Sequence[str],
        positions: int,
        hidden_size: int,
        precision: str = "f32",
        model_tag: str = "",
    ):
        if precision not in _PRECISION_CODE:
            raise ValueError(f"precision must be 'f32' or 'f16', got {precision!r}")
        self.path = Path(path)
        self.doc_ids = [str(d) for d in doc_ids]
        self.positions = int(positions)
        self.hidden_size = int(hidden_size)
        self.precision = precision
        self.model_tag = model_tag
        self.clamped = 0
        self._written = 0

        header = _header_bytes(precision, self.positions, self.hidden_size, len(self.doc_ids), model_tag)
        index = bytearray()
        id_bytes = [d.encode("utf-8") for d in self.doc_ids]
        index_size = sum(2 + len(b) + 8 for b in id_bytes)
        base = len(header) + index_size
        self._matrix_bytes = self.positions * self.hidden_size * _DTYPE[precision].itemsize
        for i, b in enumerate(id_bytes):
            index += struct.pack("<H", len(b)) + b + struct.pack("<Q", base + i * self._matrix_bytes)
        self._fh = open(self.path, "wb")
        self._fh.write(header)
        self._fh.write(bytes(index))

    def append(self, matrix: np.ndarray) -> None:
        data = np.asarray(matrix)
        if data.shape != (self.positions, self.hidden_size):
            raise ShapeError(
                f"matrix shape {data.shape} does not match store shape "
                f"({self.positions}, {self.hidden_size})"
            )
        if self._written >= len(self.doc_ids):
            raise ValueError("more matrices appended than declared doc ids")
        if self.precision == "f16":
            half, n = to_f16(data)
            self.clamped += n
            self._fh.write(half.astype(_DTYPE["f16"]).tobytes(order="C"))
        else:
            self._fh.write(data.astype(_DTYPE["f32"]).tobytes(order="C"))
        self._written += 1

    def close(self) -> None:
        self._fh.close()
        if self._written != len(self.doc_ids):
            raise ValueError(f"declared {len(self.doc_ids)} matrices but appended {self._written}")

    def __enter__(self) -> "StoreWriter":
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        if exc_type is None:
            self.close()
        else:
            self._fh.close()


def write_store(
    path: str | Path,
    doc_ids: Sequence[str],
    matrices: Iterable[np.ndarray],
    positions: int,
    hidden_size: int,
    precision: str = "f32",
    model_tag: str = "",
) -> int:
    """Write a complete store; returns the number of values clamped to the f16 range."""
    with StoreWriter(path, doc_ids, positions, hidden_size, precision, model_tag) as writer:
        for matrix in matrices:
            writer.append(matrix)
    return writer.clamped


class EmbeddingStore:
    """Read-only, mmap-backed view of a store file.

    Safe for concurrent readers; matrices are copied out of the map on access
    so they remain valid after close().
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        try:
            self._fh = open(self.path, "rb")
        except FileNotFoundError:
            raise
        try:
            self._mm = mmap.mmap(self._fh.fileno(), 0, access=mmap.ACCESS_READ)
        except ValueError:  # zero-length file
            self._fh.close()
            raise CorruptStore(f"{self.path}: empty file") from None
        try:
            self._parse_header()
        except CorruptStore:
            self.close()
            raise

    def _parse_header(self) -> None:
        mm = self._mm
        if len(mm) < 24 or mm[:4] != MAGIC:
            raise CorruptStore(f"{self.path}: bad magic, not an EMBS store")
        version, precision_code = struct.unpack_from("<BB", mm, 4)
        if version != VERSION:
            raise CorruptStore(f"{self.path}: unsupported version {version}")
        if precision_code not in _PRECISION_NAME:
            raise CorruptStore(f"{self.path}: unknown precision code {precision_code}")
        self.precision = _PRECISION_NAME[precision_code]
        self.positions, self.hidden_size, count = struct.unpack_from("<IIQ", mm, 6)
        self.count = int(count)
        (tag_len,) = struct.unpack_from("<H", mm, 22)
        pos = 24
        if pos + tag_len > len(mm):
            raise CorruptStore(f"{self.path}: truncated model tag")
        self.model_tag = mm[pos : pos + tag_len].decode("utf-8")
        pos += tag_len

        self.doc_ids: list[str] = []
        self._offsets: dict[str, int] = {}
        for _ in range(self.count):
            if pos + 2 > len(mm):
                raise CorruptStore(f"{self.path}: truncated index")
            (id_len,) = struct.unpack_from("<H", mm, pos)
            pos += 2
            if pos + id_len + 8 > len(mm):
                raise CorruptStore(f"{self.path}: truncated index")
            doc_id = mm[pos : pos + id_len].decode("utf-8")
            pos += id_len
            (offset,) = struct.unpack_from("<Q", mm, pos)
            pos += 8
            self.doc_ids.append(doc_id)
            self._offsets[doc_id] = int(offset)

        self._matrix_bytes = self.positions * self.hidden_size * _DTYPE[self.precision].itemsize
        expected = pos + self.count * self._matrix_bytes
        if len(mm) != expected:
            raise CorruptStore(f"{self.path}: payload size {len(mm) - pos} does not match header (expected {expected - pos})")
        for doc_id, offset in self._offsets.items():
            if offset + self._matrix_bytes > len(mm):
                raise CorruptStore(f"{self.path}: offset for {doc_id!r} runs past end of file")

    def get(self, doc_id: str) -> TokenEmbeddingMatrix:
        offset = self._offsets.get(doc_id)
        if offset is None:
            raise UnknownDocument(doc_id)
        flat = np.frombuffer(
            self._mm, dtype=_DTYPE[self.precision], count=self.positions * self.hidden_size, offset=offset
        )
        data = flat.reshape(self.positions, self.hidden_size).copy()
        return TokenEmbeddingMatrix(doc_id=doc_id, data=data, precision=self.precision)

    def matrices(self) -> Iterator[TokenEmbeddingMatrix]:
        for doc_id in self.doc_ids:
            yield self.get(doc_id)

    def __len__(self) -> int:
        return self.count

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self._offsets

    def close(self) -> None:
        if getattr(self, "_mm", None) is not None:
            self._mm.close()
            self._mm = None  # type: ignore[assignment]
        if getattr(self, "_fh", None) is not None:
            self._fh.close()
            self._fh = None  # type: ignore[assignment]

    def __enter__(self) -> "EmbeddingStore":
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        self.close()


def open_store(path: str | Path) -> EmbeddingStore:
    """Open a store for lazy reading; raises CorruptStore on format violations."""
    return EmbeddingStore(path)


def inspect_store(path: str | Path) -> dict:
    """Header summary plus format warnings (empty warnings = fully valid)."""
    warnings: list[str] = []
    with open_store(path) as store:
        if len(set(store.doc_ids)) != len(store.doc_ids):
            warnings.append("duplicate document ids in index")
        return {
            "path": str(path),
            "version": VERSION,
            "precision": store.precision,
            "positions": store.positions,
            "hidden_size": store.hidden_size,
            "count": store.count,
            "model_tag": store.model_tag,
            "warnings": warnings,
        }
