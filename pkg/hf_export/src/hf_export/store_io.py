"""Standalone EMBS store writer/reader.

Implements the binary layout documented in the main package's
docs/formats.md so exported files open bit-exactly in its reader; this module
deliberately shares no code with it.
"""
from __future__ import annotations

import struct
from pathlib import Path
from typing import Sequence

import numpy as np

MAGIC = b"EMBS"
VERSION = 1
F16_MAX = 65504.0

_PRECISION_CODE = {"f32": 0, "f16": 1}
_DTYPE = {"f32": np.dtype("<f4"), "f16": np.dtype("<f2")}


class EmbsWriter:
    """Streaming writer: header and index up front, payload appended in order."""

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
        self.positions = int(positions)
        self.hidden_size = int(hidden_size)
        self.precision = precision
        self.doc_ids = [str(d) for d in doc_ids]
        self.clamped = 0
        self._written = 0
        self._item = _DTYPE[precision].itemsize
        self._matrix_bytes = self.positions * self.hidden_size * self._item

        tag = model_tag.encode("utf-8")
        header = (
            MAGIC
            + struct.pack("<BB", VERSION, _PRECISION_CODE[precision])
            + struct.pack("<IIQ", self.positions, self.hidden_size, len(self.doc_ids))
            + struct.pack("<H", len(tag))
            + tag
        )
        ids = [d.encode("utf-8") for d in self.doc_ids]
        base = len(header) + sum(2 + len(b) + 8 for b in ids)
        index = bytearray()
        for i, b in enumerate(ids):
            index += struct.pack("<H", len(b)) + b + struct.pack("<Q", base + i * self._matrix_bytes)
        self._fh = open(path, "wb")
        self._fh.write(header)
        self._fh.write(bytes(index))

    def append_batch(self, matrices: np.ndarray) -> None:
        """Write a (batch, T, H) float array, converting to the store precision."""
        arr = np.asarray(matrices, dtype=np.float32)
        if arr.ndim == 2:
            arr = arr[None]
        if arr.shape[1:] != (self.positions, self.hidden_size):
            raise ValueError(
                f"batch shape {arr.shape[1:]} does not match store shape ({self.positions}, {self.hidden_size})"
            )
        if self.precision == "f16":
            over = np.abs(arr) > F16_MAX
            self.clamped += int(np.count_nonzero(over))
            arr = np.clip(arr, -F16_MAX, F16_MAX).astype(_DTYPE["f16"])
        else:
            arr = arr.astype(_DTYPE["f32"])
        self._fh.write(arr.tobytes(order="C"))
        self._written += arr.shape[0]

    def close(self) -> None:
        self._fh.close()
        if self._written != len(self.doc_ids):
            raise ValueError(f"declared {len(self.doc_ids)} matrices but wrote {self._written}")

    def __enter__(self) -> "EmbsWriter":
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        if exc_type is None:
            self.close()
        else:
            self._fh.close()


def read_store(path: str | Path) -> tuple[dict, dict[str, np.ndarray]]:
    """Load a whole store into memory; returns (header dict, id -> T x H array).

    Only used for validation and tests; large stores should be read with the
    main package's lazy reader.
    """
    blob = Path(path).read_bytes()
    if blob[:4] != MAGIC:
        raise ValueError(f"{path}: not an EMBS store")
    version, precision_code = struct.unpack_from("<BB", blob, 4)
    if version != VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    precision = {v: k for k, v in _PRECISION_CODE.items()}[precision_code]
    positions, hidden_size, count = struct.unpack_from("<IIQ", blob, 6)
    (tag_len,) = struct.unpack_from("<H", blob, 22)
    pos = 24
    model_tag = blob[pos : pos + tag_len].decode("utf-8")
    pos += tag_len
    offsets: dict[str, int] = {}
    for _ in range(count):
        (id_len,) = struct.unpack_from("<H", blob, pos)
        pos += 2
        doc_id = blob[pos : pos + id_len].decode("utf-8")
        pos += id_len
        (offset,) = struct.unpack_from("<Q", blob, pos)
        pos += 8
        offsets[doc_id] = offset
    dtype = _DTYPE[precision]
    n_values = positions * hidden_size
    matrices = {
        doc_id: np.frombuffer(blob, dtype=dtype, count=n_values, offset=off).reshape(positions, hidden_size).copy()
        for doc_id, off in offsets.items()
    }
    header = {
        "precision": precision,
        "positions": int(positions),
        "hidden_size": int(hidden_size),
        "count": int(count),
        "model_tag": model_tag,
    }
    return header, matrices
