from __future__ import annotations

import numpy as np
import pytest

from embagg import ToyEncoderConfig, inspect_store, open_store, to_f16, to_f32, toy_encode, write_store
from embagg.errors import CorruptStore, ShapeError, UnknownDocument
from embagg.store import F16_MAX, StoreWriter
from embagg.toy_encoder import toy_token_ids


def _random_matrices(n, t, h, seed=0):
    rng = np.random.default_rng(seed)
    return [rng.standard_normal((t, h)).astype(np.float32) for _ in range(n)]


@pytest.mark.parametrize("precision", ["f32", "f16"])
def test_store_roundtrip_bit_exact(tmp_path, precision):
    mats = _random_matrices(5, 7, 3)
    ids = [f"doc:{i}" for i in range(5)]
    path = tmp_path / "s.embs"
    write_store(path, ids, mats, positions=7, hidden_size=3, precision=precision, model_tag="unit")
    with open_store(path) as store:
        assert store.count == 5
        assert store.doc_ids == ids
        assert store.model_tag == "unit"
        for i, doc_id in enumerate(ids):
            m = store.get(doc_id)
            assert m.precision == precision
            expected = mats[i] if precision == "f32" else to_f16(mats[i])[0]
            assert np.array_equal(m.data, expected)


def test_store_large_hidden_size(tmp_path):
    path = tmp_path / "large.embs"
    write_store(path, ["d"], _random_matrices(1, 60, 1024), positions=60, hidden_size=1024)
    with open_store(path) as store:
        m = store.get("d")
        assert (m.positions, m.hidden_size) == (60, 1024)


def test_empty_file_is_corrupt(tmp_path):
    path = tmp_path / "empty.embs"
    path.write_bytes(b"")
    with pytest.raises(CorruptStore):
        open_store(path)


def test_bad_magic_is_corrupt(tmp_path):
    path = tmp_path / "bad.embs"
    path.write_bytes(b"NOPE" + b"\x00" * 64)
    with pytest.raises(CorruptStore):
        open_store(path)


def test_truncated_payload_is_corrupt(tmp_path):
    path = tmp_path / "t.embs"
    write_store(path, ["a", "b"], _random_matrices(2, 4, 2), positions=4, hidden_size=2)
    blob = path.read_bytes()
    path.write_bytes(blob[:-5])
    with pytest.raises(CorruptStore):
        open_store(path)


def test_missing_file_raises_not_found(tmp_path):
    with pytest.raises(FileNotFoundError):
        open_store(tmp_path / "absent.embs")


def test_unknown_document(tmp_path):
    path = tmp_path / "s.embs"
    write_store(path, ["a"], _random_matrices(1, 2, 2), positions=2, hidden_size=2)
    with open_store(path) as store:
        with pytest.raises(UnknownDocument):
            store.get("nope")


def test_writer_rejects_wrong_shape(tmp_path):
    with pytest.raises(ShapeError):
        with StoreWriter(tmp_path / "w.embs", ["a"], positions=3, hidden_size=2) as w:
            w.append(np.zeros((2, 2), dtype=np.float32))


def test_inspect_clean_store(tmp_path):
    path = tmp_path / "s.embs"
    write_store(path, ["a", "b", "c"], _random_matrices(3, 4, 2), positions=4, hidden_size=2, model_tag="tag")
    info = inspect_store(path)
    assert info["count"] == 3
    assert info["precision"] == "f32"
    assert (info["positions"], info["hidden_size"]) == (4, 2)
    assert info["warnings"] == []


# fp16 conversion


def test_f16_exact_values():
    half, clamped = to_f16(np.array([1.0], dtype=np.float32))
    assert clamped == 0
    assert to_f32(half)[0] == 1.0


def test_f16_nearest_even_for_tenth():
    half, _ = to_f16(np.array([0.1], dtype=np.float32))
    assert float(to_f32(half)[0]) == 0.0999755859375


def test_f16_clamps_and_counts():
    half, clamped = to_f16(np.array([70000.0, -70000.0, 1.0], dtype=np.float32))
    assert clamped == 2
    back = to_f32(half)
    assert back[0] == F16_MAX and back[1] == -F16_MAX and back[2] == 1.0


def test_f16_roundtrip_relative_error_bound():
    rng = np.random.default_rng(7)
    exponents = rng.uniform(-14, 15, size=20000)
    values = (np.sign(rng.standard_normal(20000)) * np.exp2(exponents)).astype(np.float32)
    values = np.clip(values, -F16_MAX, F16_MAX)
    half, _ = to_f16(values)
    rel = np.abs(to_f32(half).astype(np.float64) - values.astype(np.float64)) / np.abs(values)
    assert rel.max() <= 2.0**-11


# toy encoder


def test_toy_encode_is_deterministic():
    cfg = ToyEncoderConfig(seed=3, hidden_size=8, positions=10)
    a = toy_encode([5, 6, 7], cfg)
    b = toy_encode([5, 6, 7], cfg)
    assert np.array_equal(a.data, b.data)


def test_toy_encode_empty_input_is_all_pad():
    cfg = ToyEncoderConfig(seed=3, hidden_size=4, positions=6)
    empty = toy_encode([], cfg)
    assert empty.data.shape == (6, 4)
    pad_rows = toy_encode([0] * 6, cfg)
    assert np.array_equal(empty.data, pad_rows.data)


def test_toy_encode_seed_changes_output():
    a = toy_encode([1, 2], ToyEncoderConfig(seed=1, hidden_size=4, positions=4))
    b = toy_encode([1, 2], ToyEncoderConfig(seed=2, hidden_size=4, positions=4))
    assert not np.array_equal(a.data, b.data)


def test_toy_encode_truncates_and_bounds():
    cfg = ToyEncoderConfig(seed=9, hidden_size=5, positions=3)
    m = toy_encode(list(range(10)), cfg)
    assert m.data.shape == (3, 5)
    assert np.all(np.abs(m.data) <= 1.0)
    assert np.all(np.isfinite(m.data))


def test_toy_token_ids_stable_and_positive():
    ids = toy_token_ids("Bom produto, bom preço!")
    assert ids == toy_token_ids("bom produto bom preço")
    assert all(i >= 1 for i in ids)
    assert ids[0] == ids[2]  # same word, same id
