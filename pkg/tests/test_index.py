"""Index build, exact top-k retrieval, and the binary cache format."""

import hashlib
import random
import struct

import numpy as np
import pytest

from metarec.encoder import BackendConfig, stub_embed
from metarec.errors import (
    DimensionMismatchError,
    DuplicateIdError,
    EmptyIndexError,
    FormatError,
    ZeroVectorError,
)
from metarec.index import build_index, cosine, load_index, save_index, top_k
from metarec.promptc import PromptRecord

STUB = BackendConfig(dim=32)


def records_for(texts):
    return [
        PromptRecord(doc_id=f"doc-{i:04d}", prompt=t, est_tokens=1, truncated=False)
        for i, t in enumerate(texts)
    ]


def brute_force_top_k(index, query_vec, k):
    """Oracle: score every entry with scalar cosine, full sort, take prefix."""
    scored = [
        (cosine(query_vec, row), doc_id) for doc_id, row in zip(index.ids, index.matrix)
    ]
    scored.sort(key=lambda sc: (-sc[0], sc[1]))
    return [doc_id for _, doc_id in scored[:k]]


class TestCosine:
    def test_identical(self):
        assert cosine(np.array([1.0, 0.0]), np.array([1.0, 0.0])) == 1.0

    def test_orthogonal(self):
        assert cosine(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0

    def test_45_degrees(self):
        assert cosine(np.array([1.0, 1.0]), np.array([1.0, 0.0])) == pytest.approx(
            0.70710678, abs=1e-6
        )

    def test_symmetry_and_self(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            a = rng.normal(size=16)
            b = rng.normal(size=16)
            assert cosine(a, b) == pytest.approx(cosine(b, a), abs=1e-12)
            assert cosine(a, a) == pytest.approx(1.0, abs=1e-6)

    def test_zero_vector(self):
        with pytest.raises(ZeroVectorError):
            cosine(np.zeros(4), np.ones(4))

    def test_dim_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            cosine(np.ones(4), np.ones(5))


class TestBuildIndex:
    def test_shape(self):
        index = build_index(records_for(["a", "b", "c"]), STUB)
        assert len(index) == 3
        assert index.dim == STUB.dim
        assert index.ids == tuple(sorted(index.ids))

    def test_duplicate_id(self):
        recs = records_for(["a"]) * 2
        with pytest.raises(DuplicateIdError):
            build_index(recs, STUB)

    def test_deterministic_serialization(self, tmp_path):
        recs = records_for([f"text {i}" for i in range(50)])
        hashes = []
        for name in ("one.bin", "two.bin"):
            path = tmp_path / name
            save_index(build_index(recs, STUB), path)
            hashes.append(hashlib.sha256(path.read_bytes()).hexdigest())
        assert hashes[0] == hashes[1]


class TestTopK:
    def test_k_at_least_corpus_returns_full_sort(self):
        index = build_index(records_for(["alpha", "beta", "gamma"]), STUB)
        out = top_k(index, stub_embed("alpha", STUB.dim), 10)
        assert len(out) == 3
        scores = [c.retrieval_score for c in out]
        assert scores == sorted(scores, reverse=True)

    def test_self_similarity_first(self):
        index = build_index(records_for(["alpha text", "beta text", "gamma text"]), STUB)
        [best] = top_k(index, stub_embed("alpha text", STUB.dim), 1)
        assert best.retrieval_score == pytest.approx(1.0, abs=1e-6)

    def test_oracle_1000_docs(self):
        rng = random.Random(1)
        texts = [f"{rng.random():.10f} {rng.random():.6f}" for _ in range(1000)]
        index = build_index(records_for(texts), STUB)
        qvec = stub_embed("0.5 query text", STUB.dim)
        got = [c.doc_id for c in top_k(index, qvec, 100)]
        assert got == brute_force_top_k(index, qvec, 100)

    def test_tie_break_by_doc_id(self):
        # identical prompts embed identically; order must be ascending id
        index = build_index(records_for(["same", "same", "same"]), STUB)
        out = top_k(index, stub_embed("same", STUB.dim), 3)
        assert [c.doc_id for c in out] == ["doc-0000", "doc-0001", "doc-0002"]

    def test_prefix_property(self):
        index = build_index(records_for([f"t{i}" for i in range(30)]), STUB)
        qvec = stub_embed("t", STUB.dim)
        full = [c.doc_id for c in top_k(index, qvec, 30)]
        for k in (1, 5, 17, 30):
            assert [c.doc_id for c in top_k(index, qvec, k)] == full[:k]

    def test_empty_index(self):
        from metarec.index import EmbeddingIndex

        index = EmbeddingIndex(
            dim=STUB.dim,
            ids=(),
            matrix=np.zeros((0, STUB.dim), dtype=np.float32),
            model_tag="stub",
            built_at=0.0,
        )
        with pytest.raises(EmptyIndexError):
            top_k(index, stub_embed("x", STUB.dim), 1)

    def test_dim_mismatch(self):
        index = build_index(records_for(["x"]), STUB)
        with pytest.raises(DimensionMismatchError):
            top_k(index, np.ones(STUB.dim + 1), 1)


class TestSaveLoad:
    def test_round_trip_bit_exact(self, tmp_path):
        index = build_index(records_for(["a", "b", "séance ünïcode"]), STUB)
        path = tmp_path / "idx.bin"
        save_index(index, path)
        loaded = load_index(path)
        assert loaded.ids == index.ids
        assert loaded.dim == index.dim
        assert loaded.matrix.tobytes() == index.matrix.tobytes()
        assert loaded.model_tag == index.model_tag
        assert loaded.built_at == index.built_at

    def test_truncated_file(self, tmp_path):
        index = build_index(records_for(["a", "b"]), STUB)
        path = tmp_path / "idx.bin"
        save_index(index, path)
        data = path.read_bytes()
        (tmp_path / "trunc.bin").write_bytes(data[: len(data) // 2])
        with pytest.raises(FormatError, match="truncated"):
            load_index(tmp_path / "trunc.bin")

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.bin"
        path.write_bytes(b"NOPE" + b"\x00" * 32)
        with pytest.raises(FormatError, match="magic"):
            load_index(path)

    def test_unsupported_version_named(self, tmp_path):
        path = tmp_path / "v99.bin"
        path.write_bytes(b"MSXE" + struct.pack("<II", 99, 8) + struct.pack("<Q", 0) * 2)
        with pytest.raises(FormatError, match="99"):
            load_index(path)

    def test_trailer_mismatch(self, tmp_path):
        index = build_index(records_for(["a"]), STUB)
        path = tmp_path / "idx.bin"
        save_index(index, path)
        data = bytearray(path.read_bytes())
        data[-8:] = struct.pack("<Q", 42)
        (tmp_path / "bad.bin").write_bytes(bytes(data))
        with pytest.raises(FormatError, match="trailing count"):
            load_index(tmp_path / "bad.bin")

    def test_scale_round_trip_10k(self, tmp_path):
        recs = records_for([f"document number {i} about topic {i % 97}" for i in range(10_000)])
        index = build_index(recs, BackendConfig(dim=16))
        path = tmp_path / "big.bin"
        save_index(index, path)
        save_index(load_index(path), tmp_path / "big2.bin")
        h1 = hashlib.sha256((tmp_path / "big.bin").read_bytes()).hexdigest()
        h2 = hashlib.sha256((tmp_path / "big2.bin").read_bytes()).hexdigest()
        assert h1 == h2
