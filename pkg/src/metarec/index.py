"""In-memory embedding index with exact cosine top-K retrieval.

The index is immutable once built: ids are kept sorted ascending and vectors
live in one flat float32 matrix. Retrieval is an exact full scan (no
approximation), which keeps results oracle-checkable and deterministic; ties
break by ascending doc id.

On disk the index is a single binary file:
magic "MSXE", u32 version=1, u32 dim, u64 count, then per entry a u32 id
byte length, the UTF-8 id bytes and dim little-endian f32 values, closed by
a trailing u64 repeat of the count as an integrity check. Model tag and
build timestamp travel in a small JSON sidecar next to the binary.
"""

from __future__ import annotations

import json
import struct
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from metarec.encoder import BackendConfig, EmbeddingVector, embed
from metarec.errors import (
    DimensionMismatchError,
    DuplicateIdError,
    EmptyIndexError,
    FormatError,
    ZeroVectorError,
)
from metarec.promptc import PromptRecord

MAGIC = b"MSXE"
VERSION = 1


@dataclass(frozen=True)
class Candidate:
    doc_id: str
    retrieval_score: float


@dataclass(frozen=True)
class EmbeddingIndex:
    dim: int
    ids: tuple[str, ...]
    matrix: np.ndarray  # shape (len(ids), dim), float32, rows aligned with ids
    model_tag: str
    built_at: float

    def __post_init__(self) -> None:
        if self.matrix.shape != (len(self.ids), self.dim):
            raise DimensionMismatchError(
                f"matrix shape {self.matrix.shape} does not match "
                f"({len(self.ids)}, {self.dim})"
            )

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def entries(self) -> list[tuple[str, EmbeddingVector]]:
        return [
            (doc_id, EmbeddingVector(values=row, dim=self.dim, model_tag=self.model_tag))
            for doc_id, row in zip(self.ids, self.matrix)
        ]


def build_index(records: list[PromptRecord], cfg: BackendConfig) -> EmbeddingIndex:
    """Embed every prompt and assemble the index, sorted by doc id."""
    if not records:
        raise EmptyIndexError("cannot build an index from zero records")
    seen: set[str] = set()
    for rec in records:
        if rec.doc_id in seen:
            raise DuplicateIdError(f"duplicate doc id: {rec.doc_id!r}")
        seen.add(rec.doc_id)
    ordered = sorted(records, key=lambda r: r.doc_id)
    vectors = embed([r.prompt for r in ordered], cfg)
    matrix = np.stack([v.values for v in vectors]).astype(np.float32)
    return EmbeddingIndex(
        dim=cfg.dim,
        ids=tuple(r.doc_id for r in ordered),
        matrix=matrix,
        model_tag=cfg.model_tag,
        built_at=time.time(),
    )


def _as_array(vec: EmbeddingVector | np.ndarray) -> np.ndarray:
    if isinstance(vec, EmbeddingVector):
        return vec.values
    return np.asarray(vec)


def cosine(a: EmbeddingVector | np.ndarray, b: EmbeddingVector | np.ndarray) -> float:
    """Cosine similarity of two vectors, in [-1, 1]."""
    av = _as_array(a).astype(np.float64)
    bv = _as_array(b).astype(np.float64)
    if av.shape != bv.shape:
        raise DimensionMismatchError(f"dims differ: {av.shape} vs {bv.shape}")
    na = float(np.linalg.norm(av))
    nb = float(np.linalg.norm(bv))
    if na == 0.0 or nb == 0.0:
        raise ZeroVectorError("cosine undefined for zero-norm vector")
    return float(np.clip(np.dot(av, bv) / (na * nb), -1.0, 1.0))


def top_k(index: EmbeddingIndex, query_vec: EmbeddingVector | np.ndarray, k: int) -> list[Candidate]:
    """Exact top-k by cosine, sorted by (score desc, doc_id asc)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(index) == 0:
        raise EmptyIndexError("index has no entries")
    qv = _as_array(query_vec).astype(np.float64)
    if qv.shape != (index.dim,):
        raise DimensionMismatchError(f"query dim {qv.shape} vs index dim {index.dim}")
    qnorm = float(np.linalg.norm(qv))
    if qnorm == 0.0:
        raise ZeroVectorError("query vector has zero norm")
    mat = index.matrix.astype(np.float64)
    row_norms = np.linalg.norm(mat, axis=1)
    if np.any(row_norms == 0.0):
        raise ZeroVectorError("index contains a zero-norm vector")
    scores = np.clip((mat @ qv) / (row_norms * qnorm), -1.0, 1.0)
    # ids are sorted ascending, so a stable sort on -score breaks ties by id.
    order = np.argsort(-scores, kind="stable")[: min(k, len(index))]
    return [Candidate(doc_id=index.ids[i], retrieval_score=float(scores[i])) for i in order]


def save_index(index: EmbeddingIndex, path: str | Path) -> None:
    """Write the binary index file plus a JSON metadata sidecar."""
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, index.dim))
        fh.write(struct.pack("<Q", len(index)))
        for doc_id, row in zip(index.ids, index.matrix):
            id_bytes = doc_id.encode("utf-8")
            fh.write(struct.pack("<I", len(id_bytes)))
            fh.write(id_bytes)
            fh.write(row.astype("<f4").tobytes())
        fh.write(struct.pack("<Q", len(index)))
    meta = {"model_tag": index.model_tag, "built_at": index.built_at}
    Path(str(path) + ".meta.json").write_text(json.dumps(meta) + "\n", encoding="utf-8")


def load_index(path: str | Path) -> EmbeddingIndex:
    """Read an index file, verifying magic, version, and the trailing count."""
    path = Path(path)
    data = path.read_bytes()
    offset = 0

    def take(n: int) -> bytes:
        nonlocal offset
        if offset + n > len(data):
            raise FormatError(f"{path}: truncated at byte {offset}")
        chunk = data[offset : offset + n]
        offset += n
        return chunk

    if take(4) != MAGIC:
        raise FormatError(f"{path}: bad magic")
    version, dim = struct.unpack("<II", take(8))
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version} (expected {VERSION})")
    (count,) = struct.unpack("<Q", take(8))
    ids: list[str] = []
    rows: list[np.ndarray] = []
    for _ in range(count):
        (id_len,) = struct.unpack("<I", take(4))
        ids.append(take(id_len).decode("utf-8"))
        rows.append(np.frombuffer(take(dim * 4), dtype="<f4").copy())
    (trailer,) = struct.unpack("<Q", take(8))
    if trailer != count:
        raise FormatError(f"{path}: trailing count {trailer} != header count {count}")
    if offset != len(data):
        raise FormatError(f"{path}: {len(data) - offset} unexpected trailing bytes")
    if list(ids) != sorted(ids):
        raise FormatError(f"{path}: entries are not sorted by doc id")
    if len(set(ids)) != len(ids):
        raise FormatError(f"{path}: duplicate doc ids")

    model_tag = ""
    built_at = 0.0
    meta_path = Path(str(path) + ".meta.json")
    if meta_path.exists():
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        model_tag = str(meta.get("model_tag", ""))
        built_at = float(meta.get("built_at", 0.0))
    matrix = (
        np.stack(rows).astype(np.float32)
        if rows
        else np.zeros((0, dim), dtype=np.float32)
    )
    return EmbeddingIndex(
        dim=dim, ids=tuple(ids), matrix=matrix, model_tag=model_tag, built_at=built_at
    )
