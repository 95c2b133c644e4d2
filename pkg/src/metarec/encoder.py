"""Pluggable bi-encoder and cross-encoder backends.

Two backends share one config type:

* ``stub`` — hermetic, deterministic, dependency-free. Embeddings are
  L2-normalized signed hashed character-3-gram bags; pair scores are the
  cosine of the two stub embeddings plus a small word-overlap bonus, which
  gives the pair scorer strictly more lexical sensitivity than the
  embedding route.
* ``remote`` — a minimal JSON-over-HTTP client (POST /embed, POST /score)
  so any external model server can be adapted without touching the engine.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from enum import Enum

import httpx
import numpy as np

from metarec.errors import BackendUnavailableError, DimensionMismatchError

_WORD_RE = re.compile(r"[a-z0-9]+")


class BackendKind(str, Enum):
    STUB = "stub"
    REMOTE = "remote"


@dataclass(frozen=True)
class BackendConfig:
    kind: BackendKind = BackendKind.STUB
    dim: int = 384
    endpoint: str | None = None
    timeout: float = 10.0
    max_batch: int = 32

    def __post_init__(self) -> None:
        if self.dim < 8:
            raise ValueError("dim must be >= 8")
        if self.max_batch < 1:
            raise ValueError("max_batch must be >= 1")
        if self.kind is BackendKind.REMOTE and not self.endpoint:
            raise ValueError("remote backend requires an endpoint URL")

    @property
    def model_tag(self) -> str:
        if self.kind is BackendKind.STUB:
            return f"stub-3gram-{self.dim}"
        return f"remote:{self.endpoint}"


@dataclass(frozen=True)
class EmbeddingVector:
    values: np.ndarray
    dim: int
    model_tag: str

    def __post_init__(self) -> None:
        if self.values.shape != (self.dim,):
            raise DimensionMismatchError(
                f"vector has shape {self.values.shape}, expected ({self.dim},)"
            )


def _grams(text: str) -> list[str]:
    if len(text) < 3:
        return [text] if text else []
    return [text[i : i + 3] for i in range(len(text) - 2)]


def _gram_hash(gram: str) -> int:
    # blake2b rather than hash() so the stub is reproducible across runs
    # and platforms regardless of PYTHONHASHSEED.
    return int.from_bytes(hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest(), "big")


def stub_embed(text: str, dim: int) -> EmbeddingVector:
    """Deterministic embedding from signed hashed character 3-grams.

    Empty text maps to the first basis vector; all outputs are unit-norm.
    """
    if dim < 8:
        raise ValueError("dim must be >= 8")
    vec = np.zeros(dim, dtype=np.float64)
    grams = _grams(text)
    if not grams:
        vec[0] = 1.0
        return EmbeddingVector(values=vec.astype(np.float32), dim=dim, model_tag=f"stub-3gram-{dim}")
    for gram in grams:
        h = _gram_hash(gram)
        sign = 1.0 if (h >> 63) & 1 == 0 else -1.0
        vec[h % dim] += sign
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        vec[0] = 1.0
        norm = 1.0
    return EmbeddingVector(
        values=(vec / norm).astype(np.float32), dim=dim, model_tag=f"stub-3gram-{dim}"
    )


def _word_set(text: str) -> frozenset[str]:
    return frozenset(_WORD_RE.findall(text.lower()))


def _jaccard(a: frozenset[str], b: frozenset[str]) -> float:
    if not a and not b:
        return 0.0
    return len(a & b) / len(a | b)


def stub_score(query: str, prompt: str, dim: int) -> float:
    """Stub cross-encoder: embedding cosine plus 0.1 x word-set Jaccard."""
    q = stub_embed(query, dim)
    p = stub_embed(prompt, dim)
    cos = float(np.dot(q.values.astype(np.float64), p.values.astype(np.float64)))
    return cos + 0.1 * _jaccard(_word_set(query), _word_set(prompt))


def _post_json(url: str, payload: dict, timeout: float) -> dict:
    try:
        resp = httpx.post(url, json=payload, timeout=timeout)
    except httpx.HTTPError as exc:
        raise BackendUnavailableError(f"{url}: {exc}") from exc
    if resp.status_code != 200:
        raise BackendUnavailableError(f"{url}: HTTP {resp.status_code}")
    try:
        return resp.json()
    except ValueError as exc:
        raise BackendUnavailableError(f"{url}: invalid JSON response") from exc


def _remote_embed(texts: list[str], cfg: BackendConfig) -> list[EmbeddingVector]:
    out: list[EmbeddingVector] = []
    for start in range(0, len(texts), cfg.max_batch):
        chunk = texts[start : start + cfg.max_batch]
        data = _post_json(f"{cfg.endpoint}/embed", {"texts": chunk}, cfg.timeout)
        dim = data.get("dim")
        vectors = data.get("vectors")
        if dim != cfg.dim:
            raise DimensionMismatchError(f"remote returned dim={dim}, expected {cfg.dim}")
        if not isinstance(vectors, list) or len(vectors) != len(chunk):
            raise BackendUnavailableError("remote returned wrong vector count")
        for vec in vectors:
            arr = np.asarray(vec, dtype=np.float32)
            if arr.shape != (cfg.dim,):
                raise DimensionMismatchError(
                    f"remote vector has shape {arr.shape}, expected ({cfg.dim},)"
                )
            out.append(EmbeddingVector(values=arr, dim=cfg.dim, model_tag=cfg.model_tag))
    return out


def _remote_score(query: str, prompts: list[str], cfg: BackendConfig) -> list[float]:
    out: list[float] = []
    for start in range(0, len(prompts), cfg.max_batch):
        chunk = prompts[start : start + cfg.max_batch]
        data = _post_json(f"{cfg.endpoint}/score", {"query": query, "texts": chunk}, cfg.timeout)
        scores = data.get("scores")
        if not isinstance(scores, list) or len(scores) != len(chunk):
            raise BackendUnavailableError("remote returned wrong score count")
        out.extend(float(s) for s in scores)
    return out


def embed(texts: list[str], cfg: BackendConfig) -> list[EmbeddingVector]:
    """Embed a batch of texts; order and length are preserved."""
    if not texts:
        raise ValueError("texts must be non-empty")
    if cfg.kind is BackendKind.STUB:
        return [stub_embed(t, cfg.dim) for t in texts]
    return _remote_embed(texts, cfg)


def score_pairs(query: str, prompts: list[str], cfg: BackendConfig) -> list[float]:
    """Score (query, prompt) pairs; one score per prompt, order preserved."""
    if not prompts:
        raise ValueError("prompts must be non-empty")
    if cfg.kind is BackendKind.STUB:
        return [stub_score(query, p, cfg.dim) for p in prompts]
    return _remote_score(query, prompts, cfg)
