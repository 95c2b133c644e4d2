"""Stage 2: cross-encoder re-ranking of the stage-1 shortlist.

Pairs the query with every shortlisted candidate's prompt, scores the pairs
in batches, and returns the top-N by cross-encoder score. The batch size is
purely a latency knob: results are independent of how the pair list is split.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping

from metarec.encoder import BackendConfig, embed, score_pairs
from metarec.errors import MissingPromptError
from metarec.index import Candidate, EmbeddingIndex, top_k
from metarec.promptc import DEFAULT_TOKEN_BUDGET, estimate_tokens

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RerankConfig:
    batch_size: int = 4
    top_n: int = 5
    k: int = 100

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.top_n < 1:
            raise ValueError("top_n must be >= 1")
        if self.top_n > self.k:
            raise ValueError("top_n must not exceed k")
        if self.batch_size > self.k:
            raise ValueError("batch_size must not exceed k")


@dataclass(frozen=True)
class RankedResult:
    doc_id: str
    cross_score: float
    retrieval_score: float
    rank: int


def make_pairs(
    query: str,
    candidates: list[Candidate],
    prompts: Mapping[str, str],
) -> list[tuple[str, str]]:
    """(query, prompt) pairs in candidate order."""
    pairs: list[tuple[str, str]] = []
    for cand in candidates:
        if cand.doc_id not in prompts:
            raise MissingPromptError(f"no prompt for candidate {cand.doc_id!r}")
        pairs.append((query, prompts[cand.doc_id]))
    return pairs


def rerank(
    query: str,
    candidates: list[Candidate],
    prompts: Mapping[str, str],
    cfg: RerankConfig,
    backend: BackendConfig,
) -> list[RankedResult]:
    """Score all candidates in batches and keep the top-N by cross score."""
    if not candidates:
        raise ValueError("candidates must be non-empty")
    pairs = make_pairs(query, candidates, prompts)
    for _, prompt in pairs:
        if estimate_tokens(query) + estimate_tokens(prompt) > DEFAULT_TOKEN_BUDGET:
            logger.warning(
                "query + prompt estimate exceeds %d tokens; pair passed through unmodified",
                DEFAULT_TOKEN_BUDGET,
            )
            break
    scores: list[float] = []
    for start in range(0, len(pairs), cfg.batch_size):
        chunk = [prompt for _, prompt in pairs[start : start + cfg.batch_size]]
        scores.extend(score_pairs(query, chunk, backend))
    scored = sorted(
        zip(candidates, scores), key=lambda cs: (-cs[1], cs[0].doc_id)
    )[: min(cfg.top_n, len(candidates))]
    return [
        RankedResult(
            doc_id=cand.doc_id,
            cross_score=score,
            retrieval_score=cand.retrieval_score,
            rank=rank,
        )
        for rank, (cand, score) in enumerate(scored, start=1)
    ]


def run_pipeline(
    query: str,
    index: EmbeddingIndex,
    prompts: Mapping[str, str],
    cfg: RerankConfig,
    backend: BackendConfig,
) -> list[RankedResult]:
    """End-to-end two-stage query: embed, retrieve top-K, re-rank, top-N."""
    query_vec = embed([query], backend)[0]
    candidates = top_k(index, query_vec, cfg.k)
    return rerank(query, candidates, prompts, cfg, backend)


def stage1_results(
    query: str,
    index: EmbeddingIndex,
    cfg: RerankConfig,
    backend: BackendConfig,
) -> list[RankedResult]:
    """Retrieval-only baseline: top-N straight from the bi-encoder stage.

    Used by the ablation comparison; cross_score mirrors the retrieval score.
    """
    query_vec = embed([query], backend)[0]
    candidates = top_k(index, query_vec, cfg.top_n)
    return [
        RankedResult(
            doc_id=cand.doc_id,
            cross_score=cand.retrieval_score,
            retrieval_score=cand.retrieval_score,
            rank=rank,
        )
        for rank, cand in enumerate(candidates, start=1)
    ]
