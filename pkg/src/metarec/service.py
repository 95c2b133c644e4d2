"""Real-time HTTP serving of the two-stage pipeline.

A snapshot bundles everything one build produced: the embedding index, the
compiled prompts, display metadata, and the bucket thresholds. The service
holds exactly one snapshot at a time; refresh builds a complete replacement
off to the side and swaps it in atomically, so concurrent queries always see
a single generation. Refreshes are serialized by a lock and never disturb
the running snapshot on failure.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from metarec.catalog import Catalog, load_catalog, load_schema
from metarec.encoder import BackendConfig, BackendKind
from metarec.errors import BackendUnavailableError, MetarecError
from metarec.index import EmbeddingIndex, build_index, load_index, save_index
from metarec.promptc import (
    BucketThresholds,
    PromptRecord,
    compile_all,
    dump_prompts,
    estimate_tokens,
    fit_all_thresholds,
    load_prompts,
    load_thresholds,
    save_thresholds,
)
from metarec.rerank import RerankConfig, run_pipeline

logger = logging.getLogger(__name__)

MAX_QUERY_CHARS = 2000
MAX_TOP_K = 10_000


@dataclass(frozen=True)
class EngineConfig:
    backend: BackendConfig = BackendConfig()
    rerank: RerankConfig = RerankConfig()
    budget: int = 512

    @staticmethod
    def from_file(path: str | Path) -> "EngineConfig":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        backend_raw = raw.get("backend", {})
        backend = BackendConfig(
            kind=BackendKind(backend_raw.get("kind", "stub")),
            dim=int(backend_raw.get("dim", 384)),
            endpoint=backend_raw.get("endpoint"),
            timeout=float(backend_raw.get("timeout", 10.0)),
            max_batch=int(backend_raw.get("max_batch", 32)),
        )
        rerank = RerankConfig(
            batch_size=int(raw.get("batch_size", 4)),
            top_n=int(raw.get("top_n", 5)),
            k=int(raw.get("k", 100)),
        )
        return EngineConfig(backend=backend, rerank=rerank, budget=int(raw.get("budget", 512)))


@dataclass(frozen=True)
class Snapshot:
    index: EmbeddingIndex
    prompts: dict[str, str]
    display: dict[str, tuple[str | None, str | None]]  # id -> (title, url)
    thresholds: dict[str, BucketThresholds]
    generation: int

    @property
    def doc_count(self) -> int:
        return len(self.index)


def build_snapshot(catalog: Catalog, cfg: EngineConfig, generation: int = 1) -> Snapshot:
    """Compile prompts, fit thresholds, and embed the whole catalog."""
    thresholds = fit_all_thresholds(catalog)
    records = compile_all(catalog, budget=cfg.budget, thresholds=thresholds)
    index = build_index(records, cfg.backend)
    return Snapshot(
        index=index,
        prompts={r.doc_id: r.prompt for r in records},
        display={d.id: (d.title, d.url) for d in catalog.documents},
        thresholds=thresholds,
        generation=generation,
    )


def save_snapshot(snapshot: Snapshot, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_index(snapshot.index, out / "index.bin")
    dump_prompts(
        [
            PromptRecord(doc_id=i, prompt=p, est_tokens=estimate_tokens(p), truncated=False)
            for i, p in sorted(snapshot.prompts.items())
        ],
        out / "prompts.jsonl",
    )
    save_thresholds(snapshot.thresholds, out / "thresholds.json")
    with open(out / "docs.jsonl", "w", encoding="utf-8") as fh:
        for doc_id, (title, url) in sorted(snapshot.display.items()):
            fh.write(json.dumps({"id": doc_id, "title": title, "url": url}) + "\n")


def load_snapshot(snapshot_dir: str | Path, generation: int = 1) -> Snapshot:
    src = Path(snapshot_dir)
    index = load_index(src / "index.bin")
    prompts = {r.doc_id: r.prompt for r in load_prompts(src / "prompts.jsonl")}
    thresholds = (
        load_thresholds(src / "thresholds.json")
        if (src / "thresholds.json").exists()
        else {}
    )
    display: dict[str, tuple[str | None, str | None]] = {}
    docs_path = src / "docs.jsonl"
    if docs_path.exists():
        with open(docs_path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    rec = json.loads(line)
                    display[rec["id"]] = (rec.get("title"), rec.get("url"))
    return Snapshot(
        index=index,
        prompts=prompts,
        display=display,
        thresholds=thresholds,
        generation=generation,
    )


@dataclass
class ServiceState:
    cfg: EngineConfig
    schema_path: str | None = None
    catalog_path: str | None = None
    _snapshot: Snapshot | None = None
    _refresh_lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def snapshot(self) -> Snapshot | None:
        # Reference read is atomic; handlers capture it once per request.
        return self._snapshot

    def install(self, snapshot: Snapshot) -> None:
        self._snapshot = snapshot

    def refresh(self) -> Snapshot:
        """Rebuild from the configured catalog and swap atomically.

        Serialized: concurrent calls queue up on the lock. On failure the
        previous snapshot keeps serving.
        """
        if not self.schema_path or not self.catalog_path:
            raise MetarecError("refresh requires schema and catalog paths")
        with self._refresh_lock:
            current = self._snapshot
            generation = (current.generation if current else 0) + 1
            schema = load_schema(self.schema_path)
            catalog = load_catalog(schema, self.catalog_path)
            if len(catalog) == 0:
                raise MetarecError("refusing to refresh from an empty catalog")
            snapshot = build_snapshot(catalog, self.cfg, generation=generation)
            self._snapshot = snapshot
            logger.info("installed snapshot generation %d (%d docs)", generation, len(catalog))
            return snapshot


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": message})


def create_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="metarec")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    app.state.engine = state

    @app.get("/v1/health")
    def health():
        snapshot = state.snapshot
        if snapshot is None:
            return _error(503, "no snapshot loaded")
        return {
            "status": "ok",
            "generation": snapshot.generation,
            "docs": snapshot.doc_count,
        }

    @app.post("/v1/recommend")
    def recommend(body: dict):
        snapshot = state.snapshot
        if snapshot is None:
            return _error(503, "no snapshot loaded")
        query = body.get("query")
        if not isinstance(query, str) or not query.strip():
            return _error(400, "query must be a non-empty string")
        if len(query) > MAX_QUERY_CHARS:
            return _error(400, f"query exceeds {MAX_QUERY_CHARS} characters")
        top_k_req = body.get("top_k", state.cfg.rerank.k)
        top_n_req = body.get("top_n", state.cfg.rerank.top_n)
        if not isinstance(top_k_req, int) or not isinstance(top_n_req, int):
            return _error(400, "top_k and top_n must be integers")
        if not 1 <= top_n_req <= top_k_req <= MAX_TOP_K:
            return _error(400, f"require 1 <= top_n <= top_k <= {MAX_TOP_K}")
        # body may carry an opaque "context" field; accepted and ignored.
        cfg = RerankConfig(
            batch_size=min(state.cfg.rerank.batch_size, top_k_req),
            top_n=top_n_req,
            k=top_k_req,
        )
        start = time.perf_counter()
        try:
            results = run_pipeline(
                query, snapshot.index, snapshot.prompts, cfg, state.cfg.backend
            )
        except BackendUnavailableError as exc:
            return _error(503, f"backend unavailable: {exc}")
        except MetarecError as exc:
            logger.exception("query failed")
            return _error(500, str(exc))
        latency_ms = int((time.perf_counter() - start) * 1000)
        payload = []
        for r in results:
            title, url = snapshot.display.get(r.doc_id, (None, None))
            payload.append(
                {
                    "doc_id": r.doc_id,
                    "title": title,
                    "url": url,
                    "cross_score": r.cross_score,
                    "retrieval_score": r.retrieval_score,
                    "rank": r.rank,
                }
            )
        return {
            "results": payload,
            "latency_ms": latency_ms,
            "index_built_at": snapshot.index.built_at,
            "model_tag": snapshot.index.model_tag,
            "generation": snapshot.generation,
        }

    @app.post("/v1/refresh")
    def refresh():
        try:
            snapshot = state.refresh()
        except MetarecError as exc:
            logger.error("refresh failed: %s", exc)
            return _error(500, f"refresh failed: {exc}")
        return JSONResponse(
            status_code=202,
            content={"accepted": True, "generation": snapshot.generation},
        )

    return app


def prompts_mapping(snapshot: Snapshot) -> Mapping[str, str]:
    return snapshot.prompts
