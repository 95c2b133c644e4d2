"""Deterministic synthetic fixtures for evaluation and testing.

The format fixture builds a 100-document catalog engineered so that the
bi-encoder stage is dominated by non-format lexical overlap: a handful of
distractor documents sit just above the PDF targets in embedding cosine but
below them once the pair scorer's word-overlap bonus kicks in. The
construction is search-based (seeded rejection sampling over topic strings)
and verifies its own guarantees at build time.

The annotation fixtures reconstruct published aggregate shapes only: 31
queries bucketing to (15, 9, 7) with per-annotator means inside
[2.74, 3.26], and a two-annotator set with column means exactly 2.74/3.26.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from metarec.catalog import Catalog, Document, FeatureKind, FeatureSchema
from metarec.encoder import stub_embed, stub_score
from metarec.evalkit import AnnotationRecord
from metarec.index import cosine

FIXTURE_DIM = 64

_FORMATS = ("PDF", "PPTX", "DOCX", "OFT", "URL")

# Topic vocabulary for PDF targets: query words plus one neutral noun, so the
# word-overlap bonus is large while cosines stay clustered.
_NEUTRAL_NOUNS = [
    "plan", "deck", "brief", "summary", "outline", "notes", "guide", "sheet",
    "pack", "kit", "primer", "recap", "digest", "agenda", "memo", "sketch",
    "draft", "index", "atlas", "ledger",
]

# Distractor vocabulary: shares character trigrams with the PDF query but no
# whole words, so cosine rises without any word-overlap bonus.
_DISTRACTOR_WORDS = [
    "formatting", "documentation", "documented", "formats", "formative",
    "giving", "givens", "informative", "performant", "documents",
    "reformat", "formulate", "cumulative", "governance", "docket",
    "mentions", "segment", "garment", "ferment", "sediment",
]

# Filler vocabulary: unrelated business-ish terms.
_FILLER_WORDS = [
    "azure", "cloud", "pricing", "security", "analytics", "revenue", "churn",
    "quarterly", "onboarding", "partner", "pipeline", "licensing", "billing",
    "support", "workshop", "training", "rollout", "migration", "backlog",
    "roadmap",
]

_VIEWS_BY_LABEL = {"zero": 0.0, "low": 10.0, "medium": 50.0, "high": 1000.0}


@dataclass(frozen=True)
class FormatFixture:
    catalog: Catalog
    queries: tuple[str, ...]
    required_format: dict[str, str]
    pdf_query: str
    dim: int

    def judge(self, doc_id: str, query: str) -> bool:
        doc = self.catalog.get(doc_id)
        wanted = self.required_format.get(query)
        return doc is not None and wanted is not None and doc.values.get("format") == wanted


def _prompt(fmt: str, topic: str, views_label: str) -> str:
    # Mirrors the compiled fragment template for the fixture schema order.
    return f"format is {fmt}. topic is {topic}. views is {views_label}."


def _cos(query: str, text: str, dim: int) -> float:
    return cosine(stub_embed(query, dim), stub_embed(text, dim))


def make_format_fixture(seed: int = 7, dim: int = FIXTURE_DIM) -> FormatFixture:
    """Build the engineered format catalog plus its ten evaluation queries."""
    rng = random.Random(seed)
    pdf_query = "Give a PDF format document"

    # 1. PDF targets: pick the 5 candidate topics whose cosines to the PDF
    #    query cluster most tightly, so the overlap bonus dominates the spread.
    pdf_cands = []
    for noun in _NEUTRAL_NOUNS:
        for pattern in (
            "give document {w}", "document give {w}",
            "give {w} document", "{w} give document",
        ):
            topic = pattern.format(w=noun)
            pdf_cands.append((_cos(pdf_query, _prompt("PDF", topic, "high"), dim), topic))
    pdf_cands.sort()
    best_start = min(
        range(len(pdf_cands) - 4),
        key=lambda i: pdf_cands[i + 4][0] - pdf_cands[i][0],
    )
    target_topics: list[str] = []
    for _, topic in pdf_cands[best_start : best_start + 5]:
        if topic not in target_topics:
            target_topics.append(topic)
    if len(target_topics) < 5:
        for _, topic in pdf_cands[best_start + 5 :]:
            if topic not in target_topics:
                target_topics.append(topic)
            if len(target_topics) == 5:
                break
    target_prompts = [_prompt("PDF", t, "high") for t in target_topics]
    cos_max = max(_cos(pdf_query, p, dim) for p in target_prompts)
    cross_min = min(stub_score(pdf_query, p, dim) for p in target_prompts)

    # 2. Distractors: non-PDF docs whose cosine lands just above the target
    #    cluster while their pair score stays below every target's.
    margin = 0.003
    distractors: list[tuple[str, str, str]] = []  # (format, topic, views label)
    seen_topics: set[str] = set()
    for _ in range(20000):
        topic = " ".join(rng.sample(_DISTRACTOR_WORDS, rng.choice([2, 3])))
        fmt = rng.choice(["OFT", "PPTX", "DOCX"])
        views_label = rng.choice(["low", "medium"])
        if topic in seen_topics:
            continue
        text = _prompt(fmt, topic, views_label)
        c = _cos(pdf_query, text, dim)
        x = stub_score(pdf_query, text, dim)
        if c > cos_max + margin and x < cross_min - margin:
            distractors.append((fmt, topic, views_label))
            seen_topics.add(topic)
        if len(distractors) == 4:
            break
    if len(distractors) < 4:
        raise RuntimeError("fixture search failed: not enough distractors in the score window")

    # 3. Fillers: 91 unrelated documents spread across all formats, kept
    #    clearly below the engineered region on both score routes.
    queries = [f"Give a {f} format document" for f in _FORMATS] + [
        f"Need a {f} format file for the customer" for f in _FORMATS
    ]
    required = {q: f for q, f in zip(queries, list(_FORMATS) * 2)}
    filler_labels = ["zero"] * 18 + ["low"] * 43 + ["medium"] * 21 + ["high"] * 9
    rng.shuffle(filler_labels)
    fillers: list[tuple[str, str, str]] = []
    guard = 0
    while len(fillers) < 91:
        guard += 1
        if guard > 50000:
            raise RuntimeError("fixture search failed: filler sampling exhausted")
        topic = " ".join(rng.sample(_FILLER_WORDS, 2))
        fmt = _FORMATS[len(fillers) % len(_FORMATS)]
        label = filler_labels[len(fillers)]
        text = _prompt(fmt, topic, label)
        if _cos(pdf_query, text, dim) > cos_max - 0.05:
            continue
        if stub_score(pdf_query, text, dim) > cross_min - 0.05:
            continue
        fillers.append((fmt, topic, label))

    # 4. Assemble the catalog. Raw views values are chosen so the fitted
    #    nearest-rank percentiles are p65=10 and p85=50, which maps each raw
    #    value back to exactly the label used during the search.
    rows: list[tuple[str, str, str]] = (
        [("PDF", t, "high") for t in target_topics] + distractors + fillers
    )
    label_counts = {"zero": 0, "low": 0, "medium": 0, "high": 0}
    for _, _, label in rows:
        label_counts[label] += 1
    n0, nl, nm = label_counts["zero"], label_counts["low"], label_counts["medium"]
    if not (n0 <= 64 < n0 + nl and n0 + nl <= 84 < n0 + nl + nm):
        raise RuntimeError("fixture search failed: views label counts break the percentiles")

    schema = FeatureSchema(
        features=(
            ("format", FeatureKind.CATEGORICAL),
            ("topic", FeatureKind.CATEGORICAL),
            ("views", FeatureKind.NUMERICAL),
        ),
        version="format-fixture-1",
    )
    documents = tuple(
        Document(
            id=f"doc-{i:03d}",
            values={"format": fmt, "topic": topic, "views": _VIEWS_BY_LABEL[label]},
            title=f"{fmt} {topic}",
            url=f"https://example.invalid/docs/doc-{i:03d}",
        )
        for i, (fmt, topic, label) in enumerate(rows)
    )
    fixture = FormatFixture(
        catalog=Catalog(schema=schema, documents=documents),
        queries=tuple(queries),
        required_format=required,
        pdf_query=pdf_query,
        dim=dim,
    )
    _verify_format_fixture(fixture)
    return fixture


def _verify_format_fixture(fixture: FormatFixture) -> None:
    """Check the engineered guarantees with the real pipeline code."""
    from metarec.encoder import BackendConfig
    from metarec.index import build_index, top_k
    from metarec.promptc import compile_all
    from metarec.rerank import RerankConfig, rerank

    backend = BackendConfig(dim=fixture.dim)
    records = compile_all(fixture.catalog)
    prompts = {r.doc_id: r.prompt for r in records}
    index = build_index(records, backend)
    cfg = RerankConfig(k=100, top_n=5)
    qvec = stub_embed(fixture.pdf_query, fixture.dim)
    stage1 = top_k(index, qvec, 5)
    stage1_pdf = sum(
        1 for c in stage1 if fixture.catalog.get(c.doc_id).values["format"] == "PDF"
    )
    full = rerank(fixture.pdf_query, top_k(index, qvec, cfg.k), prompts, cfg, backend)
    full_pdf = sum(
        1 for r in full if fixture.catalog.get(r.doc_id).values["format"] == "PDF"
    )
    if stage1_pdf > 2 or full_pdf != 5:
        raise RuntimeError(
            f"fixture verification failed: stage1 PDF count {stage1_pdf}, "
            f"full-pipeline PDF count {full_pdf}"
        )


def table2_records() -> list[AnnotationRecord]:
    """31 four-annotator records bucketing to (15 relevant, 9 somewhat, 7 not).

    Column sums are (101, 85, 101, 85), so every annotator mean lies inside
    [2.74, 3.26].
    """
    rows = [(4, 4, 4, 4)] * 15 + [(3, 2, 3, 2)] * 9 + [(2, 1, 2, 1)] * 7
    return [
        AnnotationRecord(query_id=f"q{i + 1:02d}", scores=scores)
        for i, scores in enumerate(rows)
    ]


def bias_records() -> list[AnnotationRecord]:
    """50 two-annotator records with column means exactly 2.74 and 3.26."""
    rows = [(2, 4)] * 13 + [(3, 3)] * 37
    return [
        AnnotationRecord(query_id=f"b{i + 1:02d}", scores=scores)
        for i, scores in enumerate(rows)
    ]


def bench_queries(n: int = 31) -> list[str]:
    """Deterministic synthetic evaluation queries for the latency harness."""
    formats = list(_FORMATS)
    topics = _FILLER_WORDS
    out = []
    for i in range(n):
        fmt = formats[i % len(formats)]
        topic = topics[i % len(topics)]
        out.append(f"Show me a {fmt} document about {topic} with high views")
    return out
