"""Evaluation kit: latency benchmarking, annotator-score analysis, and the
one-stage vs two-stage ablation.

The latency harness sweeps a grid of cross-encoder batch sizes over a fixed
query set and reports mean, sample standard deviation, and median wall time
per batch size, as Markdown and CSV. Annotation analysis aggregates 0-5
relevance scores into three buckets and checks per-annotator means for bias.
"""

from __future__ import annotations

import csv
import json
import statistics
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Sequence

from metarec.errors import RaggedRecordsError


@dataclass(frozen=True)
class LatencySample:
    query_id: str
    batch_size: int
    wall_time: float


@dataclass(frozen=True)
class LatencyCell:
    batch_size: int
    mean: float
    std: float
    median: float
    count: int


@dataclass(frozen=True)
class LatencyReport:
    label: str
    cells: tuple[LatencyCell, ...]
    samples: tuple[LatencySample, ...]


class RelevanceBucket(str, Enum):
    RELEVANT = "relevant"
    SOMEWHAT = "somewhat_relevant"
    NOT = "not_relevant"


@dataclass(frozen=True)
class AnnotationRecord:
    query_id: str
    scores: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.scores:
            raise ValueError("at least one annotator score required")
        for s in self.scores:
            if not isinstance(s, int) or not 0 <= s <= 5:
                raise ValueError(f"score out of range [0, 5]: {s!r}")


def summarize_samples(values: Sequence[float]) -> tuple[float, float, float]:
    """(mean, sample std, median); std is 0 by convention for one sample."""
    mean = statistics.fmean(values)
    std = statistics.stdev(values) if len(values) > 1 else 0.0
    median = statistics.median(values)
    return mean, std, median


def bench(
    run: Callable[[str, int], object],
    queries: Sequence[str],
    batch_sizes: Sequence[int],
    label: str = "local",
) -> LatencyReport:
    """Time every query at every batch size; queries run sequentially per cell."""
    if not queries:
        raise ValueError("at least one query required")
    samples: list[LatencySample] = []
    cells: list[LatencyCell] = []
    for b in batch_sizes:
        times: list[float] = []
        for qi, query in enumerate(queries):
            start = time.perf_counter()
            run(query, b)
            elapsed = time.perf_counter() - start
            samples.append(LatencySample(query_id=f"q{qi:03d}", batch_size=b, wall_time=elapsed))
            times.append(elapsed)
        mean, std, median = summarize_samples(times)
        cells.append(LatencyCell(batch_size=b, mean=mean, std=std, median=median, count=len(times)))
    return LatencyReport(label=label, cells=tuple(cells), samples=tuple(samples))


def bucket_for_average(avg: float) -> RelevanceBucket:
    """Bucket an average score: [3.5, 5] relevant, [2, 3.5) somewhat, [0, 2) not."""
    if avg >= 3.5:
        return RelevanceBucket.RELEVANT
    if avg >= 2.0:
        return RelevanceBucket.SOMEWHAT
    return RelevanceBucket.NOT


def bucketize_query(rec: AnnotationRecord) -> tuple[float, RelevanceBucket]:
    avg = statistics.fmean(rec.scores)
    return avg, bucket_for_average(avg)


@dataclass(frozen=True)
class BiasReport:
    means: tuple[float, ...]
    spread: float


def annotator_bias(records: Sequence[AnnotationRecord]) -> BiasReport:
    """Per-annotator column means plus the max-min spread."""
    if not records:
        raise ValueError("no annotation records")
    width = len(records[0].scores)
    for rec in records:
        if len(rec.scores) != width:
            raise RaggedRecordsError(
                f"record {rec.query_id!r} has {len(rec.scores)} scores, expected {width}"
            )
    means = tuple(
        statistics.fmean(rec.scores[col] for rec in records) for col in range(width)
    )
    return BiasReport(means=means, spread=max(means) - min(means))


def table2_summary(records: Sequence[AnnotationRecord]) -> dict[RelevanceBucket, int]:
    """Count queries per relevance bucket; counts sum to len(records)."""
    counts = {bucket: 0 for bucket in RelevanceBucket}
    for rec in records:
        _, bucket = bucketize_query(rec)
        counts[bucket] += 1
    return counts


def load_annotations(path: str | Path) -> list[AnnotationRecord]:
    """Read a JSONL annotations file: {"query_id": ..., "scores": [...]}."""
    records: list[AnnotationRecord] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            records.append(
                AnnotationRecord(query_id=str(rec["query_id"]), scores=tuple(rec["scores"]))
            )
    return records


@dataclass(frozen=True)
class AblationRow:
    query: str
    one_stage_hits: int
    two_stage_hits: int


@dataclass(frozen=True)
class AblationReport:
    rows: tuple[AblationRow, ...]

    @property
    def fraction_not_worse(self) -> float:
        """Fraction of queries where the full pipeline matched at least as
        many judged-relevant documents in its top results."""
        if not self.rows:
            return 1.0
        wins = sum(1 for r in self.rows if r.two_stage_hits >= r.one_stage_hits)
        return wins / len(self.rows)


def ablation(
    queries: Sequence[str],
    judge: Callable[[str, str], bool],
    one_stage: Callable[[str], Sequence[str]],
    two_stage: Callable[[str], Sequence[str]],
) -> AblationReport:
    """Compare judged-relevant counts in the top results of both pipelines.

    ``judge(doc_id, query)`` decides relevance; the pipeline callables return
    doc ids in rank order.
    """
    rows: list[AblationRow] = []
    for query in queries:
        one = sum(1 for doc_id in one_stage(query) if judge(doc_id, query))
        two = sum(1 for doc_id in two_stage(query) if judge(doc_id, query))
        rows.append(AblationRow(query=query, one_stage_hits=one, two_stage_hits=two))
    return AblationReport(rows=tuple(rows))


def report_markdown(reports: Iterable[LatencyReport]) -> str:
    """Latency grid as a Markdown table: one row per label, one column per b."""
    reports = list(reports)
    if not reports:
        return ""
    batch_sizes = [cell.batch_size for cell in reports[0].cells]
    header = "| machine | " + " | ".join(f"b={b}" for b in batch_sizes) + " |"
    rule = "|" + "---|" * (len(batch_sizes) + 1)
    lines = [header, rule]
    for rep in reports:
        cells = " | ".join(f"{c.mean:.4f} ± {c.std:.4f}" for c in rep.cells)
        lines.append(f"| {rep.label} | {cells} |")
    return "\n".join(lines) + "\n"


def report_csv(reports: Iterable[LatencyReport], path: str | Path) -> None:
    reports = list(reports)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", "batch_size", "mean_s", "std_s", "median_s", "count"])
        for rep in reports:
            for cell in rep.cells:
                writer.writerow(
                    [rep.label, cell.batch_size, cell.mean, cell.std, cell.median, cell.count]
                )
