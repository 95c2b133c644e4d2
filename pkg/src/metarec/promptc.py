"""Compile document metadata into textual prompts.

Each document becomes a concatenation of one fragment per feature, in schema
order: ``<feature name> is <rendered value>.`` Numerical values are first
mapped to a categorical label (zero/low/medium/high) using corpus-level
percentile thresholds; categorical values pass through verbatim. Missing
features are skipped. A character-based token estimate guards a configurable
token budget by dropping whole trailing fragments.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from metarec.catalog import Catalog, Document, FeatureKind, FeatureSchema, FeatureValue
from metarec.errors import EmptyColumnError, MissingThresholdsError

DEFAULT_TOKEN_BUDGET = 512

BUCKET_LABELS = ("zero", "low", "medium", "high")


@dataclass(frozen=True)
class BucketThresholds:
    """Corpus percentiles for one numerical feature."""

    p65: float
    p85: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.p65) and math.isfinite(self.p85)):
            raise ValueError("thresholds must be finite")
        if self.p65 > self.p85:
            raise ValueError(f"p65 ({self.p65}) must not exceed p85 ({self.p85})")


@dataclass(frozen=True)
class PromptRecord:
    doc_id: str
    prompt: str
    est_tokens: int
    truncated: bool


def _nearest_rank(sorted_values: list[float], r: int) -> float:
    idx = math.ceil(r / 100 * len(sorted_values)) - 1
    return sorted_values[max(idx, 0)]


def fit_thresholds(column: Iterable[float]) -> BucketThresholds:
    """Nearest-rank 65th and 85th percentiles over a column (zeros included)."""
    values = sorted(column)
    if not values:
        raise EmptyColumnError("cannot fit thresholds on an empty column")
    return BucketThresholds(p65=_nearest_rank(values, 65), p85=_nearest_rank(values, 85))


def bucketize(value: float, t: BucketThresholds) -> str:
    """Map a numerical value to one of zero/low/medium/high.

    The zero case is evaluated first so that 0 is never classified as "low"
    even when p65 > 0. Boundaries are closed on the right: value == p65 is
    "low", value == p85 is "medium".
    """
    if value == 0:
        return "zero"
    if value > t.p85:
        return "high"
    if value > t.p65:
        return "medium"
    return "low"


def render_value(
    name: str,
    kind: FeatureKind,
    value: str | float,
    thresholds: BucketThresholds | None = None,
) -> str:
    """String rendering of one feature value: identity for categorical, bucket
    label for numerical."""
    if kind is FeatureKind.CATEGORICAL:
        return str(value)
    if thresholds is None:
        raise MissingThresholdsError(f"no thresholds fitted for numerical feature {name!r}")
    return bucketize(float(value), thresholds)


def estimate_tokens(text: str) -> int:
    """Deterministic upper-bound token estimate: ceil(characters / 4)."""
    return -(-len(text) // 4)


def compile_prompt(
    doc: Document,
    schema: FeatureSchema,
    thresholds: Mapping[str, BucketThresholds],
    budget: int = DEFAULT_TOKEN_BUDGET,
) -> PromptRecord:
    """Compile one document into a prompt, enforcing the token budget.

    Fragments are emitted in schema order and joined by single spaces; missing
    features contribute nothing. If the estimate exceeds the budget, whole
    trailing fragments are dropped until it fits.
    """
    fragments: list[str] = []
    for name, kind in schema.features:
        value = doc.values.get(name)
        if value is None:
            continue
        fragments.append(f"{name} is {render_value(name, kind, value, thresholds.get(name))}.")

    truncated = False
    prompt = " ".join(fragments)
    while fragments and estimate_tokens(prompt) > budget:
        fragments.pop()
        truncated = True
        prompt = " ".join(fragments)
    return PromptRecord(
        doc_id=doc.id,
        prompt=prompt,
        est_tokens=estimate_tokens(prompt),
        truncated=truncated,
    )


def fit_all_thresholds(catalog: Catalog) -> dict[str, BucketThresholds]:
    """Fit thresholds for every numerical feature that has at least one value."""
    from metarec.catalog import numeric_column

    out: dict[str, BucketThresholds] = {}
    for name, kind in catalog.schema.features:
        if kind is not FeatureKind.NUMERICAL:
            continue
        column = numeric_column(catalog, name)
        if column:
            out[name] = fit_thresholds(column)
    return out


def compile_all(
    catalog: Catalog,
    budget: int = DEFAULT_TOKEN_BUDGET,
    thresholds: Mapping[str, BucketThresholds] | None = None,
) -> list[PromptRecord]:
    """Compile every document; thresholds are fit once over the whole catalog."""
    if thresholds is None:
        thresholds = fit_all_thresholds(catalog)
    return [compile_prompt(doc, catalog.schema, thresholds, budget) for doc in catalog.documents]


def dump_prompts(records: Iterable[PromptRecord], path: str | Path) -> None:
    """Write prompt records as JSONL for offline inspection."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(
                json.dumps(
                    {
                        "id": rec.doc_id,
                        "prompt": rec.prompt,
                        "est_tokens": rec.est_tokens,
                        "truncated": rec.truncated,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def load_prompts(path: str | Path) -> list[PromptRecord]:
    """Read back a prompt dump written by dump_prompts."""
    records: list[PromptRecord] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            records.append(
                PromptRecord(
                    doc_id=rec["id"],
                    prompt=rec["prompt"],
                    est_tokens=rec["est_tokens"],
                    truncated=rec["truncated"],
                )
            )
    return records


def save_thresholds(thresholds: Mapping[str, BucketThresholds], path: str | Path) -> None:
    payload = {name: {"p65": t.p65, "p85": t.p85} for name, t in thresholds.items()}
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def load_thresholds(path: str | Path) -> dict[str, BucketThresholds]:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    return {name: BucketThresholds(p65=t["p65"], p85=t["p85"]) for name, t in raw.items()}
