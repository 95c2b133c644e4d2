"""Feature schema, document model, and catalog file ingestion.

A catalog is a feature schema plus a list of documents. Feature values are
plain Python natives: ``str`` for categorical, ``float`` for numerical, and
``None`` for missing. Empty or whitespace-only categorical strings are
normalized to missing at load time.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from metarec.errors import (
    KindMismatchError,
    ParseError,
    SchemaError,
    UnknownFeatureError,
    ValidationError,
)

FeatureValue = str | float | None

_DOC_KEYS = {"id", "title", "url", "features"}


class FeatureKind(str, Enum):
    CATEGORICAL = "categorical"
    NUMERICAL = "numerical"


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered feature declarations; order fixes prompt concatenation order."""

    features: tuple[tuple[str, FeatureKind], ...]
    version: str = "1"

    def __post_init__(self) -> None:
        if len(self.features) < 1:
            raise SchemaError("schema must declare at least one feature")
        seen: set[str] = set()
        for name, kind in self.features:
            if not name:
                raise SchemaError("feature name must be non-empty")
            if name in seen:
                raise SchemaError(f"duplicate feature name: {name!r}")
            if not isinstance(kind, FeatureKind):
                raise SchemaError(f"unknown feature kind for {name!r}: {kind!r}")
            seen.add(name)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.features)

    def kind_of(self, name: str) -> FeatureKind:
        for fname, kind in self.features:
            if fname == name:
                return kind
        raise UnknownFeatureError(f"feature not in schema: {name!r}")


@dataclass(frozen=True)
class Document:
    id: str
    values: dict[str, FeatureValue]
    title: str | None = None
    url: str | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise ValidationError("document id must be non-empty")


@dataclass(frozen=True)
class Catalog:
    schema: FeatureSchema
    documents: tuple[Document, ...]
    _by_id: dict[str, Document] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        by_id: dict[str, Document] = {}
        for doc in self.documents:
            if doc.id in by_id:
                raise ValidationError(f"duplicate document id: {doc.id!r}")
            extra = set(doc.values) - set(self.schema.names)
            if extra:
                raise ValidationError(
                    f"document {doc.id!r} has values outside the schema: {sorted(extra)}"
                )
            by_id[doc.id] = doc
        object.__setattr__(self, "_by_id", by_id)

    def __len__(self) -> int:
        return len(self.documents)

    def get(self, doc_id: str) -> Document | None:
        return self._by_id.get(doc_id)


def load_schema(path: str | Path) -> FeatureSchema:
    """Parse and validate a JSON schema file, preserving feature order."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"schema file {path}: {exc}") from exc
    if not isinstance(raw, dict) or "features" not in raw:
        raise ParseError(f"schema file {path}: expected an object with a 'features' array")
    features = []
    for entry in raw["features"]:
        if not isinstance(entry, dict) or "name" not in entry or "kind" not in entry:
            raise ParseError(f"schema file {path}: each feature needs 'name' and 'kind'")
        try:
            kind = FeatureKind(entry["kind"])
        except ValueError as exc:
            raise SchemaError(f"unknown feature kind: {entry['kind']!r}") from exc
        features.append((str(entry["name"]), kind))
    return FeatureSchema(features=tuple(features), version=str(raw.get("version", "1")))


def _coerce_value(doc_id: str, name: str, kind: FeatureKind, raw: object) -> FeatureValue:
    if raw is None:
        return None
    if kind is FeatureKind.NUMERICAL:
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            raise ValidationError(
                f"document {doc_id!r}: feature {name!r} must be a number, got {raw!r}"
            )
        value = float(raw)
        if not math.isfinite(value):
            raise ValidationError(f"document {doc_id!r}: feature {name!r} is not finite")
        return value
    if not isinstance(raw, str):
        raise ValidationError(
            f"document {doc_id!r}: feature {name!r} must be a string, got {raw!r}"
        )
    # Empty categorical text carries no semantic content; treat as missing.
    return raw if raw.strip() else None


def load_catalog(schema: FeatureSchema, path: str | Path) -> Catalog:
    """Load a JSONL catalog file against a schema.

    Absent features become missing; features outside the schema are rejected.
    """
    documents: list[Document] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from exc
            if not isinstance(rec, dict):
                raise ParseError(f"{path}:{lineno}: expected a JSON object")
            extra = set(rec) - _DOC_KEYS
            if extra:
                raise ValidationError(f"{path}:{lineno}: unknown fields {sorted(extra)}")
            doc_id = rec.get("id")
            if not isinstance(doc_id, str) or not doc_id:
                raise ValidationError(f"{path}:{lineno}: missing or empty 'id'")
            raw_features = rec.get("features", {})
            if not isinstance(raw_features, dict):
                raise ValidationError(f"{path}:{lineno}: 'features' must be an object")
            values: dict[str, FeatureValue] = {}
            for name, kind in schema.features:
                values[name] = _coerce_value(doc_id, name, kind, raw_features.get(name))
            extra_features = set(raw_features) - set(schema.names)
            if extra_features:
                raise ValidationError(
                    f"{path}:{lineno}: features not in schema: {sorted(extra_features)}"
                )
            documents.append(
                Document(
                    id=doc_id,
                    values=values,
                    title=rec.get("title"),
                    url=rec.get("url"),
                )
            )
    return Catalog(schema=schema, documents=tuple(documents))


def save_catalog(catalog: Catalog, path: str | Path) -> None:
    """Write a catalog back to JSONL; inverse of load_catalog on (ids, values)."""
    with open(path, "w", encoding="utf-8") as fh:
        for doc in catalog.documents:
            rec: dict[str, object] = {"id": doc.id}
            if doc.title is not None:
                rec["title"] = doc.title
            if doc.url is not None:
                rec["url"] = doc.url
            rec["features"] = {k: v for k, v in doc.values.items() if v is not None}
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def numeric_column(catalog: Catalog, feature: str) -> list[float]:
    """All non-missing values of a numerical feature, in document order."""
    kind = catalog.schema.kind_of(feature)
    if kind is not FeatureKind.NUMERICAL:
        raise KindMismatchError(f"feature {feature!r} is {kind.value}, not numerical")
    out: list[float] = []
    for doc in catalog.documents:
        value = doc.values.get(feature)
        if value is not None:
            out.append(float(value))
    return out
