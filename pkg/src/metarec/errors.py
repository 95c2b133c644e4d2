"""Exception hierarchy shared across the package."""

from __future__ import annotations


class MetarecError(Exception):
    """Base class for all package errors."""


class ParseError(MetarecError):
    """Input file is not syntactically valid."""


class SchemaError(MetarecError):
    """Feature schema violates its invariants."""


class ValidationError(MetarecError):
    """Catalog record violates the schema or its invariants."""


class UnknownFeatureError(MetarecError):
    """Requested feature does not exist in the schema."""


class KindMismatchError(MetarecError):
    """Feature exists but has the wrong kind for the operation."""


class EmptyColumnError(MetarecError):
    """Percentile fitting requires at least one value."""


class MissingThresholdsError(MetarecError):
    """A numerical feature has no fitted bucket thresholds."""


class MissingPromptError(MetarecError):
    """A shortlisted candidate has no compiled prompt."""


class BackendUnavailableError(MetarecError):
    """Remote inference backend failed or timed out."""


class DimensionMismatchError(MetarecError):
    """Vector dimensions disagree."""


class ZeroVectorError(MetarecError):
    """Cosine similarity is undefined for a zero-norm vector."""


class EmptyIndexError(MetarecError):
    """Retrieval requested against an index with no entries."""


class DuplicateIdError(MetarecError):
    """Two documents share the same id."""


class FormatError(MetarecError):
    """Index file is corrupt or has an unsupported version."""


class RaggedRecordsError(MetarecError):
    """Annotation records disagree on annotator count."""
