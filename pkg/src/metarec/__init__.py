"""Metadata-only two-stage semantic retrieval.

Compiles document metadata into textual prompts, retrieves candidates by
cosine similarity over cached embeddings, re-ranks with a batched pair
scorer, and serves the results over HTTP.
"""

__version__ = "0.1.0"
