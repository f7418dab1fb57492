"""Offline embedding exporter for policy XML corpora.

Walks every title and paragraph node of a ``.ppxml`` corpus directory,
runs each node's text through a pretrained transformer encoder, and
writes the embedding-store text file (``#dim=<D>`` header, one
``<doc-id>/<node-id>\\t<floats>`` record per node) that the ppkit
feature assembler consumes. Embeddings are precomputed here, offline,
so the consuming toolkit stays free of ML-runtime dependencies and
experiments replay from a frozen file.
"""

from .export import (DEFAULT_MODEL_ID, SidecarConfig, SidecarError,
                     export_embeddings)

__all__ = [
    "DEFAULT_MODEL_ID",
    "SidecarConfig",
    "SidecarError",
    "export_embeddings",
]
