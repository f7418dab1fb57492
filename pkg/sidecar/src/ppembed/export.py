"""Corpus walking, batched encoder inference, and store writing.

The corpus side speaks only the policy XML file format: ``<title>`` and
``<paragraph>`` elements carry an ``id`` attribute and their own text;
nested ``<list>/<item>`` content belongs to the list structure and is
not part of the node's text. The output side speaks only the
embedding-store text format (fixed 6-decimal floats, one record per
node, reproducible bytes for identical inputs and config).
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path

import numpy as np

DEFAULT_MODEL_ID = "mukund/privbert"  # privacy-policy-domain pretrained encoder
POOLING_MODES = ("mean", "leading")
NODE_TAGS = ("title", "paragraph")


class SidecarError(Exception):
    """Corpus, config, or encoder problem; message names the culprit."""


@dataclass(frozen=True)
class SidecarConfig:
    model_id: str = DEFAULT_MODEL_ID
    pooling: str = "mean"  # mean-over-tokens | leading token position
    max_length: int = 512  # tokenizer truncation bound
    batch_size: int = 16

    def __post_init__(self):
        if self.pooling not in POOLING_MODES:
            raise SidecarError(
                f"unknown pooling {self.pooling!r} "
                f"(choose one of {', '.join(POOLING_MODES)})"
            )
        if self.max_length < 1:
            raise SidecarError(f"max_length must be >= 1, got {self.max_length}")
        if self.batch_size < 1:
            raise SidecarError(f"batch_size must be >= 1, got {self.batch_size}")


# Corpus walking ---------------------------------------------------------------


def collect_nodes(corpus_dir) -> list[tuple[str, str, str]]:
    """(doc_id, node_id, text) for every title/paragraph, document order.

    Documents are visited in sorted filename order so the export is
    reproducible regardless of filesystem enumeration order.
    """
    directory = Path(corpus_dir)
    if not directory.is_dir():
        raise SidecarError(f"corpus directory not found: {directory}")
    files = sorted(directory.glob("*.ppxml"))
    if not files:
        raise SidecarError(f"empty corpus: no .ppxml files in {directory}")
    records: list[tuple[str, str, str]] = []
    for path in files:
        doc_id = path.stem
        try:
            root = ET.parse(path).getroot()
        except ET.ParseError as exc:
            raise SidecarError(f"{path.name}: not well-formed XML ({exc})")
        seen: set[str] = set()
        for element in root.iter():
            if element.tag not in NODE_TAGS:
                continue
            node_id = element.get("id")
            if node_id is None:
                raise SidecarError(
                    f"{path.name}: <{element.tag}> missing id attribute"
                )
            if node_id in seen:
                raise SidecarError(
                    f"{path.name}: duplicate node id {node_id!r}"
                )
            seen.add(node_id)
            records.append((doc_id, node_id, (element.text or "").strip()))
    if not records:
        raise SidecarError(
            f"empty corpus: no title or paragraph nodes in {directory}"
        )
    return records


# Encoding ----------------------------------------------------------------------


def _load_encoder(model_id: str):
    import torch
    from transformers import AutoModel, AutoTokenizer

    try:
        tokenizer = AutoTokenizer.from_pretrained(model_id)
        model = AutoModel.from_pretrained(model_id)
    except Exception as exc:
        raise SidecarError(f"cannot load encoder {model_id!r}: {exc}") from exc
    model.eval()
    return tokenizer, model, torch


def encode_texts(texts: list[str], cfg: SidecarConfig) -> np.ndarray:
    """One vector per text; empty texts map to the zero vector."""
    tokenizer, model, torch = _load_encoder(cfg.model_id)
    dimension = int(model.config.hidden_size)
    vectors = np.zeros((len(texts), dimension), dtype=np.float32)
    live = [i for i, text in enumerate(texts) if text]
    with torch.no_grad():
        for start in range(0, len(live), cfg.batch_size):
            batch = live[start:start + cfg.batch_size]
            encoded = tokenizer(
                [texts[i] for i in batch],
                return_tensors="pt",
                padding=True,
                truncation=True,
                max_length=cfg.max_length,
            )
            hidden = model(**encoded).last_hidden_state
            if cfg.pooling == "mean":
                mask = encoded["attention_mask"].unsqueeze(-1).to(hidden.dtype)
                pooled = (hidden * mask).sum(dim=1) / mask.sum(dim=1).clamp(min=1.0)
            else:
                pooled = hidden[:, 0, :]
            vectors[batch] = pooled.numpy()
    return vectors


# Store writing -------------------------------------------------------------------


def write_store(path, dimension: int,
                records: list[tuple[str, str, np.ndarray]]) -> None:
    lines = [f"#dim={dimension}"]
    for doc_id, node_id, vector in records:
        values = " ".join(f"{float(v):.6f}" for v in vector)
        lines.append(f"{doc_id}/{node_id}\t{values}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def export_embeddings(corpus_dir, out_path, cfg: SidecarConfig | None = None) -> int:
    """Embed every node of the corpus into `out_path`; returns record count."""
    cfg = cfg or SidecarConfig()
    nodes = collect_nodes(corpus_dir)
    vectors = encode_texts([text for _, _, text in nodes], cfg)
    write_store(out_path, vectors.shape[1],
                [(doc_id, node_id, vectors[i])
                 for i, (doc_id, node_id, _) in enumerate(nodes)])
    return len(nodes)
