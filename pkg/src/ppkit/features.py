"""Feature assembly for concept classification.

Three ingredient families feed twelve classifier input layouts:

- TF-IDF vectors of a node's text (300-D by default), of the enclosing
  segment's title (its own 100-term vocabulary fitted on titles), and of
  the nearest preceding paragraph in the same container (reusing the
  node vocabulary).
- A 96-D binary keyword indicator, one dimension per taxonomy concept in
  file order.
- Precomputed text embeddings loaded from a store file.

Layouts 1-6 pair with per-concept binary forests, 7-12 with per-parent
networks; within each group: current only; +context; +keywords;
+context+keywords; embedding; embedding+context.
"""

from __future__ import annotations

import csv
import math
import re
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import AnnotatedNode, Corpus, NodeKey
from .errors import FeatureError
from .taxonomy import Taxonomy

_TOKEN_RUN = re.compile(r"[0-9a-z]+")

DEFAULT_CURRENT_DIM = 300
DEFAULT_PARENT_DIM = 100
KEYWORD_DIMS = 96


def tokenize(text: str) -> list[str]:
    """Lowercase alphanumeric runs, single-character tokens dropped."""
    return [t for t in _TOKEN_RUN.findall(text.lower()) if len(t) > 1]


# TF-IDF ---------------------------------------------------------------------

@dataclass(frozen=True)
class Vocabulary:
    terms: tuple[str, ...]
    document_frequency: tuple[int, ...]
    n_documents: int

    def __post_init__(self):
        object.__setattr__(
            self, "_index", {term: i for i, term in enumerate(self.terms)}
        )

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def index(self) -> dict[str, int]:
        return self._index

    def to_meta(self) -> dict:
        return {
            "terms": list(self.terms),
            "document_frequency": list(self.document_frequency),
            "n_documents": self.n_documents,
        }

    @classmethod
    def from_meta(cls, meta: dict) -> "Vocabulary":
        return cls(
            terms=tuple(meta["terms"]),
            document_frequency=tuple(meta["document_frequency"]),
            n_documents=meta["n_documents"],
        )


def fit_tfidf(texts: list[str], dim: int) -> Vocabulary:
    """Top-``dim`` terms by document frequency (ties lexicographic)."""
    if dim < 1:
        raise FeatureError(f"dimension must be >= 1, got {dim}")
    df: dict[str, int] = {}
    n_documents = 0
    for text in texts:
        n_documents += 1
        for term in set(tokenize(text)):
            df[term] = df.get(term, 0) + 1
    if not df:
        raise FeatureError("empty corpus vocabulary")
    ranked = sorted(df.items(), key=lambda kv: (-kv[1], kv[0]))
    if dim > len(ranked):
        warnings.warn(
            f"vocabulary shrunk to {len(ranked)} terms "
            f"(requested {dim}, corpus has fewer distinct terms)",
            RuntimeWarning,
            stacklevel=2,
        )
        dim = len(ranked)
    chosen = ranked[:dim]
    return Vocabulary(
        terms=tuple(term for term, _ in chosen),
        document_frequency=tuple(count for _, count in chosen),
        n_documents=n_documents,
    )


def transform_tfidf(vocabulary: Vocabulary, text: str) -> np.ndarray:
    """tf·ln(N/df) weights, L2-normalized unless all-zero."""
    vector = np.zeros(len(vocabulary))
    index = vocabulary.index
    for token in tokenize(text):
        i = index.get(token)
        if i is not None:
            vector[i] += 1.0
    if vector.any():
        n = vocabulary.n_documents
        df = np.asarray(vocabulary.document_frequency, dtype=np.float64)
        vector *= np.log(n / df)
        norm = math.sqrt(float(vector @ vector))
        if norm > 0.0:
            vector /= norm
    return vector


# Keywords --------------------------------------------------------------------

@dataclass(frozen=True)
class KeywordTable:
    # concept-id -> tuple of keyword token-sequences (phrases allowed)
    phrases: dict[str, tuple[tuple[str, ...], ...]]

    def concepts(self) -> list[str]:
        return list(self.phrases)


def _phrase_tokens(keyword: str) -> tuple[str, ...]:
    return tuple(_TOKEN_RUN.findall(keyword.lower()))


def load_keywords(path, taxonomy: Taxonomy) -> KeywordTable:
    """Load the per-concept keyword CSV; every concept must be covered."""
    table: dict[str, list[tuple[str, ...]]] = {}
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != ["concept_id", "keyword"]:
            raise FeatureError(
                f"{path}: expected header concept_id,keyword, got {header}"
            )
        for row_number, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 2:
                raise FeatureError(f"{path}:{row_number}: expected 2 columns")
            concept_id, keyword = row[0].strip(), row[1].strip()
            if concept_id not in taxonomy:
                raise FeatureError(
                    f"{path}:{row_number}: unknown concept {concept_id!r}"
                )
            tokens = _phrase_tokens(keyword)
            if not tokens:
                raise FeatureError(
                    f"{path}:{row_number}: empty keyword for {concept_id}"
                )
            table.setdefault(concept_id, []).append(tokens)
    missing = [cid for cid in taxonomy.ordered_ids if cid not in table]
    if missing:
        raise FeatureError(
            f"{path}: concepts without keywords: {', '.join(missing[:5])}"
            + (f" (+{len(missing) - 5} more)" if len(missing) > 5 else "")
        )
    return KeywordTable(
        phrases={cid: tuple(table[cid]) for cid in taxonomy.ordered_ids}
    )


def shipped_keywords_path() -> Path:
    from importlib import resources

    return Path(resources.files("ppkit").joinpath("data/keywords.csv"))  # type: ignore[arg-type]


def load_shipped_keywords(taxonomy: Taxonomy) -> KeywordTable:
    return load_keywords(shipped_keywords_path(), taxonomy)


def keyword_vector(table: KeywordTable, taxonomy: Taxonomy,
                   text: str) -> np.ndarray:
    """Binary concept indicators from whole-token keyword matches."""
    tokens = _TOKEN_RUN.findall(text.lower())
    token_set = set(tokens)
    vector = np.zeros(len(taxonomy.ordered_ids))
    for position, concept_id in enumerate(taxonomy.ordered_ids):
        for phrase in table.phrases.get(concept_id, ()):
            if len(phrase) == 1:
                if phrase[0] in token_set:
                    vector[position] = 1.0
                    break
            elif _contains_subsequence(tokens, phrase):
                vector[position] = 1.0
                break
    return vector


def _contains_subsequence(tokens: list[str], phrase: tuple[str, ...]) -> bool:
    span = len(phrase)
    for start in range(len(tokens) - span + 1):
        if tuple(tokens[start:start + span]) == phrase:
            return True
    return False


# Embedding store ---------------------------------------------------------------

class EmbeddingStore:
    """Precomputed node vectors; unknown keys read back as zero vectors
    (counted, so silent coverage gaps stay visible)."""

    def __init__(self, dimension: int,
                 vectors: dict[NodeKey, np.ndarray]):
        self.dimension = dimension
        self.vectors = vectors
        self.missing_lookups = 0

    def __len__(self) -> int:
        return len(self.vectors)

    def lookup(self, doc_id: str, node_id: str) -> np.ndarray:
        vector = self.vectors.get((doc_id, node_id))
        if vector is None:
            self.missing_lookups += 1
            return np.zeros(self.dimension)
        return vector


def load_embeddings(path) -> EmbeddingStore:
    """Load the text store: `#dim=<D>` header, then
    `<doc-id>/<node-id>\\t<D floats>` records."""
    path = Path(path)
    vectors: dict[NodeKey, np.ndarray] = {}
    with open(path, encoding="utf-8") as handle:
        header = handle.readline().rstrip("\n")
        match = re.fullmatch(r"#dim=(\d+)", header)
        if not match:
            raise FeatureError(
                f"{path}: first line must be #dim=<D>, got {header!r}"
            )
        dimension = int(match.group(1))
        if dimension < 1:
            raise FeatureError(f"{path}: dimension must be >= 1")
        for line_number, line in enumerate(handle, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            key_part, sep, value_part = line.partition("\t")
            if not sep:
                raise FeatureError(
                    f"{path}:{line_number}: record has no tab separator"
                )
            doc_id, _, node_id = key_part.rpartition("/")
            if not doc_id:
                raise FeatureError(
                    f"{path}:{line_number}: malformed key {key_part!r}"
                )
            values = value_part.split()
            if len(values) != dimension:
                raise FeatureError(
                    f"{path}:{line_number}: record {key_part} has "
                    f"{len(values)} floats, expected {dimension}"
                )
            key = (doc_id, node_id)
            if key in vectors:
                raise FeatureError(
                    f"{path}:{line_number}: duplicate key {key_part}"
                )
            vectors[key] = np.array([float(v) for v in values])
    return EmbeddingStore(dimension=dimension, vectors=vectors)


def write_embedding_store(path, dimension: int,
                          records: list[tuple[NodeKey, np.ndarray]]) -> None:
    """Write the store format (fixed 6-decimal floats, reproducible)."""
    lines = [f"#dim={dimension}"]
    for (doc_id, node_id), vector in records:
        if len(vector) != dimension:
            raise FeatureError(
                f"record {doc_id}/{node_id} has {len(vector)} floats, "
                f"expected {dimension}"
            )
        values = " ".join(f"{float(v):.6f}" for v in vector)
        lines.append(f"{doc_id}/{node_id}\t{values}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# Configurations ----------------------------------------------------------------

_LAYOUTS = {
    1: ("tfidf", False, False),
    2: ("tfidf", True, False),
    3: ("tfidf", False, True),
    4: ("tfidf", True, True),
    5: ("embedding", False, False),
    6: ("embedding", True, False),
}


@dataclass(frozen=True)
class FeatureConfig:
    type_id: int
    source: str  # "tfidf" | "embedding"
    use_context: bool
    use_keywords: bool
    current_dim: int = DEFAULT_CURRENT_DIM
    parent_dim: int = DEFAULT_PARENT_DIM

    @classmethod
    def from_type_id(cls, type_id: int,
                     current_dim: int = DEFAULT_CURRENT_DIM,
                     parent_dim: int = DEFAULT_PARENT_DIM) -> "FeatureConfig":
        if type_id not in range(1, 13):
            raise FeatureError(f"type id must be 1..12, got {type_id}")
        source, use_context, use_keywords = _LAYOUTS[(type_id - 1) % 6 + 1]
        return cls(type_id=type_id, source=source, use_context=use_context,
                   use_keywords=use_keywords, current_dim=current_dim,
                   parent_dim=parent_dim)

    @property
    def architecture(self) -> str:
        """Binary per-concept forests (1-6) or per-parent networks (7-12)."""
        return "lcn" if self.type_id <= 6 else "lcpn"

    def expected_dim(self, store_dim: int | None = None,
                     n_concepts: int = KEYWORD_DIMS) -> int:
        if self.source == "embedding":
            if store_dim is None:
                raise FeatureError(
                    f"embedding store required for type {self.type_id}"
                )
            base = store_dim
            parent = sibling = store_dim
        else:
            base = self.current_dim
            parent = self.parent_dim
            sibling = self.current_dim
        total = base
        if self.use_context:
            total += parent + sibling
        if self.use_keywords:
            total += n_concepts
        return total

    def to_meta(self) -> dict:
        return {
            "type_id": self.type_id,
            "source": self.source,
            "use_context": self.use_context,
            "use_keywords": self.use_keywords,
            "current_dim": self.current_dim,
            "parent_dim": self.parent_dim,
        }

    @classmethod
    def from_meta(cls, meta: dict) -> "FeatureConfig":
        return cls(
            type_id=meta["type_id"], source=meta["source"],
            use_context=meta["use_context"],
            use_keywords=meta["use_keywords"],
            current_dim=meta["current_dim"], parent_dim=meta["parent_dim"],
        )


@dataclass
class FeatureResources:
    taxonomy: Taxonomy
    vocabulary: Vocabulary | None = None
    title_vocabulary: Vocabulary | None = None
    keywords: KeywordTable | None = None
    store: EmbeddingStore | None = None


def fit_resources(cfg: FeatureConfig, corpus: Corpus,
                  train_keys: list[NodeKey], taxonomy: Taxonomy,
                  keywords: KeywordTable | None = None,
                  store: EmbeddingStore | None = None) -> FeatureResources:
    """Fit vocabularies on the training side only (no test leakage)."""
    resources = FeatureResources(taxonomy=taxonomy, keywords=keywords,
                                 store=store)
    if cfg.source == "tfidf":
        texts = [corpus.nodes[key].text for key in train_keys]
        resources.vocabulary = fit_tfidf(texts, cfg.current_dim)
        if cfg.use_context:
            title_texts = [corpus.nodes[key].text for key in train_keys
                           if corpus.nodes[key].kind == "title"]
            if not title_texts:
                title_texts = texts
            resources.title_vocabulary = fit_tfidf(title_texts, cfg.parent_dim)
    if cfg.use_keywords and keywords is None:
        raise FeatureError(f"keyword table required for type {cfg.type_id}")
    if cfg.source == "embedding" and store is None:
        raise FeatureError(f"embedding store required for type {cfg.type_id}")
    return resources


def _context_nodes(corpus: Corpus, doc_id: str, node: AnnotatedNode):
    parent = None
    sibling = None
    if node.parent_title_id is not None:
        parent = corpus.nodes.get((doc_id, node.parent_title_id))
    if node.preceding_sibling_id is not None:
        sibling = corpus.nodes.get((doc_id, node.preceding_sibling_id))
    return parent, sibling


def assemble_features(cfg: FeatureConfig, corpus: Corpus, doc_id: str,
                      node: AnnotatedNode,
                      resources: FeatureResources) -> np.ndarray:
    """Fixed-order concatenation [current | parent? | sibling? | keywords?];
    absent context contributes zero blocks."""
    parts: list[np.ndarray] = []
    parent, sibling = (None, None)
    if cfg.use_context:
        parent, sibling = _context_nodes(corpus, doc_id, node)
    if cfg.source == "embedding":
        store = resources.store
        if store is None:
            raise FeatureError(
                f"embedding store required for type {cfg.type_id}"
            )
        parts.append(store.lookup(doc_id, node.node_id))
        if cfg.use_context:
            parts.append(store.lookup(doc_id, parent.node_id)
                         if parent else np.zeros(store.dimension))
            parts.append(store.lookup(doc_id, sibling.node_id)
                         if sibling else np.zeros(store.dimension))
    else:
        vocabulary = resources.vocabulary
        if vocabulary is None:
            raise FeatureError(
                f"fitted vocabulary required for type {cfg.type_id}"
            )
        parts.append(transform_tfidf(vocabulary, node.text))
        if cfg.use_context:
            title_vocabulary = resources.title_vocabulary
            if title_vocabulary is None:
                raise FeatureError(
                    f"fitted title vocabulary required for type {cfg.type_id}"
                )
            parts.append(transform_tfidf(title_vocabulary, parent.text)
                         if parent else np.zeros(len(title_vocabulary)))
            parts.append(transform_tfidf(vocabulary, sibling.text)
                         if sibling else np.zeros(len(vocabulary)))
    if cfg.use_keywords:
        if resources.keywords is None:
            raise FeatureError(
                f"keyword table required for type {cfg.type_id}"
            )
        parts.append(keyword_vector(resources.keywords, resources.taxonomy,
                                    node.text))
    return np.concatenate(parts)


def features_for_keys(cfg: FeatureConfig, corpus: Corpus,
                      keys: list[NodeKey],
                      resources: FeatureResources) -> np.ndarray:
    """Feature matrix for the given node keys, rows in key order."""
    if not keys:
        store_dim = resources.store.dimension if resources.store else None
        n_concepts = len(resources.taxonomy.ordered_ids)
        return np.zeros((0, cfg.expected_dim(store_dim, n_concepts)))
    rows = [
        assemble_features(cfg, corpus, doc_id, corpus.nodes[(doc_id, node_id)],
                          resources)
        for doc_id, node_id in keys
    ]
    return np.stack(rows)
