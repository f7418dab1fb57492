"""Annotated-corpus handling: loading, splits, agreement, coverage.

A corpus is a directory of ``<doc-id>.ppxml`` files. Each title and
paragraph node is flattened into an AnnotatedNode carrying its text,
labels and local context (enclosing segment's title, nearest preceding
paragraph in the same container) so feature assembly never touches the
tree again.

Two split regimes are supported. Document-level splits assign whole
documents to train or test — the deployment-faithful setting. Segment-
level splits pool nodes across documents first, so one document can
straddle both sides; this regime is reproduced because it inflates
scores when documents carry private vocabulary.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CorpusError, SchemaError, TaxonomyError
from .ppxml import Paragraph, PolicyDocument, Segment, parse_ppxml
from .taxonomy import Taxonomy

NodeKey = tuple[str, str]  # (doc-id, node-id)


@dataclass(frozen=True)
class AnnotatedNode:
    node_id: str
    kind: str  # "title" | "paragraph"
    text: str
    labels: tuple[str, ...]
    parent_title_id: str | None = None
    preceding_sibling_id: str | None = None


def annotate_document(doc: PolicyDocument) -> list[AnnotatedNode]:
    """Flatten a document into context-carrying nodes, document order."""
    out: list[AnnotatedNode] = []

    def walk(children: list, parent_title_id: str | None):
        last_paragraph_id: str | None = None
        for child in children:
            if isinstance(child, Paragraph):
                out.append(AnnotatedNode(
                    node_id=child.node_id,
                    kind="paragraph",
                    text=child.text,
                    labels=tuple(child.labels),
                    parent_title_id=parent_title_id,
                    preceding_sibling_id=last_paragraph_id,
                ))
                last_paragraph_id = child.node_id
            else:
                assert isinstance(child, Segment)
                out.append(AnnotatedNode(
                    node_id=child.title.node_id,
                    kind="title",
                    text=child.title.text,
                    labels=tuple(child.title.labels),
                    parent_title_id=parent_title_id,
                    preceding_sibling_id=last_paragraph_id,
                ))
                walk(child.children, child.title.node_id)

    walk(doc.children, None)
    return out


@dataclass
class Corpus:
    documents: list[tuple[str, PolicyDocument]] = field(default_factory=list)
    doc_nodes: dict[str, list[AnnotatedNode]] = field(default_factory=dict)
    nodes: dict[NodeKey, AnnotatedNode] = field(default_factory=dict)

    @property
    def doc_ids(self) -> list[str]:
        return [doc_id for doc_id, _ in self.documents]

    def node_keys(self) -> list[NodeKey]:
        """All (doc-id, node-id) keys in deterministic corpus order."""
        keys = []
        for doc_id, _ in self.documents:
            keys.extend((doc_id, node.node_id)
                        for node in self.doc_nodes[doc_id])
        return keys

    def summary(self) -> dict[str, int]:
        titles = sum(1 for node in self.nodes.values() if node.kind == "title")
        paragraphs = len(self.nodes) - titles
        labeled = sum(1 for node in self.nodes.values() if node.labels)
        return {
            "documents": len(self.documents),
            "titles": titles,
            "paragraphs": paragraphs,
            "labeled_nodes": labeled,
        }


def build_corpus(documents: list[tuple[str, PolicyDocument]],
                 taxonomy: Taxonomy | None = None) -> Corpus:
    """Assemble and validate a corpus from in-memory documents."""
    corpus = Corpus()
    errors: list[str] = []
    seen: set[str] = set()
    for doc_id, doc in documents:
        if doc_id in seen:
            errors.append(f"{doc_id}: duplicate document id")
            continue
        seen.add(doc_id)
        nodes = annotate_document(doc)
        if taxonomy is not None:
            validated = []
            ok = True
            for node in nodes:
                try:
                    labels = taxonomy.validate_label_set(node.labels)
                except TaxonomyError as exc:
                    errors.append(f"{doc_id}: node {node.node_id}: {exc}")
                    ok = False
                    break
                validated.append(AnnotatedNode(
                    node_id=node.node_id, kind=node.kind, text=node.text,
                    labels=labels, parent_title_id=node.parent_title_id,
                    preceding_sibling_id=node.preceding_sibling_id,
                ))
            if not ok:
                continue
            nodes = validated
        corpus.documents.append((doc_id, doc))
        corpus.doc_nodes[doc_id] = nodes
        for node in nodes:
            corpus.nodes[(doc_id, node.node_id)] = node
    if errors:
        raise CorpusError("corpus validation failed:\n  " + "\n  ".join(errors))
    return corpus


def load_corpus(directory, taxonomy: Taxonomy | None = None) -> Corpus:
    """Load every ``*.ppxml`` under a directory (sorted by file name)."""
    directory = Path(directory)
    paths = sorted(directory.glob("*.ppxml"))
    if not paths:
        raise CorpusError(f"no documents found in {directory}")
    documents = []
    errors = []
    for path in paths:
        try:
            documents.append((path.stem, parse_ppxml(path.read_bytes())))
        except SchemaError as exc:
            errors.append(f"{path.name}: {exc}")
    if errors:
        raise CorpusError("corpus load failed:\n  " + "\n  ".join(errors))
    return build_corpus(documents, taxonomy)


def save_corpus(corpus: Corpus, directory) -> None:
    from .ppxml import serialize_ppxml

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for doc_id, doc in corpus.documents:
        (directory / f"{doc_id}.ppxml").write_bytes(serialize_ppxml(doc))


# Splits --------------------------------------------------------------------

@dataclass(frozen=True)
class SplitSpec:
    mode: str  # "document" | "segment"
    train_ids: tuple
    test_ids: tuple
    seed: int

    def train_node_keys(self, corpus: Corpus) -> list[NodeKey]:
        return self._node_keys(corpus, self.train_ids)

    def test_node_keys(self, corpus: Corpus) -> list[NodeKey]:
        return self._node_keys(corpus, self.test_ids)

    def _node_keys(self, corpus: Corpus, ids: tuple) -> list[NodeKey]:
        if self.mode == "document":
            selected = set(ids)
            return [key for key in corpus.node_keys() if key[0] in selected]
        return list(ids)


def split_document_level(corpus: Corpus, n_test: int, seed: int) -> SplitSpec:
    """Whole documents to one side each, uniformly at random."""
    doc_ids = sorted(corpus.doc_ids)
    if not 0 < n_test < len(doc_ids):
        raise CorpusError(
            f"bad n_test: must be between 1 and {len(doc_ids) - 1}, "
            f"got {n_test}"
        )
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(doc_ids))
    test = sorted(doc_ids[i] for i in order[:n_test])
    train = sorted(doc_ids[i] for i in order[n_test:])
    return SplitSpec(mode="document", train_ids=tuple(train),
                     test_ids=tuple(test), seed=seed)


def split_segment_level(corpus: Corpus, test_fraction: float,
                        seed: int) -> SplitSpec:
    """Nodes pooled across documents, then split at random. Documents may
    straddle the split — reproduced deliberately; see module docstring."""
    if not 0 < test_fraction < 1:
        raise CorpusError(
            f"bad test_fraction: must be in (0, 1), got {test_fraction}"
        )
    keys = sorted(corpus.node_keys())
    if len(keys) < 2:
        raise CorpusError("corpus too small to split: fewer than 2 nodes")
    n_test = int(round(test_fraction * len(keys)))
    n_test = min(max(n_test, 1), len(keys) - 1)
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(keys))
    test = sorted(keys[i] for i in order[:n_test])
    train = sorted(keys[i] for i in order[n_test:])
    return SplitSpec(mode="segment", train_ids=tuple(train),
                     test_ids=tuple(test), seed=seed)


def save_split(split: SplitSpec, path) -> None:
    """Text format: `#mode=` header, then one key per line per section."""
    lines = [f"#mode={split.mode}", f"#seed={split.seed}", "#train"]
    lines.extend(_format_key(split.mode, key) for key in split.train_ids)
    lines.append("#test")
    lines.extend(_format_key(split.mode, key) for key in split.test_ids)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_split(path) -> SplitSpec:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("#mode="):
        raise CorpusError(f"{path}: missing #mode= header")
    mode = lines[0][len("#mode="):]
    if mode not in ("document", "segment"):
        raise CorpusError(f"{path}: unknown split mode {mode!r}")
    seed = 0
    sections: dict[str, list] = {"train": [], "test": []}
    current: str | None = None
    for line in lines[1:]:
        if not line.strip():
            continue
        if line.startswith("#seed="):
            seed = int(line[len("#seed="):])
        elif line == "#train":
            current = "train"
        elif line == "#test":
            current = "test"
        elif line.startswith("#"):
            continue
        else:
            if current is None:
                raise CorpusError(f"{path}: key before #train/#test section")
            sections[current].append(_parse_key(mode, line))
    return SplitSpec(mode=mode, train_ids=tuple(sections["train"]),
                     test_ids=tuple(sections["test"]), seed=seed)


def _format_key(mode: str, key) -> str:
    return key if mode == "document" else f"{key[0]}/{key[1]}"


def _parse_key(mode: str, line: str):
    if mode == "document":
        return line.strip()
    doc_id, _, node_id = line.strip().rpartition("/")
    if not doc_id:
        raise CorpusError(f"malformed segment-mode key: {line!r}")
    return (doc_id, node_id)


# Agreement ------------------------------------------------------------------

def cohens_kappa(a: list[bool], b: list[bool]) -> float:
    """Chance-corrected agreement between two binary judgment lists."""
    if len(a) != len(b):
        raise CorpusError(f"length mismatch: {len(a)} vs {len(b)}")
    if not a:
        raise CorpusError("empty judgment lists")
    n = len(a)
    a_arr = np.asarray(a, dtype=bool)
    b_arr = np.asarray(b, dtype=bool)
    p_observed = float((a_arr == b_arr).mean())
    p_a = float(a_arr.mean())
    p_b = float(b_arr.mean())
    p_expected = p_a * p_b + (1.0 - p_a) * (1.0 - p_b)
    if p_expected == 1.0:
        # Both raters constant and agreeing: perfect agreement by convention.
        return 1.0
    return (p_observed - p_expected) / (1.0 - p_expected)


def kappa_from_counts(both_yes: int, a_only: int, b_only: int,
                      both_no: int) -> float:
    a = [True] * both_yes + [True] * a_only + [False] * b_only + [False] * both_no
    b = [True] * both_yes + [False] * a_only + [True] * b_only + [False] * both_no
    return cohens_kappa(a, b)


def corpus_agreement(corpus_a: Corpus, corpus_b: Corpus,
                     taxonomy: Taxonomy) -> dict:
    """Per-document agreement between two annotation passes.

    For each document and each concept that either pass used anywhere in
    it, the per-node presence judgments of the two passes are compared
    with Cohen's kappa; a document's score is the mean over those
    concepts, and the overall score is the mean over documents.
    """
    ids_a = set(corpus_a.doc_nodes)
    ids_b = set(corpus_b.doc_nodes)
    shared = sorted(ids_a & ids_b)
    if not shared:
        raise CorpusError("no documents in common between the two corpora")
    per_document: dict[str, float] = {}
    for doc_id in shared:
        nodes_a = {n.node_id: n for n in corpus_a.doc_nodes[doc_id]}
        nodes_b = {n.node_id: n for n in corpus_b.doc_nodes[doc_id]}
        if set(nodes_a) != set(nodes_b):
            raise CorpusError(
                f"{doc_id}: node sets differ between the two corpora"
            )
        node_ids = sorted(nodes_a)
        used = set()
        for node in nodes_a.values():
            used.update(node.labels)
        for node in nodes_b.values():
            used.update(node.labels)
        used = sorted(used, key=taxonomy.file_order)
        if not used:
            per_document[doc_id] = 1.0
            continue
        scores = []
        for concept in used:
            judgments_a = [concept in nodes_a[i].labels for i in node_ids]
            judgments_b = [concept in nodes_b[i].labels for i in node_ids]
            scores.append(cohens_kappa(judgments_a, judgments_b))
        per_document[doc_id] = float(np.mean(scores))
    overall = float(np.mean(list(per_document.values())))
    return {"per_document": per_document, "mean": overall,
            "unit": "per-concept node-level presence, averaged over "
                    "concepts then documents"}


# Coverage -------------------------------------------------------------------

def corpus_statistics(corpus: Corpus, taxonomy: Taxonomy,
                      descendant_inclusive: bool = False) -> list[tuple]:
    """(concept_id, docs_covered, coverage_fraction) in taxonomy order.

    A document covers a concept when at least one of its nodes carries
    that exact label; with descendant_inclusive, labels on descendant
    concepts count too.
    """
    n_docs = len(corpus.documents)
    rows = []
    for concept_id in taxonomy.ordered_ids:
        matching = {concept_id}
        if descendant_inclusive:
            matching.update(taxonomy.descendants_of(concept_id))
        covered = 0
        for doc_id, _ in corpus.documents:
            if any(matching.intersection(node.labels)
                   for node in corpus.doc_nodes[doc_id]):
                covered += 1
        fraction = covered / n_docs if n_docs else 0.0
        rows.append((concept_id, covered, fraction))
    return rows


def write_statistics_csv(rows: list[tuple], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["concept_id", "docs_covered", "coverage_fraction"])
        for concept_id, covered, fraction in rows:
            writer.writerow([concept_id, covered, f"{fraction:.6f}"])
