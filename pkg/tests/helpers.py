"""Shared builders for synthetic corpora, DOM trees and block samples.

Everything here is deterministic given the seeds passed in; the builders
are used by both the unit tests and the acceptance suite.
"""

from __future__ import annotations

import numpy as np

from ppkit.corpus import Corpus, build_corpus
from ppkit.html_dom import DomNode, visible_text
from ppkit.ppxml import Paragraph, PolicyDocument, Segment, Title
from ppkit.structure import BlockClass, BlockFeatures
from ppkit.taxonomy import Taxonomy, build_taxonomy

# Taxonomies -----------------------------------------------------------------

SMALL_TAXONOMY_ENTRIES = [
    (1, "ALPHA"),
    (2, "ALPHA.ONE"),
    (2, "ALPHA.TWO"),
    (3, "ALPHA.TWO.DEEP"),
    (1, "BETA"),
    (2, "BETA.ONE"),
    (2, "BETA.TWO"),
    (1, "GAMMA"),
]


def small_taxonomy() -> Taxonomy:
    return build_taxonomy(list(SMALL_TAXONOMY_ENTRIES))


# Labeled corpora ------------------------------------------------------------

def simple_document(doc_id: str, concepts: list[str], text_for,
                    paragraphs_per_concept: int = 3,
                    label_titles: bool = True) -> PolicyDocument:
    """One level-1 segment per concept; node text from text_for(concept, i)
    with i=0 for the title."""
    doc = PolicyDocument(source=doc_id)
    counter = 0

    def next_id() -> str:
        nonlocal counter
        counter += 1
        return f"n{counter:04d}"

    for position, concept in enumerate(concepts, start=1):
        title = Title(
            node_id=next_id(),
            text=f"{position}. {text_for(concept, 0)}",
            labels=(concept,) if label_titles else (),
        )
        segment = Segment(level=1, title=title)
        for i in range(1, paragraphs_per_concept + 1):
            segment.children.append(Paragraph(
                node_id=next_id(), text=text_for(concept, i),
                labels=(concept,),
            ))
        doc.children.append(segment)
    return doc


def trigger_corpus(taxonomy: Taxonomy, concepts: list[str], n_docs: int,
                   paragraphs_per_concept: int = 3,
                   private_triggers: bool = True) -> Corpus:
    """Corpus where each (document, concept) pair has its own trigger token.

    With private_triggers=True, the only signal tying text to a concept
    is a token unique to that document — learnable when nodes of the same
    document leak into training (segment-level split), useless on held-out
    documents (document-level split). With private_triggers=False the
    trigger is shared across documents, so both split modes can learn it.
    """
    background = "this clause describes how information is handled"
    documents = []
    for d in range(n_docs):
        def text_for(concept: str, i: int, d=d) -> str:
            c = concepts.index(concept)
            scope = f"d{d:02d}" if private_triggers else "shared"
            trigger = f"trig{scope}c{c}"
            return f"{trigger} {background} part{i}"

        documents.append((
            f"doc{d:03d}",
            simple_document(f"doc{d:03d}", concepts, text_for,
                            paragraphs_per_concept=paragraphs_per_concept),
        ))
    return build_corpus(documents, taxonomy)


def leakage_corpus(taxonomy: Taxonomy, n_docs: int = 50,
                   n_concepts: int = 8) -> Corpus:
    """The segment-vs-document gap corpus: 50 documents whose concept
    evidence is entirely document-private."""
    concepts = taxonomy.roots[:n_concepts]
    assert len(concepts) == n_concepts
    return trigger_corpus(taxonomy, concepts, n_docs,
                          paragraphs_per_concept=3, private_triggers=True)


# DOM generation for the policy-element locator ------------------------------

def _text_node(tag: str, text: str) -> DomNode:
    node = DomNode(tag=tag)
    node.add_text(text)
    return node


def planted_dom(rng: np.random.Generator) -> tuple[DomNode, DomNode]:
    """(root, planted) where `planted` is the unique element whose children
    have uniform visible-text lengths and which holds >= 90% of the page
    text; every ancestor has clearly non-uniform children."""
    n_children = int(rng.integers(3, 9))
    child_len = int(rng.integers(200, 1200))
    planted = DomNode(tag="div", attrs={"id": "planted"})
    for _ in range(n_children):
        planted.children.append(_text_node("p", "y" * child_len))
    total_planted = n_children * child_len

    depth = int(rng.integers(1, 4))
    current = planted
    for level in range(depth):
        wrapper = DomNode(tag="div")
        # Small, clearly different sibling lengths keep ancestor children
        # non-uniform (positive spread) without approaching the 90% share.
        decoys = int(rng.integers(2, 4))
        budget = max(4, total_planted // 100)
        for k in range(decoys):
            wrapper.children.append(_text_node("p", "z" * (2 + k * budget)))
        insert_at = int(rng.integers(0, decoys + 1))
        wrapper.children.insert(insert_at, current)
        current = wrapper
    body = DomNode(tag="body")
    body.children.append(current)
    root = DomNode(tag="html")
    root.children.append(body)
    return root, planted


def children_uniform(node: DomNode) -> bool:
    if len(node.children) < 2:
        return False
    lengths = {len(visible_text(child)) for child in node.children}
    return len(lengths) == 1


def brute_force_planted(root: DomNode) -> DomNode | None:
    """Deepest element with uniform children lengths holding >= 90% of the
    root's visible text — the locator's independent oracle."""
    total = len(visible_text(root))
    best = None
    best_depth = -1

    def walk(node: DomNode, depth: int) -> None:
        nonlocal best, best_depth
        if (children_uniform(node)
                and len(visible_text(node)) >= 0.9 * total
                and depth > best_depth):
            best, best_depth = node, depth
        for child in node.children:
            walk(child, depth + 1)

    walk(root, 0)
    return best


# Separable block samples ----------------------------------------------------

_TITLE_SIZES = {1: 32.0, 2: 24.0, 3: 18.72, 4: 16.0}


def separable_block_samples(rng: np.random.Generator, n: int):
    """(features, class) pairs where titles are short/bold/large with a
    level-deep ordinal label and paragraphs are long and plain."""
    samples = []
    classes = [BlockClass.TITLE_L1, BlockClass.TITLE_L2, BlockClass.TITLE_L3,
               BlockClass.TITLE_L4, BlockClass.PARAGRAPH]
    for i in range(n):
        block_class = classes[i % len(classes)]
        level = block_class.title_level
        if level is not None:
            lol = [0] * 12
            for slot in range(level):
                lol[slot * 3] = 1  # Arabic
                lol[slot * 3 + 1] = int(rng.integers(1, 9))
                lol[slot * 3 + 2] = 1  # full stop
            features = BlockFeatures(
                text_length=int(rng.integers(8, 40)),
                font_size=_TITLE_SIZES[level] + float(rng.normal(0, 0.2)),
                font_weight=700.0,
                is_italic=0,
                is_underlined=0,
                dom_depth=int(rng.integers(1, 5)),
                tag_code=level,
                lol=lol,
            )
        else:
            features = BlockFeatures(
                text_length=int(rng.integers(150, 900)),
                font_size=16.0,
                font_weight=400.0,
                is_italic=0,
                is_underlined=0,
                dom_depth=int(rng.integers(1, 6)),
                tag_code=7,
                lol=[0] * 12,
            )
        samples.append((features, block_class))
    return samples
