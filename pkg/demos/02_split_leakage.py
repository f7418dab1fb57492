"""Why segment-level splits overstate classifier quality.

Policy corpora are labeled at the node level, so it is tempting to pool
all nodes and split them at random ("segment-level"). But nodes from
the same document then land on both sides of the split, and anything
document-specific — vocabulary, phrasing, boilerplate — leaks from
train to test. A document-level split keeps every document whole on one
side and measures what actually matters: performance on unseen
documents.

This script makes the leak visible with a corpus built so that the only
evidence tying text to a concept is a token private to each document.
A classifier can ace the segment-level split by memorizing those tokens
and must fail the document-level split, where the test documents'
tokens were never seen. Real corpora sit between these extremes; the
gap is the point.
"""

import warnings

from ppkit.corpus import Corpus, annotate_document
from ppkit.evaluation import compare_frameworks, format_summary_table
from ppkit.forest import ForestConfig
from ppkit.ppxml import Paragraph, PolicyDocument, Segment, Title
from ppkit.taxonomy import build_taxonomy

CONCEPTS = ["DATA COLLECTION", "DATA SHARING", "RETENTION", "USER RIGHTS"]


def build_leaky_corpus(n_docs: int = 30) -> Corpus:
    """Each (document, concept) pair gets its own trigger token."""
    corpus = Corpus()
    for d in range(n_docs):
        doc_id = f"doc{d:03d}"
        doc = PolicyDocument(source=doc_id)
        counter = 0
        for c, concept in enumerate(CONCEPTS):
            trigger = f"trig{doc_id}c{c}"
            counter += 1
            segment = Segment(level=1, title=Title(
                node_id=f"n{counter:04d}",
                text=f"{c + 1}. {trigger} this clause describes how "
                     f"information is handled",
                labels=(concept,),
            ))
            for i in range(3):
                counter += 1
                segment.children.append(Paragraph(
                    node_id=f"n{counter:04d}",
                    text=f"{trigger} this clause describes how information "
                         f"is handled part{i}",
                    labels=(concept,),
                ))
            doc.children.append(segment)
        corpus.documents.append((doc_id, doc))
        corpus.doc_nodes[doc_id] = annotate_document(doc)
        for node in corpus.doc_nodes[doc_id]:
            corpus.nodes[(doc_id, node.node_id)] = node
    return corpus


def main() -> None:
    taxonomy = build_taxonomy([(1, concept) for concept in CONCEPTS])
    corpus = build_leaky_corpus()
    print(f"corpus: {len(corpus.documents)} documents, "
          f"{len(corpus.nodes)} labeled nodes, "
          f"evidence 100% document-private\n")

    # The toy corpus has ~130 distinct tokens, fewer than the requested
    # vocabulary size: every token (triggers included) makes the cut,
    # and the resulting shrink warning is expected here.
    warnings.filterwarnings("ignore", message="vocabulary shrunk to")
    result = compare_frameworks(
        corpus, taxonomy,
        type_ids=[1, 2], modes=["segment", "document"], seeds=[0, 1, 2],
        forest_config=ForestConfig(n_trees=5),
        min_pos=10, current_dim=200,
    )
    print(format_summary_table(result))

    for type_id in (1, 2):
        segment_f1 = result.macro_f1(type_id, "segment")
        document_f1 = result.macro_f1(type_id, "document")
        print(f"type {type_id}: segment split {segment_f1:.3f} vs "
              f"document split {document_f1:.3f} "
              f"(inflation {segment_f1 - document_f1:+.3f})")
    print("\nSame models, same corpus — the split protocol alone "
          "decides the headline number.")


if __name__ == "__main__":
    main()
