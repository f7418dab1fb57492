"""The concept hierarchy, corpus coverage, and annotator agreement.

Every node of a structured policy can carry labels drawn from a fixed
hierarchy of data-protection concepts. This script tours the shipped
hierarchy, labels a tiny two-pass corpus, and shows the two reporting
tools built on top: per-concept document coverage, and chance-corrected
agreement between two annotation passes of the same documents.
"""

from ppkit.corpus import (Corpus, annotate_document, corpus_agreement,
                          corpus_statistics)
from ppkit.ppxml import Paragraph, PolicyDocument, Segment, Title
from ppkit.taxonomy import load_shipped_taxonomy


def show_hierarchy(taxonomy, concept_id: str, depth: int = 0) -> None:
    print("  " * depth + f"- {concept_id}")
    for child in taxonomy.children_of(concept_id):
        show_hierarchy(taxonomy, child, depth + 1)


def two_doc_corpus(labels_for) -> Corpus:
    """Two small documents; `labels_for(doc, node)` assigns the labels."""
    corpus = Corpus()
    for doc_id in ("alpha-site", "beta-site"):
        doc = PolicyDocument(source=doc_id)
        segment = Segment(level=1, title=Title(
            node_id="n0001", text="1. What we process",
            labels=labels_for(doc_id, "n0001"),
        ))
        for i, text in enumerate([
            "We process the data listed in the register of activities.",
            "Processing rests on consent you may withdraw at any time.",
            "Records are erased when the purpose ends.",
        ]):
            segment.children.append(Paragraph(
                node_id=f"n{i + 2:04d}", text=text,
                labels=labels_for(doc_id, f"n{i + 2:04d}"),
            ))
        doc.children.append(segment)
        corpus.documents.append((doc_id, doc))
        corpus.doc_nodes[doc_id] = annotate_document(doc)
        for node in corpus.doc_nodes[doc_id]:
            corpus.nodes[(doc_id, node.node_id)] = node
    return corpus


def main() -> None:
    taxonomy = load_shipped_taxonomy()
    print(f"shipped hierarchy: {len(taxonomy)} concepts, "
          f"{len(taxonomy.roots)} level-1 roots\n")
    print("one branch in full:")
    show_hierarchy(taxonomy, "TRANSFER OUTSIDE EU")

    first, second = taxonomy.roots[0], taxonomy.roots[1]

    # Annotation pass one labels everything; pass two misses one node.
    pass_one = two_doc_corpus(
        lambda doc, node: (first,) if node == "n0001" else (second,)
    )
    pass_two = two_doc_corpus(
        lambda doc, node: ()
        if (doc, node) == ("beta-site", "n0003")
        else ((first,) if node == "n0001" else (second,))
    )

    print("\nper-concept coverage (pass one):")
    for concept_id, docs, fraction in corpus_statistics(pass_one, taxonomy):
        if docs:
            print(f"  {concept_id}: {docs} documents ({fraction:.0%})")

    agreement = corpus_agreement(pass_one, pass_two, taxonomy)
    print(f"\nagreement between the passes "
          f"(unit: {agreement['unit']}):")
    for doc_id, kappa in sorted(agreement["per_document"].items()):
        print(f"  {doc_id}: kappa {kappa:.3f}")
    print(f"  mean: {agreement['mean']:.3f}")


if __name__ == "__main__":
    main()
