"""Swapping bag-of-words features for precomputed embeddings.

Feature types 5, 6, 11, and 12 replace the TF-IDF text blocks with
dense vectors read from an embedding-store file: a ``#dim=<D>`` header,
then one ``<doc-id>/<node-id>\\t<floats>`` record per node. The store
is produced offline (the `ppembed` companion package runs a pretrained
transformer over every node), so classifiers here never touch an ML
runtime and experiments replay from a frozen file.

This script fakes the offline step with random-but-fixed vectors that
carry the same concept signal a real encoder would, then trains the
same hierarchy classifier once with TF-IDF features and once with the
store.
"""

import warnings
import zlib

import numpy as np

from ppkit.corpus import (Corpus, annotate_document, split_document_level)
from ppkit.evaluation import evaluate_run
from ppkit.features import (FeatureConfig, fit_resources, load_embeddings,
                            write_embedding_store)
from ppkit.forest import ForestConfig
from ppkit.classifiers import predict_nodes, train_lcn
from ppkit.ppxml import Paragraph, PolicyDocument, Segment, Title
from ppkit.taxonomy import build_taxonomy

CONCEPTS = ["DATA COLLECTION", "DATA SHARING", "RETENTION"]
DIM = 32


def build_corpus(n_docs: int = 12) -> Corpus:
    corpus = Corpus()
    for d in range(n_docs):
        doc_id = f"doc{d:03d}"
        doc = PolicyDocument(source=doc_id)
        counter = 0
        for c, concept in enumerate(CONCEPTS):
            counter += 1
            segment = Segment(level=1, title=Title(
                node_id=f"n{counter:04d}",
                text=f"{c + 1}. section about topic {c}",
                labels=(concept,),
            ))
            for i in range(3):
                counter += 1
                segment.children.append(Paragraph(
                    node_id=f"n{counter:04d}",
                    # Document-private wording: TF-IDF on unseen documents
                    # has nothing to hold on to.
                    text=f"doc{d} private phrasing item {i} of topic {c}",
                    labels=(concept,),
                ))
            doc.children.append(segment)
        corpus.documents.append((doc_id, doc))
        corpus.doc_nodes[doc_id] = annotate_document(doc)
        for node in corpus.doc_nodes[doc_id]:
            corpus.nodes[(doc_id, node.node_id)] = node
    return corpus


def fake_encoder_store(corpus: Corpus, taxonomy, path) -> None:
    """What a real encoder gives us: vectors that cluster by meaning
    (here: by concept), independent of each document's wording."""
    rng = np.random.default_rng(0)
    anchors = {concept: rng.normal(size=DIM) for concept in CONCEPTS}
    records = []
    for (doc_id, node_id), node in sorted(corpus.nodes.items()):
        anchor = anchors[node.labels[0]]
        noise_rng = np.random.default_rng(
            zlib.crc32(f"{doc_id}/{node_id}".encode())
        )
        records.append(((doc_id, node_id),
                        anchor + 0.3 * noise_rng.normal(size=DIM)))
    write_embedding_store(path, DIM, records)


def macro_f1(corpus, taxonomy, split, cfg, resources) -> float:
    classifier = train_lcn(corpus, split, cfg, taxonomy, resources,
                           forest_config=ForestConfig(n_trees=10),
                           min_pos=5, seed=0)
    keys = split.test_node_keys(corpus)
    predictions = predict_nodes(classifier, corpus, keys, taxonomy, resources)
    report = evaluate_run(predictions, corpus, keys, taxonomy, min_support=2)
    return report.macro_f1_level1


def main(tmp="/tmp/embedding_demo_store.tsv") -> None:
    taxonomy = build_taxonomy([(1, concept) for concept in CONCEPTS])
    corpus = build_corpus()
    split = split_document_level(corpus, n_test=3, seed=0)
    print(f"corpus: {len(corpus.documents)} documents "
          f"({len(split.test_ids)} held out), wording document-private\n")

    fake_encoder_store(corpus, taxonomy, tmp)
    store = load_embeddings(tmp)
    print(f"embedding store: {len(store)} records, dim {store.dimension}")

    train_keys = split.train_node_keys(corpus)
    # The toy corpus has fewer distinct tokens than the requested
    # vocabulary size; the shrink warning is expected here.
    warnings.filterwarnings("ignore", message="vocabulary shrunk to")
    bow_cfg = FeatureConfig.from_type_id(1, current_dim=60)
    bow_resources = fit_resources(bow_cfg, corpus, train_keys, taxonomy)
    emb_cfg = FeatureConfig.from_type_id(5)
    emb_resources = fit_resources(emb_cfg, corpus, train_keys, taxonomy,
                                  store=store)

    bow = macro_f1(corpus, taxonomy, split, bow_cfg, bow_resources)
    emb = macro_f1(corpus, taxonomy, split, emb_cfg, emb_resources)
    print(f"\nmacro F1 on unseen documents:")
    print(f"  type 1 (TF-IDF text):        {bow:.3f}")
    print(f"  type 5 (embedding store):    {emb:.3f}")
    print("\nDense vectors survive the wording change; "
          "bags of words cannot.")


if __name__ == "__main__":
    main()
