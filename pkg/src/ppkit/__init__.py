"""Privacy-policy structuring and GDPR concept-classification toolkit.

The pipeline runs in three stages, each usable on its own:

1. **HTML -> policy element** (`extraction`): strip media/embedded/
   interactive DOM elements from a saved page, then walk down to the
   single element holding the policy's readable content by comparing the
   spread of children text lengths against the page's running average.
2. **Policy element -> structured document** (`structure`, `ppxml`):
   classify candidate blocks into title levels 1-4 or paragraph (leading
   ordinal labels such as "3.a.i" become a 12-D descriptor), fold the
   blocks into nested segments, and serialize to the policy XML schema.
3. **Documents -> concept labels** (`corpus`, `features`, `classifiers`,
   `evaluation`): train per-concept binary forests (LCN) or per-parent
   cascaded networks (LCPN) over a 96-concept taxonomy and score them
   under document-level versus segment-level splits — the latter lets a
   document straddle train and test, which inflates the scores it
   produces.

Everything is seeded and byte-reproducible: model bundles, report CSVs
and serialized documents carry no timestamps and depend only on
(corpus, split, configuration, seed).
"""

from .classifiers import (HierarchyClassifier, load_bundle, predict_document,
                          predict_nodes, save_bundle, train_lcn, train_lcpn,
                          upsample_indices)
from .corpus import (AnnotatedNode, Corpus, SplitSpec, build_corpus,
                     cohens_kappa, corpus_agreement, corpus_statistics,
                     load_corpus, load_split, save_corpus, save_split,
                     split_document_level, split_segment_level)
from .errors import (CorpusError, EvaluationError, ExtractionError,
                     FeatureError, PpkitError, SchemaError, TaxonomyError,
                     TrainingError)
from .evaluation import (ConfusionCounts, MetricsReport, best_f1_tally,
                         compare_frameworks, evaluate_run,
                         precision_recall_f1, write_report_csv)
from .extraction import (ExtractionConfig, children_similarity_score,
                         extract_pp_element, find_policy_links,
                         find_registration_links, strip_irrelevant_elements)
from .features import (EmbeddingStore, FeatureConfig, FeatureResources,
                       KeywordTable, Vocabulary, assemble_features,
                       features_for_keys, fit_resources, fit_tfidf,
                       load_embeddings, load_keywords, load_shipped_keywords,
                       tokenize, transform_tfidf, write_embedding_store)
from .html_dom import (DomNode, body_or_root, parse_html, serialize_html,
                       text_length, visible_text)
from .ppxml import (Item, ListBlock, Paragraph, PolicyDocument, Segment,
                    Title, parse_ppxml, serialize_ppxml, validate_document)
from .structure import (BlockClass, BlockFeatures, classify_blocks,
                        collect_blocks, build_segment_tree,
                        extract_block_features, heuristic_classify,
                        load_block_model, parse_leading_ordinal_label,
                        save_block_model, structure_document,
                        train_block_classifier)
from .taxonomy import (Taxonomy, load_shipped_taxonomy, load_taxonomy,
                       serialize_taxonomy)

__version__ = "0.1.0"

__all__ = [
    "AnnotatedNode",
    "BlockClass",
    "BlockFeatures",
    "ConfusionCounts",
    "Corpus",
    "CorpusError",
    "DomNode",
    "EmbeddingStore",
    "EvaluationError",
    "ExtractionConfig",
    "ExtractionError",
    "FeatureConfig",
    "FeatureError",
    "FeatureResources",
    "HierarchyClassifier",
    "Item",
    "KeywordTable",
    "ListBlock",
    "MetricsReport",
    "Paragraph",
    "PolicyDocument",
    "PpkitError",
    "SchemaError",
    "Segment",
    "SplitSpec",
    "Taxonomy",
    "TaxonomyError",
    "Title",
    "TrainingError",
    "Vocabulary",
    "assemble_features",
    "best_f1_tally",
    "body_or_root",
    "build_corpus",
    "build_segment_tree",
    "children_similarity_score",
    "classify_blocks",
    "cohens_kappa",
    "collect_blocks",
    "compare_frameworks",
    "corpus_agreement",
    "corpus_statistics",
    "evaluate_run",
    "extract_block_features",
    "extract_pp_element",
    "features_for_keys",
    "find_policy_links",
    "find_registration_links",
    "fit_resources",
    "fit_tfidf",
    "heuristic_classify",
    "load_block_model",
    "load_bundle",
    "load_corpus",
    "load_embeddings",
    "load_keywords",
    "load_shipped_keywords",
    "load_shipped_taxonomy",
    "load_split",
    "load_taxonomy",
    "parse_html",
    "parse_leading_ordinal_label",
    "parse_ppxml",
    "precision_recall_f1",
    "predict_document",
    "predict_nodes",
    "save_block_model",
    "save_bundle",
    "save_corpus",
    "save_split",
    "serialize_html",
    "serialize_ppxml",
    "serialize_taxonomy",
    "split_document_level",
    "split_segment_level",
    "strip_irrelevant_elements",
    "structure_document",
    "text_length",
    "tokenize",
    "train_block_classifier",
    "train_lcn",
    "train_lcpn",
    "transform_tfidf",
    "upsample_indices",
    "validate_document",
    "visible_text",
    "write_embedding_store",
    "write_report_csv",
]
