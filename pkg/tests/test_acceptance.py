"""Acceptance suite: one test per release criterion.

Each test wraps its checks in the ``criterion`` context manager, which
appends a ``[ACCEPTANCE] <name>: PASS/FAIL`` line (with runtime) to the
summary section printed at the end of the run. Criteria that need
external artifacts (the released annotated corpus, the embedding
sidecar) skip with a named reason instead of failing.
"""

import csv
import os
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

from helpers import (brute_force_planted, leakage_corpus, planted_dom,
                     separable_block_samples, small_taxonomy, trigger_corpus)
from ppkit.classifiers import (VIRTUAL_ROOT, HierarchyClassifier, ParentModel,
                               load_bundle, predict_nodes, save_bundle,
                               train_lcn, train_lcpn)
from ppkit.corpus import (load_corpus, split_document_level,
                          split_segment_level)
from ppkit.evaluation import (ConfusionCounts, compare_frameworks,
                              precision_recall_f1)
from ppkit.extraction import ExtractionConfig, extract_pp_element
from ppkit.features import (FeatureConfig, fit_resources, fit_tfidf,
                            load_shipped_keywords, transform_tfidf)
from ppkit.forest import ForestConfig
from ppkit.html_dom import body_or_root
from ppkit.network import MlpModel, NetworkConfig
from ppkit.ppxml import (Paragraph, PolicyDocument, Segment, Title,
                         parse_ppxml, serialize_ppxml)
from ppkit.structure import (BLOCK_CLASS_ORDER, parse_leading_ordinal_label,
                             train_block_classifier)
from ppkit.taxonomy import load_shipped_taxonomy

GOPPC_ENV = "GOPPC150_DIR"


@pytest.fixture()
def criterion(acceptance_log):
    @contextmanager
    def check(name: str, budget_seconds: float):
        start = time.perf_counter()
        try:
            yield
        except BaseException:
            acceptance_log.append(f"[ACCEPTANCE] {name}: FAIL")
            raise
        elapsed = time.perf_counter() - start
        if elapsed > budget_seconds:
            acceptance_log.append(
                f"[ACCEPTANCE] {name}: FAIL "
                f"(runtime {elapsed:.1f}s over budget {budget_seconds:.0f}s)"
            )
            pytest.fail(f"{name}: runtime {elapsed:.1f}s exceeds "
                        f"{budget_seconds:.0f}s budget")
        acceptance_log.append(
            f"[ACCEPTANCE] {name}: PASS ({elapsed:.1f}s)"
        )

    return check


def skip_logged(acceptance_log, name: str, reason: str):
    acceptance_log.append(f"[ACCEPTANCE] {name}: SKIP ({reason})")
    pytest.skip(reason)


# 1. Ordinal-label exactness ---------------------------------------------------


def test_ordinal_label_worked_values(criterion):
    with criterion("ordinal-label exactness", budget_seconds=1.0):
        assert parse_leading_ordinal_label("3.a.i Something") == \
            [1, 3, 1, 2, 1, 1, 4, 1, 0, 0, 0, 0]
        assert parse_leading_ordinal_label("3. Scope") == \
            [1, 3, 1] + [0] * 9
        # Letter labels, both cases: lowercase encodes format 2,
        # uppercase format 3, parenthesis separator 3.
        assert parse_leading_ordinal_label("b) Details")[:3] == [2, 2, 3]
        assert parse_leading_ordinal_label("B) Details")[:3] == [3, 2, 3]
        assert parse_leading_ordinal_label("No label here") == [0] * 12


# 2. Metric arithmetic ----------------------------------------------------------


def test_metric_arithmetic(criterion):
    with criterion("metric arithmetic", budget_seconds=1.0):
        _, _, f1 = precision_recall_f1(ConfusionCounts(tp=51, fp=19, fn=7))
        assert f1 == pytest.approx(0.797, abs=0.001)
        # The trivial identities: all-correct, no predictions, no gold.
        assert precision_recall_f1(ConfusionCounts(tp=9)) == (1.0, 1.0, 1.0)
        assert precision_recall_f1(ConfusionCounts(fn=9)) == (0.0, 0.0, 0.0)
        assert precision_recall_f1(ConfusionCounts(fp=9)) == (0.0, 0.0, 0.0)


# 3. Locator vs brute-force oracle -----------------------------------------------


def test_locator_matches_oracle_on_500_doms(criterion):
    with criterion("policy-element locator oracle (500 DOMs)",
                   budget_seconds=30.0):
        generator = np.random.default_rng(20260814)
        config = ExtractionConfig(r_h=0.55)
        agreements = 0
        for _ in range(500):
            root, planted = planted_dom(generator)
            oracle = brute_force_planted(root)
            located = extract_pp_element(body_or_root(root), config)
            if located is oracle is planted:
                agreements += 1
        assert agreements == 500


# 4. Segment-vs-document gap ------------------------------------------------------


def test_segment_vs_document_gap(criterion, shipped_taxonomy):
    with criterion("segment-vs-document macro-F1 gap",
                   budget_seconds=300.0):
        corpus = leakage_corpus(shipped_taxonomy, n_docs=50, n_concepts=8)
        keywords = load_shipped_keywords(shipped_taxonomy)
        result = compare_frameworks(
            corpus, shipped_taxonomy, type_ids=[1, 2, 3, 4],
            modes=["segment", "document"], seeds=[0, 1, 2],
            keywords=keywords, forest_config=ForestConfig(n_trees=3),
            current_dim=450, min_support=5,
        )
        assert not result.skipped
        for type_id in (1, 2, 3, 4):
            for seed in (0, 1, 2):
                segment_f1 = result.run(type_id, "segment",
                                        seed).report.macro_f1_level1
                document_f1 = result.run(type_id, "document",
                                         seed).report.macro_f1_level1
                gap = segment_f1 - document_f1
                assert gap >= 0.05, (
                    f"type {type_id}, seed {seed}: segment {segment_f1:.4f} "
                    f"vs document {document_f1:.4f} (gap {gap:.4f})"
                )


# 5. Block-classifier cross-validation ----------------------------------------------


def block_macro_f1(predicted, gold) -> float:
    scores = []
    for cls in BLOCK_CLASS_ORDER:
        tp = sum(1 for p, g in zip(predicted, gold) if p == cls and g == cls)
        fp = sum(1 for p, g in zip(predicted, gold) if p == cls and g != cls)
        fn = sum(1 for p, g in zip(predicted, gold) if p != cls and g == cls)
        _, _, f1 = precision_recall_f1(ConfusionCounts(tp=tp, fp=fp, fn=fn))
        scores.append(f1)
    return sum(scores) / len(scores)


def test_block_classifier_cross_validation(criterion):
    with criterion("block-classifier 5-fold CV", budget_seconds=60.0):
        samples = separable_block_samples(np.random.default_rng(7), 500)
        folds = np.array_split(np.arange(len(samples)), 5)
        fold_scores = []
        for held_out in folds:
            held = set(held_out.tolist())
            train = [s for i, s in enumerate(samples) if i not in held]
            test = [samples[i] for i in sorted(held)]
            model = train_block_classifier(train, seed=0)
            predicted = model.classify([features for features, _ in test])
            fold_scores.append(
                block_macro_f1(predicted, [cls for _, cls in test])
            )
        assert sum(fold_scores) / len(fold_scores) >= 0.95


# 6. Determinism -------------------------------------------------------------------


def assert_directories_byte_identical(a: Path, b: Path):
    names_a = sorted(p.name for p in a.iterdir())
    names_b = sorted(p.name for p in b.iterdir())
    assert names_a == names_b
    for name in names_a:
        if (a / name).is_dir():
            assert_directories_byte_identical(a / name, b / name)
        else:
            assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_pipeline_determinism(criterion, tmp_path):
    with criterion("byte-identical reruns", budget_seconds=300.0):
        taxonomy = small_taxonomy()
        corpus = trigger_corpus(taxonomy, ["ALPHA", "BETA"], 8,
                                private_triggers=False)
        kwargs = dict(
            type_ids=[1, 7], modes=["segment", "document"], seeds=[0],
            forest_config=ForestConfig(n_trees=10),
            network_config=NetworkConfig(hidden=16, learning_rate=0.5,
                                         max_epochs=60, patience=10),
            min_pos=10, min_support=5,
        )
        compare_frameworks(corpus, taxonomy, out_dir=tmp_path / "run1",
                           **kwargs)
        compare_frameworks(corpus, taxonomy, out_dir=tmp_path / "run2",
                           **kwargs)
        assert_directories_byte_identical(tmp_path / "run1",
                                          tmp_path / "run2")

        split = split_document_level(corpus, 2, seed=0)
        for label, train in (("lcn", train_lcn), ("lcpn", train_lcpn)):
            type_id = 1 if label == "lcn" else 7
            cfg = FeatureConfig.from_type_id(type_id, current_dim=40)
            resources = fit_resources(cfg, corpus,
                                      split.train_node_keys(corpus), taxonomy)
            extra = ({"forest_config": ForestConfig(n_trees=10),
                      "min_pos": 10} if label == "lcn"
                     else {"network_config": NetworkConfig(hidden=8,
                                                           max_epochs=20)})
            for run in ("a", "b"):
                classifier = train(corpus, split, cfg, taxonomy, resources,
                                   seed=5, **extra)
                save_bundle(classifier, taxonomy,
                            tmp_path / f"{label}_{run}",
                            resources=resources, split=split)
            assert_directories_byte_identical(tmp_path / f"{label}_a",
                                              tmp_path / f"{label}_b")
            loaded, loaded_resources, loaded_split = load_bundle(
                tmp_path / f"{label}_a", taxonomy)
            keys = loaded_split.test_node_keys(corpus)
            assert predict_nodes(loaded, corpus, keys, taxonomy,
                                 loaded_resources) == \
                predict_nodes(classifier, corpus, keys, taxonomy, resources)


# 7. Invariant property families ------------------------------------------------------


def constant_mlp(n_inputs: int, logits: list[float]) -> MlpModel:
    return MlpModel(
        w1=np.zeros((n_inputs, 2)), b1=np.zeros(2),
        w2=np.zeros((2, len(logits))), b2=np.array(logits, dtype=float),
        config=NetworkConfig(), seed=0,
    )


def test_invariant_property_families(criterion):
    with criterion("invariant property suites", budget_seconds=300.0):
        taxonomy = small_taxonomy()
        generator = np.random.default_rng(99)

        # Split disjointness and coverage, both modes, many shapes.
        for n_docs in (3, 7, 12):
            corpus = trigger_corpus(taxonomy, ["ALPHA"], n_docs)
            for seed in range(5):
                split = split_document_level(
                    corpus, int(generator.integers(1, n_docs)), seed)
                train_docs, test_docs = set(split.train_ids), set(split.test_ids)
                assert train_docs.isdisjoint(test_docs)
                assert train_docs | test_docs == set(corpus.doc_ids)
                node_split = split_segment_level(
                    corpus, float(generator.uniform(0.1, 0.9)), seed)
                train_keys = set(node_split.train_ids)
                test_keys = set(node_split.test_ids)
                assert train_keys.isdisjoint(test_keys)
                assert train_keys | test_keys == set(corpus.node_keys())

        # TF-IDF norms are exactly zero or one.
        words = [f"w{i}" for i in range(30)]
        texts = [" ".join(generator.choice(words,
                                           size=generator.integers(1, 12)))
                 for _ in range(40)]
        vocabulary = fit_tfidf(texts[:25], 20)
        for text in texts + ["unseen tokens only", ""]:
            norm = float(np.linalg.norm(transform_tfidf(vocabulary, text)))
            assert norm == pytest.approx(0.0) or norm == pytest.approx(1.0)

        # Structured-document round-trip identity.
        for trial in range(25):
            doc = PolicyDocument(source=f"trial{trial}")
            counter = 0
            for level_run in range(int(generator.integers(1, 4))):
                counter += 1
                segment = Segment(
                    level=1,
                    title=Title(node_id=f"n{counter:04d}",
                                text=f"{level_run + 1}. Heading",
                                labels=("ALPHA",) if trial % 2 else ()),
                )
                for _ in range(int(generator.integers(0, 3))):
                    counter += 1
                    segment.children.append(Paragraph(
                        node_id=f"n{counter:04d}",
                        text=f"clause {counter}",
                        labels=("BETA", "GAMMA") if counter % 3 == 0 else (),
                    ))
                doc.children.append(segment)
            blob = serialize_ppxml(doc)
            again = parse_ppxml(blob)
            assert serialize_ppxml(again) == blob
            assert again == doc

        # All predictions are closed under taxonomy ancestors.
        corpus = trigger_corpus(taxonomy, ["ALPHA.TWO", "BETA.ONE"], 8,
                                private_triggers=False)
        split = split_document_level(corpus, 2, seed=0)
        cfg = FeatureConfig.from_type_id(1, current_dim=40)
        resources = fit_resources(cfg, corpus, split.train_node_keys(corpus),
                                  taxonomy)
        classifier = train_lcn(corpus, split, cfg, taxonomy, resources,
                               forest_config=ForestConfig(n_trees=10), seed=0)
        predictions = predict_nodes(classifier, corpus, corpus.node_keys(),
                                    taxonomy, resources)
        assert any(predictions.values())
        for labels in predictions.values():
            for label in labels:
                assert set(taxonomy.ancestors_of(label)) <= labels

        # Cascade monotonicity: removing parent votes only shrinks outputs.
        n_inputs = len(resources.vocabulary)
        keys = corpus.node_keys()[:20]
        for _ in range(10):
            wide_logits = generator.uniform(-8, 8, size=3)
            narrow_logits = np.where(generator.integers(0, 2, size=3) == 1,
                                     -10.0, wide_logits)

            def cascade(logits):
                clf = HierarchyClassifier(architecture="lcpn", cfg=cfg,
                                          seed=0)
                clf.models[VIRTUAL_ROOT] = ParentModel(
                    mlp=constant_mlp(n_inputs, list(logits)),
                    children=tuple(taxonomy.roots),
                )
                clf.models["ALPHA"] = ParentModel(
                    mlp=constant_mlp(n_inputs, [10.0, 10.0]),
                    children=("ALPHA.ONE", "ALPHA.TWO"),
                )
                clf.inherit["ALPHA.TWO"] = "ALPHA.TWO.DEEP"
                return predict_nodes(clf, corpus, keys, taxonomy, resources)

            wide = cascade(wide_logits)
            narrow = cascade(narrow_logits)
            for key in keys:
                assert narrow[key] <= wide[key]


# 8. Corpus-conditional checks on the released annotated corpus -----------------------


def load_block_samples_csv(path: Path):
    from ppkit.structure import BlockClass, BlockFeatures
    samples = []
    with open(path, newline="", encoding="utf-8") as handle:
        for row in csv.DictReader(handle):
            lol = [int(row[f"lol_{i}"]) for i in range(12)]
            features = BlockFeatures(
                text_length=int(row["text_length"]),
                font_size=float(row["font_size"]),
                font_weight=float(row["font_weight"]),
                is_italic=int(row["is_italic"]),
                is_underlined=int(row["is_underlined"]),
                dom_depth=int(row["dom_depth"]),
                tag_code=int(row["tag_code"]),
                lol=lol,
            )
            samples.append((features, BlockClass(row["block_class"])))
    return samples


def test_released_corpus_tolerances(criterion, acceptance_log,
                                    shipped_taxonomy):
    name = "released-corpus tolerances"
    corpus_dir = os.environ.get(GOPPC_ENV)
    if not corpus_dir:
        skip_logged(acceptance_log, name,
                    f"released annotated corpus not available "
                    f"(set {GOPPC_ENV} to its directory)")
    with criterion(name, budget_seconds=1800.0):
        assert len(shipped_taxonomy) == 96
        assert len(shipped_taxonomy.roots) == 19

        corpus = load_corpus(corpus_dir, shipped_taxonomy)
        from ppkit.corpus import corpus_statistics
        fractions = {concept_id: fraction for concept_id, _, fraction
                     in corpus_statistics(corpus, shipped_taxonomy,
                                          descendant_inclusive=True)}
        assert fractions["PD PROVISION OBLIGED"] == pytest.approx(0.040,
                                                                  abs=1e-9)

        keywords = load_shipped_keywords(shipped_taxonomy)
        result = compare_frameworks(
            corpus, shipped_taxonomy, type_ids=[1, 2], modes=["document"],
            seeds=[0, 1, 2], keywords=keywords,
            forest_config=ForestConfig(n_trees=25),
        )
        assert result.macro_f1(1, "document") == pytest.approx(0.512,
                                                               abs=0.08)
        assert result.macro_f1(2, "document") == pytest.approx(0.558,
                                                               abs=0.08)

        blocks_csv = Path(corpus_dir) / "blocks.csv"
        if blocks_csv.exists():
            samples = load_block_samples_csv(blocks_csv)
            folds = np.array_split(np.arange(len(samples)), 5)
            scores = []
            for held_out in folds:
                held = set(held_out.tolist())
                train = [s for i, s in enumerate(samples) if i not in held]
                test = [samples[i] for i in sorted(held)]
                model = train_block_classifier(train, seed=0)
                predicted = model.classify([f for f, _ in test])
                scores.append(block_macro_f1(predicted,
                                             [c for _, c in test]))
            assert sum(scores) / len(scores) == pytest.approx(0.882,
                                                              abs=0.05)


# 9. Sidecar contract ------------------------------------------------------------------


def test_primary_suite_runs_without_sidecar(criterion):
    with criterion("embedding types skip cleanly without a store",
                   budget_seconds=60.0):
        taxonomy = small_taxonomy()
        corpus = trigger_corpus(taxonomy, ["ALPHA"], 6,
                                private_triggers=False)
        with pytest.warns(UserWarning,
                          match="embedding store required for type 5"):
            result = compare_frameworks(
                corpus, taxonomy, type_ids=[1, 5], modes=["document"],
                seeds=[0], forest_config=ForestConfig(n_trees=5),
                min_pos=10, min_support=5,
            )
        assert [run.type_id for run in result.runs] == [1]
        assert result.skipped[0][:3] == (5, "document", 0)


def test_sidecar_export_contract(criterion, acceptance_log, tmp_path):
    name = "sidecar export contract"
    try:
        import ppembed
    except ImportError:
        skip_logged(acceptance_log, name,
                    "embedding sidecar package not installed")
    try:
        import torch  # noqa: F401
        import transformers  # noqa: F401
    except ImportError:
        skip_logged(acceptance_log, name, "torch/transformers not installed")
    with criterion(name, budget_seconds=300.0):
        taxonomy = small_taxonomy()
        corpus = trigger_corpus(taxonomy, ["ALPHA", "BETA"], 3)
        corpus_dir = tmp_path / "corpus"
        corpus_dir.mkdir()
        from ppkit.corpus import save_corpus
        save_corpus(corpus, corpus_dir)

        model_dir = tmp_path / "tiny-encoder"
        _write_tiny_encoder(model_dir)

        store_path = tmp_path / "store.tsv"
        config = ppembed.SidecarConfig(model_id=str(model_dir),
                                       pooling="mean")
        n_records = ppembed.export_embeddings(corpus_dir, store_path, config)
        assert n_records == len(corpus.nodes)

        import warnings as warnings_module
        from ppkit.features import load_embeddings
        with warnings_module.catch_warnings():
            warnings_module.simplefilter("error")
            store = load_embeddings(store_path)
        assert len(store) == len(corpus.nodes)

        first = store_path.read_bytes()
        ppembed.export_embeddings(corpus_dir, store_path, config)
        assert store_path.read_bytes() == first


def _write_tiny_encoder(directory: Path) -> None:
    import torch
    from transformers import BertConfig, BertModel, BertTokenizerFast

    torch.manual_seed(0)
    config = BertConfig(
        vocab_size=64, hidden_size=8, num_hidden_layers=1,
        num_attention_heads=2, intermediate_size=16,
        max_position_embeddings=64,
    )
    model = BertModel(config)
    model.save_pretrained(directory)
    vocab = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"] + [
        f"tok{i}" for i in range(59)
    ]
    (directory / "vocab.txt").write_text("\n".join(vocab) + "\n",
                                         encoding="utf-8")
    tokenizer = BertTokenizerFast(vocab_file=str(directory / "vocab.txt"))
    tokenizer.save_pretrained(directory)
