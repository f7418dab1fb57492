import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import trigger_corpus
from ppkit.errors import FeatureError
from ppkit.features import (FeatureConfig, KeywordTable, Vocabulary,
                            assemble_features, features_for_keys, fit_resources,
                            fit_tfidf, keyword_vector, load_embeddings,
                            load_keywords, load_shipped_keywords, tokenize,
                            transform_tfidf, write_embedding_store)
from ppkit.taxonomy import load_shipped_taxonomy


# Tokenizer ----------------------------------------------------------------------


def test_tokenize_lowercases_and_splits():
    assert tokenize("We share your E-mail, 24/7!") == [
        "we", "share", "your", "mail", "24"]


def test_tokenize_drops_single_characters():
    assert tokenize("a I 5 ab") == ["ab"]


def test_tokenize_empty():
    assert tokenize("") == []
    assert tokenize("??? !!!") == []


@given(st.text(max_size=80))
@settings(max_examples=200, deadline=None)
def test_tokenize_output_shape(text):
    for token in tokenize(text):
        assert len(token) > 1
        assert token == token.lower()
        assert all(c.isascii() and (c.isdigit() or c.isalpha()) for c in token)


# TF-IDF --------------------------------------------------------------------------


def test_fit_tfidf_ranks_by_document_frequency():
    texts = ["data privacy", "data rights", "data privacy rights", "cookies"]
    vocab = fit_tfidf(texts, 3)
    assert vocab.terms == ("data", "privacy", "rights")
    assert vocab.document_frequency == (3, 2, 2)
    assert vocab.n_documents == 4


def test_fit_tfidf_breaks_ties_lexicographically():
    vocab = fit_tfidf(["zebra apple", "zebra apple"], 2)
    assert vocab.terms == ("apple", "zebra")


def test_fit_tfidf_warns_and_shrinks():
    with pytest.warns(RuntimeWarning, match="vocabulary shrunk to 2"):
        vocab = fit_tfidf(["only two"], 50)
    assert len(vocab) == 2


def test_fit_tfidf_errors():
    with pytest.raises(FeatureError, match="dimension must be >= 1"):
        fit_tfidf(["text here"], 0)
    with pytest.raises(FeatureError, match="empty corpus vocabulary"):
        fit_tfidf(["", "a !"], 10)


def test_transform_weights():
    vocab = fit_tfidf(["data privacy", "data rights", "data privacy rights",
                       "cookies"], 3)
    vector = transform_tfidf(vocab, "privacy privacy data")
    raw = np.array([1 * math.log(4 / 3), 2 * math.log(4 / 2), 0.0])
    np.testing.assert_allclose(vector, raw / np.linalg.norm(raw))


def test_transform_zero_vector_for_unknown_text():
    vocab = fit_tfidf(["data privacy"], 2)
    np.testing.assert_array_equal(transform_tfidf(vocab, "gibberish"),
                                  np.zeros(2))


def test_transform_df_equal_n_term_contributes_zero():
    vocab = fit_tfidf(["data privacy", "data rights"], 3)
    # "data" appears in every document: ln(N/df) = 0.
    np.testing.assert_array_equal(transform_tfidf(vocab, "data data"),
                                  np.zeros(3))


@given(st.lists(st.text(alphabet="abcdef ", min_size=2, max_size=30),
                min_size=1, max_size=10),
       st.text(alphabet="abcdef ", max_size=40))
@settings(max_examples=150, deadline=None)
def test_transform_norm_is_zero_or_one(texts, query):
    try:
        vocab = fit_tfidf(texts, 5)
    except FeatureError:
        return
    norm = np.linalg.norm(transform_tfidf(vocab, query))
    assert norm == pytest.approx(0.0) or norm == pytest.approx(1.0)


def test_vocabulary_meta_round_trip():
    vocab = fit_tfidf(["data privacy", "data rights"], 3)
    again = Vocabulary.from_meta(vocab.to_meta())
    assert again == vocab
    assert again.index == vocab.index


# Keyword table -------------------------------------------------------------------


def test_load_keywords_header_error(tmp_path, taxonomy):
    path = tmp_path / "kw.csv"
    path.write_text("concept,word\nALPHA,data\n", encoding="utf-8")
    with pytest.raises(FeatureError, match="expected header"):
        load_keywords(path, taxonomy)


def test_load_keywords_unknown_concept(tmp_path, taxonomy):
    path = tmp_path / "kw.csv"
    path.write_text("concept_id,keyword\nNOPE,data\n", encoding="utf-8")
    with pytest.raises(FeatureError, match="unknown concept 'NOPE'"):
        load_keywords(path, taxonomy)


def test_load_keywords_requires_full_coverage(tmp_path, taxonomy):
    path = tmp_path / "kw.csv"
    path.write_text("concept_id,keyword\nALPHA,data\n", encoding="utf-8")
    with pytest.raises(FeatureError, match="concepts without keywords"):
        load_keywords(path, taxonomy)


def test_load_keywords_empty_keyword(tmp_path, taxonomy):
    path = tmp_path / "kw.csv"
    path.write_text("concept_id,keyword\nALPHA,\"!!\"\n", encoding="utf-8")
    with pytest.raises(FeatureError, match="empty keyword"):
        load_keywords(path, taxonomy)


def test_shipped_keywords_cover_shipped_taxonomy():
    taxonomy = load_shipped_taxonomy()
    table = load_shipped_keywords(taxonomy)
    assert set(table.phrases) == set(taxonomy.ordered_ids)
    assert all(table.phrases[cid] for cid in taxonomy.ordered_ids)


def test_keyword_vector_whole_token_only(taxonomy):
    table = KeywordTable(phrases={"ALPHA": (("data",),)})
    assert keyword_vector(table, taxonomy, "your data rights")[0] == 1.0
    # Substrings do not match: "database" is a different token.
    assert keyword_vector(table, taxonomy, "our database")[0] == 0.0


def test_keyword_vector_phrase_must_be_contiguous(taxonomy):
    table = KeywordTable(phrases={"BETA": (("third", "party"),)})
    position = taxonomy.ordered_ids.index("BETA")
    hit = keyword_vector(table, taxonomy, "shared with a third party")
    assert hit[position] == 1.0
    miss = keyword_vector(table, taxonomy, "third careless party")
    assert miss[position] == 0.0


def test_keyword_vector_dimension_and_order(taxonomy):
    table = KeywordTable(phrases={cid: ((cid.split(".")[0].lower(),),)
                                  for cid in taxonomy.ordered_ids})
    vector = keyword_vector(table, taxonomy, "alpha")
    assert len(vector) == len(taxonomy.ordered_ids)
    expected = np.array([1.0 if cid.startswith("ALPHA") else 0.0
                         for cid in taxonomy.ordered_ids])
    np.testing.assert_array_equal(vector, expected)


# Embedding store -----------------------------------------------------------------


def test_embedding_store_round_trip(tmp_path):
    records = [(("d1", "n0001"), np.array([1.0, 2.0, 3.0])),
               (("d1", "n0002"), np.array([0.0, 0.0, 0.0]))]
    path = tmp_path / "store.tsv"
    write_embedding_store(path, 3, records)
    store = load_embeddings(path)
    assert store.dimension == 3
    assert len(store) == 2
    np.testing.assert_allclose(store.lookup("d1", "n0001"), [1.0, 2.0, 3.0])
    write_embedding_store(tmp_path / "again.tsv", 3, records)
    assert (tmp_path / "again.tsv").read_bytes() == path.read_bytes()


def test_embedding_store_missing_key_is_zero_and_counted(tmp_path):
    path = tmp_path / "store.tsv"
    write_embedding_store(path, 2, [(("d", "n0001"), np.ones(2))])
    store = load_embeddings(path)
    np.testing.assert_array_equal(store.lookup("d", "n0999"), np.zeros(2))
    assert store.missing_lookups == 1


def test_embedding_store_key_may_contain_slash(tmp_path):
    path = tmp_path / "store.tsv"
    path.write_text("#dim=1\na/b/n0001\t0.5\n", encoding="utf-8")
    store = load_embeddings(path)
    np.testing.assert_allclose(store.lookup("a/b", "n0001"), [0.5])


def test_load_embeddings_errors(tmp_path):
    cases = [
        ("nodim.tsv", "dim 3\n", "first line must be #dim="),
        ("notab.tsv", "#dim=1\nd/n0001 0.5\n", "no tab separator"),
        ("short.tsv", "#dim=2\nd/n0001\t0.5\n", "has 1 floats, expected 2"),
        ("nokey.tsv", "#dim=1\tn0001\t0.5\n", "first line"),
        ("dup.tsv", "#dim=1\nd/n0001\t0.5\nd/n0001\t0.5\n", "duplicate key"),
        ("noslash.tsv", "#dim=1\nn0001\t0.5\n", "malformed key"),
    ]
    for name, content, message in cases:
        path = tmp_path / name
        path.write_text(content, encoding="utf-8")
        with pytest.raises(FeatureError, match=message):
            load_embeddings(path)


def test_write_embedding_store_dimension_check(tmp_path):
    with pytest.raises(FeatureError, match="expected 3"):
        write_embedding_store(tmp_path / "s.tsv", 3,
                              [(("d", "n0001"), np.ones(2))])


# Feature configurations -------------------------------------------------------------


def test_type_layouts():
    expected = {
        1: ("tfidf", False, False), 2: ("tfidf", True, False),
        3: ("tfidf", False, True), 4: ("tfidf", True, True),
        5: ("embedding", False, False), 6: ("embedding", True, False),
    }
    for offset in (0, 6):
        for base, (source, ctx, kw) in expected.items():
            cfg = FeatureConfig.from_type_id(base + offset)
            assert (cfg.source, cfg.use_context, cfg.use_keywords) == \
                (source, ctx, kw)
    with pytest.raises(FeatureError, match="type id must be 1..12"):
        FeatureConfig.from_type_id(13)


def test_architecture_split():
    assert FeatureConfig.from_type_id(6).architecture == "lcn"
    assert FeatureConfig.from_type_id(7).architecture == "lcpn"


def test_expected_dims():
    assert FeatureConfig.from_type_id(1).expected_dim() == 300
    assert FeatureConfig.from_type_id(2).expected_dim() == 700
    assert FeatureConfig.from_type_id(3).expected_dim() == 396
    assert FeatureConfig.from_type_id(4).expected_dim() == 796
    assert FeatureConfig.from_type_id(5).expected_dim(store_dim=64) == 64
    assert FeatureConfig.from_type_id(6).expected_dim(store_dim=64) == 192
    with pytest.raises(FeatureError, match="embedding store required"):
        FeatureConfig.from_type_id(5).expected_dim()


def test_config_meta_round_trip():
    cfg = FeatureConfig.from_type_id(4, current_dim=50, parent_dim=20)
    assert FeatureConfig.from_meta(cfg.to_meta()) == cfg


# Resource fitting and assembly --------------------------------------------------------


def test_fit_resources_requires_keywords(taxonomy):
    corpus = trigger_corpus(taxonomy, ["ALPHA"], 3)
    keys = corpus.node_keys()
    cfg = FeatureConfig.from_type_id(3, current_dim=10)
    with pytest.raises(FeatureError, match="keyword table required for type 3"):
        fit_resources(cfg, corpus, keys, taxonomy)


def test_fit_resources_requires_store(taxonomy):
    corpus = trigger_corpus(taxonomy, ["ALPHA"], 3)
    keys = corpus.node_keys()
    cfg = FeatureConfig.from_type_id(5)
    with pytest.raises(FeatureError,
                       match="embedding store required for type 5"):
        fit_resources(cfg, corpus, keys, taxonomy)


def test_fit_resources_title_vocabulary_from_titles_only(taxonomy):
    corpus = trigger_corpus(taxonomy, ["ALPHA", "BETA"], 4)
    keys = corpus.node_keys()
    cfg = FeatureConfig.from_type_id(2, current_dim=40, parent_dim=10)
    resources = fit_resources(cfg, corpus, keys, taxonomy)
    title_terms = set(resources.title_vocabulary.terms)
    title_texts = {corpus.nodes[key].text for key in keys
                   if corpus.nodes[key].kind == "title"}
    seen = set()
    for text in title_texts:
        seen.update(t for t in text.lower().split() if len(t) > 1)
    assert title_terms <= seen


def test_assemble_type1_matches_direct_transform(taxonomy):
    corpus = trigger_corpus(taxonomy, ["ALPHA"], 3)
    keys = corpus.node_keys()
    cfg = FeatureConfig.from_type_id(1, current_dim=15)
    resources = fit_resources(cfg, corpus, keys, taxonomy)
    doc_id, node_id = keys[2]
    node = corpus.nodes[(doc_id, node_id)]
    vector = assemble_features(cfg, corpus, doc_id, node, resources)
    np.testing.assert_array_equal(
        vector, transform_tfidf(resources.vocabulary, node.text))


def test_assemble_context_layout(taxonomy):
    corpus = trigger_corpus(taxonomy, ["ALPHA"], 2)
    keys = corpus.node_keys()
    cfg = FeatureConfig.from_type_id(2, current_dim=12, parent_dim=6)
    resources = fit_resources(cfg, corpus, keys, taxonomy)
    doc_id = keys[0][0]
    nodes = corpus.doc_nodes[doc_id]
    title, first_p, second_p = nodes[0], nodes[1], nodes[2]

    title_vec = assemble_features(cfg, corpus, doc_id, title, resources)
    # Top-level title: both context blocks are zero.
    assert len(title_vec) == 12 + 6 + 12
    np.testing.assert_array_equal(title_vec[12:], np.zeros(18))

    first_vec = assemble_features(cfg, corpus, doc_id, first_p, resources)
    # First paragraph: parent title present, no preceding sibling.
    np.testing.assert_array_equal(
        first_vec[12:18],
        transform_tfidf(resources.title_vocabulary, title.text))
    np.testing.assert_array_equal(first_vec[18:], np.zeros(12))

    second_vec = assemble_features(cfg, corpus, doc_id, second_p, resources)
    np.testing.assert_array_equal(
        second_vec[18:], transform_tfidf(resources.vocabulary, first_p.text))


def test_assemble_keyword_block_appended(taxonomy):
    corpus = trigger_corpus(taxonomy, ["ALPHA"], 2)
    keys = corpus.node_keys()
    table = KeywordTable(phrases={cid: (("clause",),)
                                  for cid in taxonomy.ordered_ids})
    cfg = FeatureConfig.from_type_id(3, current_dim=10)
    resources = fit_resources(cfg, corpus, keys, taxonomy, keywords=table)
    doc_id, node_id = keys[1]
    node = corpus.nodes[(doc_id, node_id)]
    vector = assemble_features(cfg, corpus, doc_id, node, resources)
    assert len(vector) == 10 + len(taxonomy.ordered_ids)
    # Every concept keys on "clause", present in all paragraph texts.
    np.testing.assert_array_equal(vector[10:],
                                  np.ones(len(taxonomy.ordered_ids)))


def test_features_for_keys_shape_and_order(taxonomy):
    corpus = trigger_corpus(taxonomy, ["ALPHA", "BETA"], 3)
    keys = corpus.node_keys()
    cfg = FeatureConfig.from_type_id(1, current_dim=10)
    resources = fit_resources(cfg, corpus, keys, taxonomy)
    matrix = features_for_keys(cfg, corpus, keys, resources)
    assert matrix.shape == (len(keys), 10)
    doc_id, node_id = keys[5]
    np.testing.assert_array_equal(
        matrix[5],
        assemble_features(cfg, corpus, doc_id,
                          corpus.nodes[(doc_id, node_id)], resources))


def test_features_for_keys_empty(taxonomy):
    corpus = trigger_corpus(taxonomy, ["ALPHA"], 2)
    cfg = FeatureConfig.from_type_id(3, current_dim=10)
    table = KeywordTable(phrases={cid: (("clause",),)
                                  for cid in taxonomy.ordered_ids})
    resources = fit_resources(cfg, corpus, corpus.node_keys(), taxonomy,
                              keywords=table)
    matrix = features_for_keys(cfg, corpus, [], resources)
    assert matrix.shape == (0, 10 + len(taxonomy.ordered_ids))


def test_embedding_features_use_store(taxonomy, tmp_path):
    corpus = trigger_corpus(taxonomy, ["ALPHA"], 2)
    keys = corpus.node_keys()
    rng = np.random.default_rng(7)
    records = [(key, rng.normal(size=4)) for key in keys]
    path = tmp_path / "store.tsv"
    write_embedding_store(path, 4, records)
    store = load_embeddings(path)

    cfg = FeatureConfig.from_type_id(6)
    resources = fit_resources(cfg, corpus, keys, taxonomy, store=store)
    doc_id = keys[0][0]
    nodes = corpus.doc_nodes[doc_id]
    vector = assemble_features(cfg, corpus, doc_id, nodes[1], resources)
    assert len(vector) == 12
    np.testing.assert_array_equal(vector[:4],
                                  store.lookup(doc_id, nodes[1].node_id))
    np.testing.assert_array_equal(vector[4:8],
                                  store.lookup(doc_id, nodes[0].node_id))
    np.testing.assert_array_equal(vector[8:], np.zeros(4))
