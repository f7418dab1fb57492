"""Hierarchical concept classifiers over the taxonomy.

Two architectures:

- LCN ("local classifier per node"): one binary decision forest per
  concept with enough positive training nodes; applied independently to
  every node, then predictions are closed under ancestors.
- LCPN ("local classifier per parent node"): one multi-label network per
  taxonomy parent (plus a virtual root over the level-1 concepts);
  applied as a cascade in which a child label is emitted only when its
  parent was emitted, so parent mistakes propagate by construction.

A node counts positive for a concept when its label set contains the
concept or any of its descendants. Scarce concepts are skipped, with the
reason recorded, rather than trained on hopeless sample sizes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import Corpus, NodeKey, SplitSpec
from .errors import TrainingError
from .features import (FeatureConfig, FeatureResources, KeywordTable,
                       Vocabulary, features_for_keys)
from .forest import (DecisionForest, ForestConfig, forest_from_blob,
                     forest_to_blob, train_forest)
from .network import (MlpModel, NetworkConfig, mlp_from_blob, mlp_to_blob,
                      train_mlp)
from .serde import pack_blob, unpack_blob
from .taxonomy import Taxonomy

LCN_MAGIC = b"LCNF1"
LCPN_MAGIC = b"LCPN1"
VIRTUAL_ROOT = "<root>"

DEFAULT_MIN_POS = 20
DEFAULT_UPSAMPLE_RATIO = 1.0 / 3.0


def expanded_labels(labels: tuple[str, ...], taxonomy: Taxonomy) -> frozenset:
    """Labels plus all their ancestors: the concepts a node is positive for."""
    expanded: set[str] = set()
    for label in labels:
        expanded.add(label)
        expanded.update(taxonomy.ancestors_of(label))
    return frozenset(expanded)


def upsample_indices(y: np.ndarray, ratio_target: float,
                     seed: int) -> np.ndarray:
    """Row indices with positives duplicated (seeded, with replacement)
    until positives/negatives reaches the target; never drops rows."""
    if ratio_target <= 0:
        raise TrainingError(f"ratio_target must be > 0, got {ratio_target}")
    y = np.asarray(y, dtype=bool)
    positives = np.nonzero(y)[0]
    negatives_count = int((~y).sum())
    if len(positives) == 0:
        raise TrainingError("cannot upsample empty class")
    base = np.arange(len(y))
    if negatives_count == 0:
        return base
    needed = int(np.ceil(ratio_target * negatives_count)) - len(positives)
    if needed <= 0:
        return base
    rng = np.random.default_rng(seed)
    extra = rng.choice(positives, size=needed, replace=True)
    return np.concatenate([base, extra])


@dataclass
class ParentModel:
    """Multi-label head for the eligible children of one taxonomy parent."""
    mlp: MlpModel
    children: tuple[str, ...]


@dataclass
class HierarchyClassifier:
    architecture: str  # "lcn" | "lcpn"
    cfg: FeatureConfig
    seed: int
    models: dict = field(default_factory=dict)
    skipped: dict[str, str] = field(default_factory=dict)
    inherit: dict[str, str] = field(default_factory=dict)
    hyper: dict = field(default_factory=dict)


def _per_concept_seeds(seed: int, count: int) -> list[list[int]]:
    root = np.random.SeedSequence(seed)
    return [
        [int(word) for word in child.generate_state(2)]
        for child in root.spawn(count)
    ]


def train_lcn(corpus: Corpus, split: SplitSpec, cfg: FeatureConfig,
              taxonomy: Taxonomy, resources: FeatureResources,
              min_pos: int = DEFAULT_MIN_POS,
              upsample_ratio: float = DEFAULT_UPSAMPLE_RATIO,
              forest_config: ForestConfig | None = None,
              seed: int = 0) -> HierarchyClassifier:
    """One binary forest per concept with >= min_pos positive train nodes."""
    if forest_config is None:
        forest_config = ForestConfig()
    train_keys = split.train_node_keys(corpus)
    if not train_keys:
        raise TrainingError("empty training set")
    x = features_for_keys(cfg, corpus, train_keys, resources)
    positive_sets = [
        expanded_labels(corpus.nodes[key].labels, taxonomy)
        for key in train_keys
    ]
    classifier = HierarchyClassifier(
        architecture="lcn", cfg=cfg, seed=seed,
        hyper={
            "min_pos": min_pos,
            "upsample_ratio": upsample_ratio,
            "forest": forest_config.to_meta(),
        },
    )
    concept_seeds = _per_concept_seeds(seed, len(taxonomy.ordered_ids))
    for concept_id, (upsample_seed, forest_seed) in zip(
            taxonomy.ordered_ids, concept_seeds):
        y = np.array([concept_id in positives for positives in positive_sets],
                     dtype=np.int64)
        n_positive = int(y.sum())
        if n_positive < min_pos:
            classifier.skipped[concept_id] = (
                f"{n_positive} positive training nodes (< min_pos={min_pos})"
            )
            continue
        indices = upsample_indices(y, upsample_ratio, upsample_seed)
        classifier.models[concept_id] = train_forest(
            x[indices], y[indices], forest_config, seed=forest_seed
        )
    return classifier


def train_lcpn(corpus: Corpus, split: SplitSpec, cfg: FeatureConfig,
               taxonomy: Taxonomy, resources: FeatureResources,
               network_config: NetworkConfig | None = None,
               seed: int = 0) -> HierarchyClassifier:
    """One multi-label network per parent with >= 2 eligible children."""
    if network_config is None:
        network_config = NetworkConfig()
    train_keys = split.train_node_keys(corpus)
    if not train_keys:
        raise TrainingError("empty training set")
    x = features_for_keys(cfg, corpus, train_keys, resources)
    positive_sets = [
        expanded_labels(corpus.nodes[key].labels, taxonomy)
        for key in train_keys
    ]
    classifier = HierarchyClassifier(
        architecture="lcpn", cfg=cfg, seed=seed,
        hyper={"network": network_config.to_meta()},
    )
    parents = [VIRTUAL_ROOT] + [
        concept_id for concept_id in taxonomy.ordered_ids
        if taxonomy.children_of(concept_id)
    ]
    parent_seeds = _per_concept_seeds(seed, len(parents))
    for parent_id, (_, mlp_seed) in zip(parents, parent_seeds):
        if parent_id == VIRTUAL_ROOT:
            children = list(taxonomy.roots)
            subset = np.arange(len(train_keys))
        else:
            children = taxonomy.children_of(parent_id)
            subset = np.array([
                i for i, positives in enumerate(positive_sets)
                if parent_id in positives
            ], dtype=np.int64)
        if len(subset) == 0:
            classifier.skipped[parent_id] = "no positive training nodes"
            continue
        eligible = [
            child for child in children
            if any(child in positive_sets[i] for i in subset)
        ]
        if len(eligible) == 0:
            classifier.skipped[parent_id] = "no eligible children"
            continue
        if len(eligible) == 1:
            classifier.inherit[parent_id] = eligible[0]
            classifier.skipped[parent_id] = (
                f"single eligible child {eligible[0]} inherits the parent "
                f"prediction"
            )
            continue
        targets = np.zeros((len(subset), len(eligible)))
        for row, i in enumerate(subset):
            for col, child in enumerate(eligible):
                if child in positive_sets[i]:
                    targets[row, col] = 1.0
        classifier.models[parent_id] = ParentModel(
            mlp=train_mlp(x[subset], targets, network_config, seed=mlp_seed),
            children=tuple(eligible),
        )
    return classifier


def _close_under_ancestors(labels: set[str], taxonomy: Taxonomy) -> set[str]:
    closed = set(labels)
    for label in labels:
        closed.update(taxonomy.ancestors_of(label))
    return closed


def predict_nodes(classifier: HierarchyClassifier, corpus: Corpus,
                  keys: list[NodeKey], taxonomy: Taxonomy,
                  resources: FeatureResources) -> dict[NodeKey, set[str]]:
    """Predicted concept sets for the given nodes (ancestor-closed)."""
    if not keys:
        return {}
    x = features_for_keys(classifier.cfg, corpus, keys, resources)
    if classifier.architecture == "lcn":
        return _predict_lcn(classifier, keys, x, taxonomy)
    return _predict_lcpn(classifier, keys, x, taxonomy)


def _predict_lcn(classifier: HierarchyClassifier, keys: list[NodeKey],
                 x: np.ndarray, taxonomy: Taxonomy) -> dict:
    raw: list[set[str]] = [set() for _ in keys]
    for concept_id, forest in classifier.models.items():
        positive = forest.predict_positive(x)
        for i in np.nonzero(positive)[0]:
            raw[int(i)].add(concept_id)
    return {
        key: _close_under_ancestors(labels, taxonomy)
        for key, labels in zip(keys, raw)
    }


def _predict_lcpn(classifier: HierarchyClassifier, keys: list[NodeKey],
                  x: np.ndarray, taxonomy: Taxonomy) -> dict:
    # One batched forward pass per parent model, then a per-node cascade.
    parent_votes: dict[str, tuple[tuple[str, ...], np.ndarray]] = {}
    for parent_id, model in classifier.models.items():
        proba = model.mlp.predict_proba(x)
        parent_votes[parent_id] = (model.children, proba >= 0.5)

    def children_predicted(parent_id: str, row: int) -> list[str]:
        if parent_id in parent_votes:
            children, votes = parent_votes[parent_id]
            return [child for col, child in enumerate(children)
                    if votes[row, col]]
        if parent_id in classifier.inherit:
            return [classifier.inherit[parent_id]]
        return []

    predictions: dict[NodeKey, set[str]] = {}
    for row, key in enumerate(keys):
        emitted: set[str] = set()
        frontier = children_predicted(VIRTUAL_ROOT, row)
        while frontier:
            concept_id = frontier.pop(0)
            if concept_id in emitted:
                continue
            emitted.add(concept_id)
            frontier.extend(children_predicted(concept_id, row))
        predictions[key] = _close_under_ancestors(emitted, taxonomy)
    return predictions


def predict_document(classifier: HierarchyClassifier, corpus: Corpus,
                     doc_id: str, taxonomy: Taxonomy,
                     resources: FeatureResources) -> dict[str, set[str]]:
    """node-id -> predicted concept set for one document."""
    keys = [(doc_id, node.node_id) for node in corpus.doc_nodes[doc_id]]
    by_key = predict_nodes(classifier, corpus, keys, taxonomy, resources)
    return {node_id: by_key[(doc_id, node_id)] for _, node_id in keys}


# Bundle persistence ---------------------------------------------------------

def _model_file_name(taxonomy: Taxonomy, concept_id: str) -> str:
    if concept_id == VIRTUAL_ROOT:
        return "root.bin"
    return f"c{taxonomy.file_order(concept_id):03d}.bin"


def save_bundle(classifier: HierarchyClassifier, taxonomy: Taxonomy,
                directory, resources: FeatureResources | None = None,
                split: SplitSpec | None = None,
                extra_meta: dict | None = None) -> None:
    """Write a self-contained model bundle directory.

    The manifest carries everything needed to re-evaluate except the
    embedding store (recorded by dimension only): architecture, feature
    configuration, fitted vocabularies, keyword phrases, skip reasons,
    seeds and hyperparameters.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    files = {}
    for concept_id, model in sorted(classifier.models.items()):
        name = _model_file_name(taxonomy, concept_id)
        files[concept_id] = name
        if classifier.architecture == "lcn":
            blob = forest_to_blob(model, magic=LCN_MAGIC)
        else:
            blob = pack_blob(
                LCPN_MAGIC,
                {
                    "children": list(model.children),
                    "seed": model.mlp.seed,
                    "config": model.mlp.config.to_meta(),
                },
                [model.mlp.w1, model.mlp.b1, model.mlp.w2, model.mlp.b2],
            )
        (directory / name).write_bytes(blob)
    manifest = {
        "architecture": classifier.architecture,
        "feature_config": classifier.cfg.to_meta(),
        "seed": classifier.seed,
        "hyper": classifier.hyper,
        "skipped": classifier.skipped,
        "inherit": classifier.inherit,
        "files": files,
    }
    if resources is not None:
        manifest["vocabulary"] = (
            resources.vocabulary.to_meta() if resources.vocabulary else None
        )
        manifest["title_vocabulary"] = (
            resources.title_vocabulary.to_meta()
            if resources.title_vocabulary else None
        )
        manifest["keywords"] = (
            {cid: [" ".join(tokens) for tokens in phrases]
             for cid, phrases in resources.keywords.phrases.items()}
            if resources.keywords else None
        )
        manifest["store_dimension"] = (
            resources.store.dimension if resources.store else None
        )
    if split is not None:
        manifest["split"] = {
            "mode": split.mode,
            "seed": split.seed,
            "train_ids": [list(k) if isinstance(k, tuple) else k
                          for k in split.train_ids],
            "test_ids": [list(k) if isinstance(k, tuple) else k
                         for k in split.test_ids],
        }
    if extra_meta:
        manifest["extra"] = extra_meta
    (directory / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )


def load_bundle(directory, taxonomy: Taxonomy):
    """Read a bundle directory back into (classifier, resources, split)."""
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text("utf-8"))
    cfg = FeatureConfig.from_meta(manifest["feature_config"])
    classifier = HierarchyClassifier(
        architecture=manifest["architecture"],
        cfg=cfg,
        seed=manifest["seed"],
        skipped=dict(manifest["skipped"]),
        inherit=dict(manifest["inherit"]),
        hyper=dict(manifest["hyper"]),
    )
    for concept_id, name in manifest["files"].items():
        blob = (directory / name).read_bytes()
        if classifier.architecture == "lcn":
            classifier.models[concept_id] = forest_from_blob(
                blob, magic=LCN_MAGIC
            )
        else:
            meta, arrays = unpack_blob(blob, LCPN_MAGIC)
            w1, b1, w2, b2 = arrays
            classifier.models[concept_id] = ParentModel(
                mlp=MlpModel(
                    w1=w1, b1=b1, w2=w2, b2=b2,
                    config=NetworkConfig.from_meta(meta["config"]),
                    seed=meta["seed"],
                ),
                children=tuple(meta["children"]),
            )
    resources = FeatureResources(taxonomy=taxonomy)
    if manifest.get("vocabulary"):
        resources.vocabulary = Vocabulary.from_meta(manifest["vocabulary"])
    if manifest.get("title_vocabulary"):
        resources.title_vocabulary = Vocabulary.from_meta(
            manifest["title_vocabulary"]
        )
    if manifest.get("keywords"):
        resources.keywords = KeywordTable(phrases={
            cid: tuple(tuple(phrase.split(" ")) for phrase in phrases)
            for cid, phrases in manifest["keywords"].items()
        })
    split = None
    if manifest.get("split"):
        raw = manifest["split"]
        to_key = ((lambda k: tuple(k)) if raw["mode"] == "segment"
                  else (lambda k: k))
        split = SplitSpec(
            mode=raw["mode"], seed=raw["seed"],
            train_ids=tuple(to_key(k) for k in raw["train_ids"]),
            test_ids=tuple(to_key(k) for k in raw["test_ids"]),
        )
    return classifier, resources, split
