"""Decision-forest classifiers built on numpy arrays.

Two split-selection modes share one tree representation:

- "rf": bootstrap-sampled trees; each split scans sorted candidate
  thresholds (midpoints between distinct values) on a random feature
  subset and keeps the Gini-optimal one.
- "extra": no bootstrap; each candidate feature gets a single uniformly
  drawn threshold and the Gini-best candidate wins, trading split
  optimality for variance reduction.

Everything is deterministic given the seed: per-tree generators are
derived from one root generator, ties resolve to the first candidate in
iteration order, and serialization uses a fixed binary layout.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field

import numpy as np

from .errors import TrainingError
from .serde import pack_blob, unpack_blob

FOREST_MAGIC = b"FORS1"


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    mode: str = "rf"  # "rf" | "extra"
    max_features: str | int = "sqrt"
    min_samples_split: int = 2
    max_depth: int | None = None

    def __post_init__(self):
        if self.mode not in ("rf", "extra"):
            raise ValueError(f"unknown forest mode {self.mode!r}")
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")

    def resolve_max_features(self, n_features: int) -> int:
        if self.max_features == "sqrt":
            return max(1, int(np.sqrt(n_features)))
        if self.max_features == "all":
            return n_features
        k = int(self.max_features)
        if not 1 <= k <= n_features:
            raise ValueError(f"max_features {k} out of range 1..{n_features}")
        return k

    def to_meta(self) -> dict:
        return {
            "n_trees": self.n_trees,
            "mode": self.mode,
            "max_features": self.max_features,
            "min_samples_split": self.min_samples_split,
            "max_depth": self.max_depth,
        }

    @classmethod
    def from_meta(cls, meta: dict) -> ForestConfig:
        return cls(
            n_trees=meta["n_trees"],
            mode=meta["mode"],
            max_features=meta["max_features"],
            min_samples_split=meta["min_samples_split"],
            max_depth=meta["max_depth"],
        )


@dataclass
class Tree:
    feature: np.ndarray  # int32, -1 at leaves
    threshold: np.ndarray  # float64
    left: np.ndarray  # int32, -1 at leaves
    right: np.ndarray  # int32, -1 at leaves
    proba: np.ndarray  # float64 (n_nodes, n_classes)

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Class-probability rows for a 2-D sample block."""
        idx = np.zeros(len(x), dtype=np.int32)
        while True:
            feat = self.feature[idx]
            internal = feat >= 0
            if not internal.any():
                break
            rows = np.nonzero(internal)[0]
            node = idx[rows]
            go_left = x[rows, self.feature[node]] <= self.threshold[node]
            idx[rows] = np.where(go_left, self.left[node], self.right[node])
        return self.proba[idx]


@dataclass
class DecisionForest:
    n_features: int
    classes: np.ndarray  # int64 original class values, index order
    config: ForestConfig
    seed: int
    trees: list[Tree] = field(default_factory=list)
    decision_threshold: float = 0.5

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def _check_input(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.n_features:
            raise TrainingError(
                f"dimension mismatch: model expects {self.n_features} features, "
                f"got {x.shape[1] if x.ndim == 2 else x.shape}"
            )
        return x

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        """Average vote fractions per class, shape (n, n_classes)."""
        x = self._check_input(x)
        total = np.zeros((len(x), self.n_classes))
        for tree in self.trees:
            total += tree.apply(x)
        return total / len(self.trees)

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Majority-vote class values; ties go to the lowest class index."""
        proba = self.predict_proba(x)
        return self.classes[np.argmax(proba, axis=1)]

    def predict_positive(self, x: np.ndarray) -> np.ndarray:
        """Boolean positives for a binary forest (class value 1)."""
        cols = np.nonzero(self.classes == 1)[0]
        if len(cols) == 0:
            return np.zeros(len(np.asarray(x)), dtype=bool)
        proba = self.predict_proba(x)
        return proba[:, cols[0]] >= self.decision_threshold


def _leaf(nodes: dict, counts: np.ndarray) -> int:
    index = len(nodes["feature"])
    nodes["feature"].append(-1)
    nodes["threshold"].append(0.0)
    nodes["left"].append(-1)
    nodes["right"].append(-1)
    nodes["proba"].append(counts / counts.sum())
    return index


def _best_sorted_split(values: np.ndarray, onehot: np.ndarray):
    """Gini-best (score, threshold) over midpoints of distinct sorted values."""
    order = np.argsort(values, kind="stable")
    v = values[order]
    cuts = np.nonzero(v[:-1] < v[1:])[0]
    if len(cuts) == 0:
        return None
    cum = np.cumsum(onehot[order], axis=0)
    total = cum[-1]
    n = len(v)
    n_left = (cuts + 1).astype(np.float64)
    n_right = n - n_left
    left = cum[cuts]
    right = total[None, :] - left
    gini_left = 1.0 - ((left / n_left[:, None]) ** 2).sum(axis=1)
    gini_right = 1.0 - ((right / n_right[:, None]) ** 2).sum(axis=1)
    score = (n_left * gini_left + n_right * gini_right) / n
    best = int(np.argmin(score))
    pos = cuts[best]
    return float(score[best]), float((v[pos] + v[pos + 1]) / 2.0)


def _random_threshold_split(values: np.ndarray, onehot: np.ndarray, rng):
    """Gini score of one uniformly drawn threshold, or None if constant."""
    lo = values.min()
    hi = values.max()
    if lo == hi:
        return None
    threshold = float(rng.uniform(lo, hi))
    mask = values <= threshold
    n = len(values)
    n_left = int(mask.sum())
    if n_left == 0 or n_left == n:
        return None
    left = onehot[mask].sum(axis=0)
    right = onehot[~mask].sum(axis=0)
    gini_left = 1.0 - ((left / n_left) ** 2).sum()
    gini_right = 1.0 - ((right / (n - n_left)) ** 2).sum()
    return (n_left * gini_left + (n - n_left) * gini_right) / n, threshold


def _grow_tree(x: np.ndarray, y_idx: np.ndarray, n_classes: int,
               config: ForestConfig, rng) -> Tree:
    n_samples, n_features = x.shape
    k = config.resolve_max_features(n_features)
    nodes = {"feature": [], "threshold": [], "left": [], "right": [], "proba": []}
    onehot_all = np.zeros((n_samples, n_classes))
    onehot_all[np.arange(n_samples), y_idx] = 1.0

    def build(indices: np.ndarray, depth: int) -> int:
        counts = onehot_all[indices].sum(axis=0)
        if (
            len(indices) < config.min_samples_split
            or (counts > 0).sum() <= 1
            or (config.max_depth is not None and depth >= config.max_depth)
        ):
            return _leaf(nodes, counts)
        sub = x[indices]
        sub_onehot = onehot_all[indices]
        best = None
        for feat in rng.permutation(n_features)[:k]:
            values = sub[:, feat]
            if config.mode == "rf":
                found = _best_sorted_split(values, sub_onehot)
            else:
                found = _random_threshold_split(values, sub_onehot, rng)
            if found is not None and (best is None or found[0] < best[0]):
                best = (found[0], int(feat), found[1])
        if best is None:
            return _leaf(nodes, counts)
        _, feat, threshold = best
        mask = sub[:, feat] <= threshold
        index = len(nodes["feature"])
        nodes["feature"].append(feat)
        nodes["threshold"].append(threshold)
        nodes["left"].append(-1)
        nodes["right"].append(-1)
        nodes["proba"].append(counts / counts.sum())
        left_index = build(indices[mask], depth + 1)
        right_index = build(indices[~mask], depth + 1)
        nodes["left"][index] = left_index
        nodes["right"][index] = right_index
        return index

    build(np.arange(n_samples), 0)
    return Tree(
        feature=np.array(nodes["feature"], dtype=np.int32),
        threshold=np.array(nodes["threshold"], dtype=np.float64),
        left=np.array(nodes["left"], dtype=np.int32),
        right=np.array(nodes["right"], dtype=np.int32),
        proba=np.array(nodes["proba"], dtype=np.float64),
    )


def train_forest(x: np.ndarray, y: np.ndarray, config: ForestConfig | None = None,
                 seed: int = 0) -> DecisionForest:
    """Train a forest on integer class labels. Deterministic given seed."""
    if config is None:
        config = ForestConfig()
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if x.ndim != 2 or len(x) != len(y):
        raise TrainingError("training matrix and labels disagree in length")
    if len(x) == 0:
        raise TrainingError("empty sample list")
    classes = np.unique(y)
    y_idx = np.searchsorted(classes, y)
    root_rng = np.random.default_rng(seed)
    tree_seeds = root_rng.integers(0, 2**63 - 1, size=config.n_trees)
    forest = DecisionForest(
        n_features=x.shape[1], classes=classes, config=config, seed=seed
    )
    sys_limit_guard = max(len(x), 10_000)
    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, sys_limit_guard))
    try:
        for tree_seed in tree_seeds:
            rng = np.random.default_rng(int(tree_seed))
            if config.mode == "rf":
                sample = rng.integers(0, len(x), size=len(x))
                forest.trees.append(
                    _grow_tree(x[sample], y_idx[sample], len(classes), config, rng)
                )
            else:
                forest.trees.append(
                    _grow_tree(x, y_idx, len(classes), config, rng)
                )
    finally:
        sys.setrecursionlimit(old_limit)
    return forest


def forest_to_blob(forest: DecisionForest, magic: bytes = FOREST_MAGIC) -> bytes:
    meta = {
        "kind": "decision-forest",
        "n_features": forest.n_features,
        "classes": [int(c) for c in forest.classes],
        "seed": forest.seed,
        "decision_threshold": forest.decision_threshold,
        "config": forest.config.to_meta(),
        "n_nodes": [len(tree.feature) for tree in forest.trees],
    }
    arrays = []
    for tree in forest.trees:
        arrays.extend([tree.feature, tree.threshold, tree.left, tree.right,
                       tree.proba])
    return pack_blob(magic, meta, arrays)


def forest_from_blob(data: bytes, magic: bytes = FOREST_MAGIC) -> DecisionForest:
    meta, arrays = unpack_blob(data, magic)
    config = ForestConfig.from_meta(meta["config"])
    forest = DecisionForest(
        n_features=meta["n_features"],
        classes=np.array(meta["classes"], dtype=np.int64),
        config=config,
        seed=meta["seed"],
        decision_threshold=meta["decision_threshold"],
    )
    for i in range(config.n_trees):
        feature, threshold, left, right, proba = arrays[5 * i:5 * i + 5]
        forest.trees.append(Tree(feature=feature, threshold=threshold,
                                 left=left, right=right, proba=proba))
    return forest
