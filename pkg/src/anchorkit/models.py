"""The black-box predictor contract and an in-house bagged tree ensemble.

The explanation code only ever calls ``predict_batch``.  The ensemble here
is deliberately simple: bootstrap-bagged Gini trees whose internal nodes
test *bin membership* (``disc[f] in left_bins``) on the discretized row, so
the model is a pure function of ``Instance.disc_values``.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from typing import Protocol, Sequence, runtime_checkable

import numpy as np

from . import kernels
from .data import TRAIN, Dataset, as_matrix
from .errors import ConfigError, CorruptFileError, DataError, FormatVersionError

MODEL_FORMAT_VERSION = 1


@runtime_checkable
class Predictor(Protocol):
    """Anything with a deterministic, label-valued ``predict_batch``."""

    n_classes: int

    def predict_batch(self, instances) -> np.ndarray: ...


def predict_batch(model: Predictor, instances) -> np.ndarray:
    if not isinstance(instances, np.ndarray) and len(instances) == 0:
        return np.zeros(0, dtype=np.int64)
    return np.asarray(model.predict_batch(instances), dtype=np.int64)


def schema_digest(schema_json) -> str:
    blob = json.dumps(schema_json, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


@dataclass(frozen=True)
class Tree:
    feature: np.ndarray  # -1 marks a leaf
    left: np.ndarray
    right: np.ndarray
    left_set: np.ndarray  # (n_nodes, n_cols) bool; last column = unknown bin
    counts: np.ndarray  # (n_nodes, n_classes) training class counts at each node

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def to_json(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "left_bins": [np.flatnonzero(row).tolist() for row in self.left_set],
            "counts": self.counts.tolist(),
        }

    @classmethod
    def from_json(cls, d, n_cols, n_classes) -> "Tree":
        feature = np.asarray(d["feature"], dtype=np.int64)
        n = len(feature)
        left_set = np.zeros((n, n_cols), dtype=np.bool_)
        for i, bins in enumerate(d["left_bins"]):
            left_set[i, bins] = True
        counts = np.asarray(d["counts"], dtype=np.int64).reshape(n, n_classes)
        tree = cls(feature, np.asarray(d["left"], dtype=np.int64), np.asarray(d["right"], dtype=np.int64),
                   left_set, counts)
        if len(tree.left) != n or len(tree.right) != n or left_set.shape[0] != n:
            raise CorruptFileError("inconsistent tree arrays")
        internal = feature >= 0
        for arr in (tree.left, tree.right):
            if internal.any() and (arr[internal].min() < 0 or arr[internal].max() >= n):
                raise CorruptFileError("child index out of range")
        return tree


class TreeEnsemble:
    """A list of bin-membership trees plus the arrays the traversal kernel uses.

    ``aggregation="score-sum"`` adds each leaf's class distribution,
    ``"vote"`` adds one vote for each leaf's majority class.  Prediction is
    the argmax with ties going to the lowest class index.
    """

    def __init__(self, trees: Sequence[Tree], n_features: int, n_cols: int, n_classes: int,
                 aggregation: str = "score-sum", schema_digest: str = "", params: dict | None = None):
        if aggregation not in ("vote", "score-sum"):
            raise ConfigError(f"unknown aggregation {aggregation!r}")
        if not trees:
            raise ConfigError("an ensemble needs at least one tree")
        self.trees = list(trees)
        self.n_features = n_features
        self.n_cols = n_cols
        self.n_classes = n_classes
        self.aggregation = aggregation
        self.schema_digest = schema_digest
        self.params = dict(params or {})
        for t in self.trees:
            if t.left_set.shape[1] != n_cols or t.counts.shape[1] != n_classes:
                raise CorruptFileError("tree shape does not match ensemble")
            if (t.feature >= n_features).any():
                raise CorruptFileError("tree references a feature outside the schema")
        self._flatten()

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def _flatten(self):
        offsets = np.cumsum([0] + [t.n_nodes for t in self.trees[:-1]]).astype(np.int64)
        self._roots = offsets
        self._feature = np.concatenate([t.feature for t in self.trees])
        self._left = np.concatenate([np.where(t.feature >= 0, t.left + o, -1) for t, o in zip(self.trees, offsets)])
        self._right = np.concatenate([np.where(t.feature >= 0, t.right + o, -1) for t, o in zip(self.trees, offsets)])
        self._left_set = np.ascontiguousarray(np.concatenate([t.left_set for t in self.trees]))
        counts = np.concatenate([t.counts for t in self.trees]).astype(float)
        if self.aggregation == "vote":
            leaf_values = np.zeros_like(counts)
            leaf_values[np.arange(len(counts)), counts.argmax(axis=1)] = 1.0
        else:
            totals = counts.sum(axis=1, keepdims=True)
            leaf_values = np.divide(counts, totals, out=np.zeros_like(counts), where=totals > 0)
        self._leaf_values = np.ascontiguousarray(leaf_values)

    def scores(self, instances) -> np.ndarray:
        X = as_matrix(instances)
        if X.shape[0] == 0:
            return np.zeros((0, self.n_classes))
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise DataError(f"model expects {self.n_features} features, got shape {X.shape}")
        if X.max() >= self.n_cols - 1:
            raise DataError("bin index outside the model's schema")
        return kernels.forest_scores(X, self._roots, self._feature, self._left, self._right,
                                     self._left_set, self._leaf_values)

    def predict_batch(self, instances) -> np.ndarray:
        s = self.scores(instances)
        if s.shape[0] == 0:
            return np.zeros(0, dtype=np.int64)
        return s.argmax(axis=1).astype(np.int64)

    def to_json(self) -> dict:
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "schema_digest": self.schema_digest,
            "aggregation": self.aggregation,
            "n_features": self.n_features,
            "n_cols": self.n_cols,
            "n_classes": self.n_classes,
            "params": self.params,
            "trees": [t.to_json() for t in self.trees],
        }

    @classmethod
    def from_json(cls, doc) -> "TreeEnsemble":
        if not isinstance(doc, dict) or "format_version" not in doc:
            raise CorruptFileError("not a model document")
        if doc["format_version"] != MODEL_FORMAT_VERSION:
            raise FormatVersionError(f"model format_version {doc['format_version']} != {MODEL_FORMAT_VERSION}")
        try:
            n_cols, n_classes = int(doc["n_cols"]), int(doc["n_classes"])
            trees = [Tree.from_json(t, n_cols, n_classes) for t in doc["trees"]]
            return cls(trees, int(doc["n_features"]), n_cols, n_classes, doc["aggregation"],
                       doc["schema_digest"], doc.get("params"))
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            if isinstance(exc, DataError):
                raise
            raise CorruptFileError(f"malformed model document: {exc}") from exc

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))


def save_model(model: TreeEnsemble, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(model.dumps())


def load_model(path) -> TreeEnsemble:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise CorruptFileError(f"{path}: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read model {path}: {exc}") from exc
    return TreeEnsemble.from_json(doc)


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------


def _gini_split(hist: np.ndarray, majority: int):
    """Best prefix split of the bins present in ``hist`` (n_cols x n_classes).

    Bins are ordered by their share of the node's majority class, which is
    the exact optimum for two classes and a good heuristic otherwise.
    Returns ``(weighted child impurity, left bins)`` or ``None``.
    """
    totals = hist.sum(axis=1)
    present = np.flatnonzero(totals)
    if len(present) < 2:
        return None
    share = hist[present, majority] / totals[present]
    order = present[np.argsort(-share, kind="stable")]
    cum = np.cumsum(hist[order], axis=0)[:-1].astype(float)
    n = totals.sum()
    rest = hist[order].sum(axis=0) - cum
    nl = cum.sum(axis=1)
    nr = n - nl
    gini_l = 1.0 - ((cum / nl[:, None]) ** 2).sum(axis=1)
    gini_r = 1.0 - ((rest / nr[:, None]) ** 2).sum(axis=1)
    impurity = (nl * gini_l + nr * gini_r) / n
    k = int(np.argmin(impurity))
    return float(impurity[k]), order[: k + 1]


def _grow_tree(X, y, rows, n_cols, n_classes, max_depth, max_features, min_samples_split, rng) -> Tree:
    n_feat = X.shape[1]
    feature, left, right, left_sets, counts = [], [], [], [], []

    def new_node(node_rows):
        feature.append(-1)
        left.append(-1)
        right.append(-1)
        left_sets.append(np.zeros(n_cols, dtype=np.bool_))
        counts.append(np.bincount(y[node_rows], minlength=n_classes))
        return len(feature) - 1

    stack = [(new_node(rows), rows, 0)]
    while stack:
        node, node_rows, depth = stack.pop()
        c = counts[node]
        n = c.sum()
        if depth >= max_depth or n < min_samples_split or (c > 0).sum() <= 1:
            continue
        parent = 1.0 - ((c / n) ** 2).sum()
        feats = np.sort(rng.choice(n_feat, size=max_features, replace=False)).astype(np.int64)
        hist = kernels.class_histograms(X, y, node_rows, feats, n_cols, n_classes)
        majority = int(np.argmax(c))
        best = None
        for k, f in enumerate(feats):
            res = _gini_split(hist[k], majority)
            if res is not None and (best is None or res[0] < best[0]):
                best = (res[0], int(f), res[1])
        if best is None or parent - best[0] <= 1e-12:
            continue
        _, f, bins = best
        mask = np.zeros(n_cols, dtype=np.bool_)
        mask[bins] = True
        col = X[node_rows, f]
        go_left = mask[np.where(col < 0, n_cols - 1, col)]
        feature[node] = f
        left_sets[node] = mask
        lrows, rrows = node_rows[go_left], node_rows[~go_left]
        left[node] = new_node(lrows)
        right[node] = new_node(rrows)
        # right pushed first so the left subtree is expanded first
        stack.append((right[node], rrows, depth + 1))
        stack.append((left[node], lrows, depth + 1))

    return Tree(
        np.asarray(feature, dtype=np.int64),
        np.asarray(left, dtype=np.int64),
        np.asarray(right, dtype=np.int64),
        np.asarray(left_sets, dtype=np.bool_).reshape(len(feature), n_cols),
        np.asarray(counts, dtype=np.int64).reshape(len(feature), n_classes),
    )


def train_tree_ensemble(dataset: Dataset, n_trees: int = 100, max_depth: int = 8, seed: int = 0,
                        aggregation: str = "score-sum", max_features: int | None = None,
                        min_samples_split: int = 2, bootstrap: bool = True) -> TreeEnsemble:
    """Fit bagged Gini trees on the train split's discretized features.

    Each tree draws a bootstrap sample and considers ``max_features``
    (default ``round(sqrt(F))``) random features per split, all from a
    generator seeded by ``(seed, tree index)``; the result is a pure
    function of the arguments.
    """
    if n_trees < 1:
        raise ConfigError("n_trees must be >= 1")
    if max_depth < 0:
        raise ConfigError("max_depth must be >= 0")
    X, y = dataset.part(TRAIN)
    if len(y) == 0:
        raise DataError("train split is empty")
    X = np.ascontiguousarray(X, dtype=np.int64)
    y = np.ascontiguousarray(y, dtype=np.int64)
    n_feat = X.shape[1]
    n_cols = max([f.n_bins for f in dataset.schema] + [1]) + 1
    if max_features is None:
        max_features = max(1, int(round(math.sqrt(n_feat))))
    max_features = min(max_features, n_feat)
    trees = []
    for t in range(n_trees):
        rng = np.random.default_rng(np.random.SeedSequence([seed, t]))
        rows = rng.integers(0, len(y), size=len(y)) if bootstrap else np.arange(len(y))
        rows = np.sort(rows).astype(np.int64)
        depth = max_depth if n_feat else 0
        trees.append(_grow_tree(X, y, rows, n_cols, dataset.n_classes, depth, max_features,
                                min_samples_split, rng))
    params = {"n_trees": n_trees, "max_depth": max_depth, "seed": seed, "max_features": max_features,
              "min_samples_split": min_samples_split, "bootstrap": bootstrap}
    return TreeEnsemble(trees, n_feat, n_cols, dataset.n_classes, aggregation,
                        schema_digest(dataset.schema_json()), params)
