"""Least-squares gradient boosting with axis-aligned regression trees.

Deterministic by construction: exact greedy splits, no subsampling, fixed
tie-breaking.  Trees are stored as flat arrays so that prediction and SHAP
can run through the jit kernels in :mod:`radsched._kernels`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import _kernels

__all__ = ["Tree", "GbtModel", "Hyperparams", "fit_gbt", "predict_raw",
           "save_model", "load_model", "ModelFormatError"]

MODEL_FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Hyperparams:
    num_trees: int = 200
    max_depth: int = 6
    learning_rate: float = 0.1
    min_leaf: int = 5

    def to_json(self):
        return {"num_trees": self.num_trees, "max_depth": self.max_depth,
                "learning_rate": self.learning_rate, "min_leaf": self.min_leaf}


@dataclass
class Tree:
    """Flat-array binary regression tree; feature=-1 marks a leaf."""

    feature: np.ndarray     # int64
    threshold: np.ndarray   # float64
    left: np.ndarray        # int64
    right: np.ndarray      # int64
    value: np.ndarray       # float64, leaf prediction (internal nodes carry node mean)
    cover: np.ndarray       # float64, training samples through each node

    @property
    def num_nodes(self) -> int:
        return self.feature.shape[0]

    def max_depth(self) -> int:
        depth = np.zeros(self.num_nodes, dtype=np.int64)
        out = 0
        for i in range(self.num_nodes):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[i] + 1
                depth[self.right[i]] = depth[i] + 1
            out = max(out, int(depth[i]))
        return out

    def expectation(self) -> float:
        """Cover-weighted expected output over the training distribution."""
        leaves = self.feature < 0
        return float((self.value[leaves] * self.cover[leaves]).sum() / self.cover[0])

    def to_json(self) -> dict:
        return {"feature": self.feature.tolist(), "threshold": self.threshold.tolist(),
                "left": self.left.tolist(), "right": self.right.tolist(),
                "value": self.value.tolist(), "cover": self.cover.tolist()}

    @classmethod
    def from_json(cls, rec: dict) -> "Tree":
        return cls(np.asarray(rec["feature"], dtype=np.int64),
                   np.asarray(rec["threshold"], dtype=np.float64),
                   np.asarray(rec["left"], dtype=np.int64),
                   np.asarray(rec["right"], dtype=np.int64),
                   np.asarray(rec["value"], dtype=np.float64),
                   np.asarray(rec["cover"], dtype=np.float64))


@dataclass
class GbtModel:
    trees: list
    learning_rate: float
    base_score: float            # mean training label
    num_features: int
    hyperparams: Hyperparams
    _flat: tuple | None = field(default=None, repr=False)

    def flat(self):
        """Concatenated tree arrays + offsets for the jit kernels."""
        if self._flat is None:
            if self.trees:
                feature = np.concatenate([t.feature for t in self.trees])
                threshold = np.concatenate([t.threshold for t in self.trees])
                value = np.concatenate([t.value for t in self.trees])
                cover = np.concatenate([t.cover for t in self.trees])
                sizes = np.array([t.num_nodes for t in self.trees], dtype=np.int64)
                offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
                left = np.concatenate(
                    [t.left + offsets[i] for i, t in enumerate(self.trees)])
                right = np.concatenate(
                    [t.right + offsets[i] for i, t in enumerate(self.trees)])
                # leaves keep -1 children; shifting them is harmless but confusing
                left[feature < 0] = -1
                right[feature < 0] = -1
                depths = np.array([t.max_depth() for t in self.trees], dtype=np.int64)
            else:
                feature = np.empty(0, dtype=np.int64)
                threshold = value = cover = np.empty(0)
                left = right = np.empty(0, dtype=np.int64)
                offsets = np.zeros(1, dtype=np.int64)
                depths = np.empty(0, dtype=np.int64)
            self._flat = (feature, threshold, left, right, value, cover, offsets, depths)
        return self._flat

    def expected_value(self) -> float:
        return self.base_score + self.learning_rate * sum(
            t.expectation() for t in self.trees)


def _build_tree(X, y, idx, max_depth, min_leaf):
    feature, threshold, left, right, value, cover = [], [], [], [], [], []

    def grow(node_idx, depth) -> int:
        node = len(feature)
        ysub = y[node_idx]
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(float(ysub.mean()))
        cover.append(float(node_idx.shape[0]))
        if depth >= max_depth:
            return node
        f, thr, gain = _kernels.best_split(X, y, node_idx, min_leaf)
        if f < 0:
            return node
        mask = X[node_idx, f] <= thr
        feature[node] = f
        threshold[node] = thr
        left[node] = grow(node_idx[mask], depth + 1)
        right[node] = grow(node_idx[~mask], depth + 1)
        return node

    grow(idx, 0)
    return Tree(np.asarray(feature, dtype=np.int64), np.asarray(threshold),
                np.asarray(left, dtype=np.int64), np.asarray(right, dtype=np.int64),
                np.asarray(value), np.asarray(cover))


def _tree_predict(tree: Tree, X) -> np.ndarray:
    offsets = np.array([0, tree.num_nodes], dtype=np.int64)
    return _kernels.predict_flat(X, tree.feature, tree.threshold, tree.left,
                                 tree.right, tree.value, offsets, 1.0, 0.0)


def fit_gbt(X, y, hyperparams: Hyperparams = Hyperparams(),
            rng: np.random.Generator | None = None) -> GbtModel:
    """Stagewise least-squares boosting; each tree fits the current residuals.

    ``rng`` is accepted for interface symmetry; fitting is deterministic
    (no subsampling), so it is unused.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or y.shape[0] != X.shape[0]:
        raise ValueError("X must be (n, d) with matching y")
    if X.shape[0] < 2:
        raise ValueError("need at least 2 training examples")
    base = float(y.mean())
    pred = np.full(y.shape[0], base)
    idx = np.arange(X.shape[0], dtype=np.int64)
    trees = []
    for _ in range(hyperparams.num_trees):
        residual = y - pred
        tree = _build_tree(X, residual, idx, hyperparams.max_depth, hyperparams.min_leaf)
        pred = pred + hyperparams.learning_rate * _tree_predict(tree, X)
        trees.append(tree)
    return GbtModel(trees, hyperparams.learning_rate, base, X.shape[1], hyperparams)


def predict_raw(model: GbtModel, X) -> np.ndarray:
    X = np.ascontiguousarray(np.atleast_2d(X), dtype=np.float64)
    if X.shape[1] != model.num_features:
        raise ValueError(f"expected {model.num_features} features, got {X.shape[1]}")
    feature, threshold, left, right, value, cover, offsets, depths = model.flat()
    return _kernels.predict_flat(X, feature, threshold, left, right, value,
                                 offsets, model.learning_rate, model.base_score)


def save_model(model: GbtModel, path) -> None:
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": "gbt-regressor",
        "learning_rate": model.learning_rate,
        "base_score": model.base_score,
        "num_features": model.num_features,
        "hyperparams": model.hyperparams.to_json(),
        "trees": [t.to_json() for t in model.trees],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True)


def load_model(path) -> GbtModel:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: malformed model file at line {exc.lineno} "
                               f"column {exc.colno}: {exc.msg}") from exc
    version = doc.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ModelFormatError(
            f"{path}: unsupported model format version {version!r}, "
            f"expected {MODEL_FORMAT_VERSION}")
    hp = Hyperparams(**doc["hyperparams"])
    trees = [Tree.from_json(rec) for rec in doc["trees"]]
    return GbtModel(trees, doc["learning_rate"], doc["base_score"],
                    doc["num_features"], hp)
