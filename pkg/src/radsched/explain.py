"""Exact Shapley attributions for the tree ensemble, plus the data behind
beeswarm and waterfall views.

Conditional expectations use tree-path cover weighting (per-node training
sample counts recorded at fit time).  Rendering is left to the CLI CSV
emitters and the browser console; this module produces data only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .gbt import GbtModel, predict_raw
from .learning import FEATURE_NAMES, NUM_FEATURES

__all__ = ["Attribution", "GlobalSummary", "tree_shap", "shap_values",
           "global_summary", "waterfall", "WaterfallRow"]


@dataclass(frozen=True)
class Attribution:
    base_value: float
    phis: np.ndarray
    prediction: float

    def to_json(self):
        return {"base_value": self.base_value,
                "phis": self.phis.tolist(),
                "prediction": self.prediction,
                "feature_names": list(FEATURE_NAMES)}


@dataclass(frozen=True)
class GlobalSummary:
    mean_abs_phi: np.ndarray          # per feature
    ranking: list                     # feature indices, descending mean |phi|
    points: np.ndarray                # (n, d) phi values
    feature_values: np.ndarray        # (n, d) raw feature values

    def to_json(self):
        return {
            "mean_abs_phi": self.mean_abs_phi.tolist(),
            "ranking": [{"feature": int(i), "name": FEATURE_NAMES[i],
                         "mean_abs_phi": float(self.mean_abs_phi[i])}
                        for i in self.ranking],
        }


def shap_values(model: GbtModel, X) -> np.ndarray:
    """Per-row, per-feature Shapley values; rows sum to prediction - base."""
    X = np.ascontiguousarray(np.atleast_2d(X), dtype=np.float64)
    if X.shape[1] != model.num_features:
        raise ValueError(f"expected {model.num_features} features, got {X.shape[1]}")
    feature, threshold, left, right, value, cover, offsets, depths = model.flat()
    return _kernels.shap_batch(X, feature, threshold, left, right, value,
                               cover, offsets, depths, model.learning_rate)


def tree_shap(model: GbtModel, x) -> Attribution:
    x = np.asarray(x, dtype=np.float64)
    phis = shap_values(model, x[None, :])[0]
    prediction = float(predict_raw(model, x[None, :])[0])
    return Attribution(model.expected_value(), phis, prediction)


def global_summary(model: GbtModel, X) -> GlobalSummary:
    X = np.ascontiguousarray(np.atleast_2d(X), dtype=np.float64)
    if X.shape[0] == 0:
        raise ValueError("dataset must be nonempty")
    phis = shap_values(model, X)
    mean_abs = np.abs(phis).mean(axis=0)
    ranking = sorted(range(X.shape[1]), key=lambda i: (-mean_abs[i], i))
    return GlobalSummary(mean_abs, ranking, phis, X.copy())


@dataclass(frozen=True)
class WaterfallRow:
    feature: int
    name: str
    value: float
    phi: float
    cumulative: float


def waterfall(model: GbtModel, x) -> list[WaterfallRow]:
    """Attribution rows sorted by |phi| descending; cumulative ends at f(x).

    Features with exactly zero phi are dropped (they would render as
    zero-height bars).
    """
    x = np.asarray(x, dtype=np.float64)
    attr = tree_shap(model, x)
    order = sorted(range(x.shape[0]), key=lambda i: (-abs(attr.phis[i]), i))
    rows = []
    cumulative = attr.base_value
    for i in order:
        if attr.phis[i] == 0.0:
            continue
        cumulative += attr.phis[i]
        rows.append(WaterfallRow(i, FEATURE_NAMES[i] if x.shape[0] == NUM_FEATURES
                                 else f"f{i}", float(x[i]), float(attr.phis[i]),
                                 cumulative))
    return rows
