import numpy as np
import pytest

from radsched.explain import (global_summary, shap_values, tree_shap,
                              waterfall)
from radsched.gbt import Hyperparams, fit_gbt, predict_raw
from radsched.learning import NUM_FEATURES
from conftest import brute_force_shap


def small_ensemble(seed, n_features=6, num_trees=4, depth=3, n=60):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-3, 3, size=(n, n_features))
    y = (np.where(X[:, 0] > 0, 2.0, -1.0) + X[:, 1] * X[:, min(2, n_features - 1)]
         + rng.normal(0, 0.3, size=n))
    return fit_gbt(X, y, Hyperparams(num_trees, depth, 0.3, 3)), X


class TestAgainstBruteForce:
    @pytest.mark.parametrize("seed", range(8))
    def test_matches_subset_enumeration(self, seed):
        model, X = small_ensemble(seed)
        rng = np.random.default_rng(seed + 1000)
        xs = rng.uniform(-3, 3, size=(5, X.shape[1]))
        fast = shap_values(model, xs)
        for i, x in enumerate(xs):
            slow = brute_force_shap(model, x)
            np.testing.assert_allclose(fast[i], slow, atol=1e-9)

    def test_deep_trees_still_exact(self):
        model, X = small_ensemble(99, n_features=4, num_trees=3, depth=6, n=200)
        x = X[0]
        np.testing.assert_allclose(shap_values(model, x[None])[0],
                                   brute_force_shap(model, x), atol=1e-9)


class TestLocalAccuracy:
    def test_phis_sum_to_prediction_minus_base(self):
        model, X = small_ensemble(5, n_features=8, num_trees=10, depth=4, n=300)
        rng = np.random.default_rng(7)
        xs = rng.uniform(-4, 4, size=(500, 8))
        phis = shap_values(model, xs)
        preds = predict_raw(model, xs)
        base = model.expected_value()
        np.testing.assert_allclose(base + phis.sum(axis=1), preds, atol=1e-9)

    def test_full_width_model(self, small_model):
        rng = np.random.default_rng(8)
        xs = rng.uniform(0, 240, size=(200, NUM_FEATURES))
        phis = shap_values(small_model, xs)
        np.testing.assert_allclose(small_model.expected_value() + phis.sum(axis=1),
                                   predict_raw(small_model, xs), atol=1e-9)


class TestShapleyAxioms:
    def test_dummy_feature_gets_zero(self):
        """A feature no tree splits on must receive zero attribution."""
        rng = np.random.default_rng(11)
        X = rng.normal(size=(200, 4))
        y = 3.0 * X[:, 0] - 2.0 * X[:, 2]   # features 1 and 3 are noise-free dummies
        model = fit_gbt(X, y, Hyperparams(10, 2, 0.2, 5))
        used = {int(f) for t in model.trees for f in t.feature if f >= 0}
        unused = set(range(4)) - used
        assert unused, "expected at least one unused feature in this fixture"
        phis = shap_values(model, X[:20])
        for j in unused:
            np.testing.assert_array_equal(phis[:, j], 0.0)

    def test_attribution_object(self, small_model):
        x = np.full(NUM_FEATURES, 100.0)
        attr = tree_shap(small_model, x)
        assert attr.base_value == pytest.approx(small_model.expected_value())
        assert attr.base_value + attr.phis.sum() == pytest.approx(attr.prediction,
                                                                  abs=1e-9)
        doc = attr.to_json()
        assert len(doc["phis"]) == NUM_FEATURES


class TestViews:
    def test_waterfall_cumulative_ends_at_prediction(self, small_model):
        rng = np.random.default_rng(13)
        x = rng.uniform(0, 240, size=NUM_FEATURES)
        rows = waterfall(small_model, x)
        assert rows, "expected at least one nonzero bar"
        phis = np.abs([r.phi for r in rows])
        assert np.all(np.diff(phis) <= 1e-12)   # sorted by |phi| descending
        assert rows[-1].cumulative == pytest.approx(
            float(predict_raw(small_model, x[None])[0]), abs=1e-9)

    def test_waterfall_drops_zero_bars(self):
        model, X = small_ensemble(17, n_features=6)
        rows = waterfall(model, X[0])
        assert all(r.phi != 0.0 for r in rows)

    def test_global_summary_ranking(self, small_model):
        rng = np.random.default_rng(19)
        X = rng.uniform(0, 240, size=(100, NUM_FEATURES))
        summary = global_summary(small_model, X)
        means = summary.mean_abs_phi[summary.ranking]
        assert np.all(np.diff(means) <= 1e-12)
        assert summary.points.shape == (100, NUM_FEATURES)

    def test_global_summary_empty_rejected(self, small_model):
        with pytest.raises(ValueError):
            global_summary(small_model, np.zeros((0, NUM_FEATURES)))

    def test_feature_count_checked(self, small_model):
        with pytest.raises(ValueError, match="expected 54"):
            shap_values(small_model, np.zeros((1, 10)))
