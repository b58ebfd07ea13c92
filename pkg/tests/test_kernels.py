"""The numba kernels and the pure-numpy fallbacks must agree exactly.

The active path is chosen at import time by ``RADSCHED_NO_NUMBA``; here both
implementations are exercised directly against each other.
"""

import numpy as np
import pytest

from radsched import _kernels
from radsched.gbt import Hyperparams, fit_gbt


@pytest.fixture(scope="module")
def data():
    rng = np.random.default_rng(2024)
    X = rng.uniform(-5, 5, size=(400, 7))
    y = X[:, 0] * np.sign(X[:, 3]) + rng.normal(0, 0.2, size=400)
    return X, y


@pytest.fixture(scope="module")
def flat_model(data):
    X, y = data
    model = fit_gbt(X, y, Hyperparams(8, 4, 0.2, 5))
    return model, model.flat()


class TestBestSplit:
    @pytest.mark.parametrize("seed", range(15))
    def test_python_and_numpy_agree(self, data, seed):
        X, y = data
        rng = np.random.default_rng(seed)
        idx = np.sort(rng.choice(X.shape[0], size=rng.integers(12, 200),
                                 replace=False)).astype(np.int64)
        a = _kernels._best_split_py(X, y, idx, 5)
        b = _kernels._best_split_np(X, y, idx, 5)
        assert a[0] == b[0]
        assert a[1] == pytest.approx(b[1], abs=1e-12)
        assert a[2] == pytest.approx(b[2], rel=1e-9, abs=1e-9)

    def test_too_small_node_returns_no_split(self, data):
        X, y = data
        idx = np.arange(5, dtype=np.int64)
        assert _kernels._best_split_py(X, y, idx, 5) == _kernels.NO_SPLIT
        assert _kernels._best_split_np(X, y, idx, 5) == _kernels.NO_SPLIT

    def test_constant_feature_never_split(self):
        X = np.ones((50, 1))
        y = np.arange(50.0)
        idx = np.arange(50, dtype=np.int64)
        assert _kernels._best_split_py(X, y, idx, 2) == _kernels.NO_SPLIT


class TestPredictFlat:
    def test_paths_agree(self, flat_model, data):
        X, _ = data
        model, (feature, threshold, left, right, value, cover, offsets, depths) = flat_model
        a = _kernels._predict_flat_py(X, feature, threshold, left, right, value,
                                      offsets, model.learning_rate, model.base_score)
        b = _kernels._predict_flat_np(X, feature, threshold, left, right, value,
                                      offsets, model.learning_rate, model.base_score)
        np.testing.assert_array_equal(a, b)

    def test_active_kernel_matches_fallback(self, flat_model, data):
        X, _ = data
        model, flat = flat_model
        feature, threshold, left, right, value, cover, offsets, depths = flat
        active = _kernels.predict_flat(X, feature, threshold, left, right, value,
                                       offsets, model.learning_rate, model.base_score)
        ref = _kernels._predict_flat_np(X, feature, threshold, left, right, value,
                                        offsets, model.learning_rate, model.base_score)
        np.testing.assert_allclose(active, ref, atol=1e-12)


class TestShapBatch:
    def test_active_kernel_matches_python(self, flat_model, data):
        X, _ = data
        model, flat = flat_model
        feature, threshold, left, right, value, cover, offsets, depths = flat
        xs = np.ascontiguousarray(X[:30])
        active = _kernels.shap_batch(xs, feature, threshold, left, right, value,
                                     cover, offsets, depths, model.learning_rate)
        ref = _shap_batch_pure(xs, feature, threshold, left, right, value,
                               cover, offsets, depths, model.learning_rate)
        np.testing.assert_allclose(active, ref, atol=1e-10)


def _shap_batch_pure(X, feature, threshold, left, right, value, cover,
                     offsets, depths, lr):
    n, d = X.shape
    phis = np.zeros((n, d))
    for t in range(offsets.shape[0] - 1):
        for i in range(n):
            _kernels._tree_shap_single_py(X[i], phis[i], feature, threshold,
                                          left, right, value, cover,
                                          offsets[t], depths[t], lr)
    return phis
