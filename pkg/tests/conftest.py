import numpy as np
import pytest

from radsched.domain import CATEGORIES, Patient, Scenario
from radsched.gbt import GbtModel, Hyperparams, fit_gbt


def make_patient(pid="p000-000", category="P4", admission_day=0, seq=0,
                 ready_offset=None, fractions=5, fraction_blocks=5) -> Patient:
    cat = CATEGORIES[category]
    if ready_offset is None:
        ready_offset = 0 if cat.is_palliative else 5
    return Patient(
        id=pid, category=cat, admission_day=admission_day, admission_seq=seq,
        ready_day=admission_day + ready_offset,
        due_day=admission_day + cat.deadline_days,
        fractions=fractions, fraction_blocks=fraction_blocks)


def random_patient(rng, pid, admission_day=0, seq=0, category=None) -> Patient:
    if category is None:
        category = ("P1", "P2", "P3", "P4")[rng.integers(4)]
    cat = CATEGORIES[category]
    if cat.is_palliative:
        ready_offset, fractions, blocks = int(rng.integers(0, 3)), int(rng.integers(1, 4)), int(rng.integers(2, 6))
    else:
        ready_offset, fractions, blocks = int(rng.integers(5, 8)), int(rng.integers(2, 7)), int(rng.integers(3, 8))
    return Patient(
        id=pid, category=cat, admission_day=admission_day, admission_seq=seq,
        ready_day=admission_day + ready_offset,
        due_day=admission_day + cat.deadline_days,
        fractions=fractions, fraction_blocks=blocks)


@pytest.fixture(scope="session")
def small_model() -> GbtModel:
    """A quick 54-feature model shared by tests that just need any model."""
    from radsched.learning import NUM_FEATURES
    rng = np.random.default_rng(1234)
    X = rng.uniform(0, 240, size=(200, NUM_FEATURES))
    y = 0.02 * X[:, 0] + 0.5 * X[:, 52] + rng.normal(0, 0.5, size=200)
    return fit_gbt(X, y, Hyperparams(25, 3, 0.1, 5))


# ---------------------------------------------------------------------------
# Brute-force Shapley oracle (subset enumeration over per-tree conditional
# expectations with cover weighting) for TreeSHAP exactness tests.
# ---------------------------------------------------------------------------

def _tree_expvalue(tree, x, subset_mask):
    """E[f(x_S, X_notS)] for one tree, conditioning by tree-path covers."""

    def walk(node):
        f = tree.feature[node]
        if f < 0:
            return tree.value[node]
        if subset_mask[f]:
            child = tree.left[node] if x[f] <= tree.threshold[node] else tree.right[node]
            return walk(child)
        lw = tree.cover[tree.left[node]] / tree.cover[node]
        rw = tree.cover[tree.right[node]] / tree.cover[node]
        return lw * walk(tree.left[node]) + rw * walk(tree.right[node])

    return walk(0)


def brute_force_shap(model: GbtModel, x) -> np.ndarray:
    """Exact Shapley values by enumerating all feature subsets."""
    import itertools
    import math

    d = model.num_features
    used = sorted({int(f) for t in model.trees for f in t.feature if f >= 0})
    phis = np.zeros(d)
    for i in used:
        others = [j for j in used if j != i]
        for r in range(len(others) + 1):
            weight = (math.factorial(r) * math.factorial(len(used) - r - 1)
                      / math.factorial(len(used)))
            for subset in itertools.combinations(others, r):
                mask = np.zeros(d, dtype=bool)
                mask[list(subset)] = True
                without = sum(_tree_expvalue(t, x, mask) for t in model.trees)
                mask[i] = True
                with_i = sum(_tree_expvalue(t, x, mask) for t in model.trees)
                phis[i] += weight * (with_i - without)
    return model.learning_rate * phis
