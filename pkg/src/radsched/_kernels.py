"""Hot numeric kernels: tree split search, ensemble prediction, TreeSHAP.

Each kernel has a numba ``@njit`` implementation and a pure-numpy fallback.
Set ``RADSCHED_NO_NUMBA=1`` to force the fallback path (used by the
benchmark in ``benchmarks/bench_kernels.py`` and by CI smoke runs where JIT
warm-up is not worth it).
"""

from __future__ import annotations

import os

import numpy as np

USE_NUMBA = os.environ.get("RADSCHED_NO_NUMBA", "0") != "1"

if USE_NUMBA:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover
        USE_NUMBA = False

NO_SPLIT = (-1, 0.0, 0.0)


# ---------------------------------------------------------------------------
# Best split search (exact greedy, variance reduction)
# ---------------------------------------------------------------------------

def _best_split_py(X, y, idx, min_leaf):
    """Return (feature, threshold, gain); feature=-1 when no split helps.

    Maximizes sum_l^2/n_l + sum_r^2/n_r, which is equivalent to minimizing
    the post-split SSE.  Ties go to the lowest feature then lowest threshold.
    """
    n = idx.shape[0]
    if n < 2 * min_leaf:
        return NO_SPLIT
    ysub = y[idx]
    total = float(ysub.sum())
    parent = total * total / n
    best_score = parent
    best_feature = -1
    best_threshold = 0.0
    for f in range(X.shape[1]):
        v = X[idx, f]
        order = np.argsort(v, kind="mergesort")
        vs = v[order]
        cs = np.cumsum(ysub[order])
        for i in range(min_leaf, n - min_leaf + 1):
            if vs[i] <= vs[i - 1]:
                continue
            s_left = cs[i - 1]
            score = s_left * s_left / i + (total - s_left) * (total - s_left) / (n - i)
            if score > best_score + 1e-12:
                best_score = score
                best_feature = f
                best_threshold = 0.5 * (vs[i - 1] + vs[i])
    if best_feature < 0:
        return NO_SPLIT
    return best_feature, best_threshold, best_score - parent


def _best_split_np(X, y, idx, min_leaf):
    """Vectorized fallback: same criterion and tie-breaking as the jit path."""
    n = idx.shape[0]
    if n < 2 * min_leaf:
        return NO_SPLIT
    ysub = y[idx]
    total = float(ysub.sum())
    parent = total * total / n
    best_score = parent
    best_feature = -1
    best_threshold = 0.0
    pos = np.arange(1, n)
    for f in range(X.shape[1]):
        v = X[idx, f]
        order = np.argsort(v, kind="mergesort")
        vs = v[order]
        cs = np.cumsum(ysub[order])
        valid = (vs[1:] > vs[:-1]) & (pos >= min_leaf) & (n - pos >= min_leaf)
        if not valid.any():
            continue
        s_left = cs[:-1]
        with np.errstate(divide="ignore", invalid="ignore"):
            score = s_left * s_left / pos + (total - s_left) ** 2 / (n - pos)
        score = np.where(valid, score, -np.inf)
        j = int(np.argmax(score))
        if score[j] > best_score + 1e-12:
            best_score = float(score[j])
            best_feature = f
            best_threshold = 0.5 * (vs[j] + vs[j + 1])
    if best_feature < 0:
        return NO_SPLIT
    return best_feature, best_threshold, best_score - parent


# ---------------------------------------------------------------------------
# Flat-ensemble raw prediction
# ---------------------------------------------------------------------------

def _predict_flat_py(X, feature, threshold, left, right, value, offsets, lr, base):
    n = X.shape[0]
    out = np.full(n, base)
    for t in range(offsets.shape[0] - 1):
        root = offsets[t]
        for i in range(n):
            node = root
            while feature[node] >= 0:
                if X[i, feature[node]] <= threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            out[i] += lr * value[node]
    return out


def _predict_flat_np(X, feature, threshold, left, right, value, offsets, lr, base):
    n = X.shape[0]
    out = np.full(n, base)
    for t in range(offsets.shape[0] - 1):
        nodes = np.full(n, offsets[t], dtype=np.int64)
        active = feature[nodes] >= 0
        while active.any():
            idx = np.nonzero(active)[0]
            nd = nodes[idx]
            go_left = X[idx, feature[nd]] <= threshold[nd]
            nodes[idx] = np.where(go_left, left[nd], right[nd])
            active[idx] = feature[nodes[idx]] >= 0
        out += lr * value[nodes]
    return out


# ---------------------------------------------------------------------------
# TreeSHAP (exact path-weighted conditional expectations)
# ---------------------------------------------------------------------------

def _tree_shap_single_py(x, phi, feature, threshold, left, right, value, cover,
                         root, max_depth, scale):
    """One tree, one sample: the unique-path algorithm, iterative DFS.

    The per-depth path buffers mimic the per-call copies of the recursive
    formulation: a frame at depth d copies its parent's row d-1, extends it,
    and both children later read row d untouched by the subtree in between.
    """
    levels = max_depth + 3
    width = max_depth + 3
    p_feat = np.zeros((levels, width), dtype=np.int64)
    p_zero = np.zeros((levels, width))
    p_one = np.zeros((levels, width))
    p_w = np.zeros((levels, width))

    # explicit DFS stack: node, depth, parent unique depth, pz, po, pi
    cap = feature.shape[0] + 1
    s_node = np.zeros(cap, dtype=np.int64)
    s_depth = np.zeros(cap, dtype=np.int64)
    s_pud = np.zeros(cap, dtype=np.int64)
    s_pz = np.zeros(cap)
    s_po = np.zeros(cap)
    s_pi = np.zeros(cap, dtype=np.int64)

    top = 0
    s_node[0] = root
    s_depth[0] = 1
    s_pud[0] = -1
    s_pz[0] = 1.0
    s_po[0] = 1.0
    s_pi[0] = -1
    top = 1

    while top > 0:
        top -= 1
        node = s_node[top]
        depth = s_depth[top]
        pud = s_pud[top]
        pz = s_pz[top]
        po = s_po[top]
        pi = s_pi[top]

        # copy parent row, then EXTEND with (pz, po, pi)
        ud = pud + 1
        for i in range(ud):
            p_feat[depth, i] = p_feat[depth - 1, i]
            p_zero[depth, i] = p_zero[depth - 1, i]
            p_one[depth, i] = p_one[depth - 1, i]
            p_w[depth, i] = p_w[depth - 1, i]
        p_feat[depth, ud] = pi
        p_zero[depth, ud] = pz
        p_one[depth, ud] = po
        p_w[depth, ud] = 1.0 if ud == 0 else 0.0
        for i in range(ud - 1, -1, -1):
            p_w[depth, i + 1] += po * p_w[depth, i] * (i + 1.0) / (ud + 1.0)
            p_w[depth, i] = pz * p_w[depth, i] * (ud - i) / (ud + 1.0)

        if feature[node] < 0:
            # leaf: UNWIND each path element's contribution
            leaf = value[node]
            for pathi in range(1, ud + 1):
                one_f = p_one[depth, pathi]
                zero_f = p_zero[depth, pathi]
                next_one = p_w[depth, ud]
                total = 0.0
                for i in range(ud - 1, -1, -1):
                    if one_f != 0.0:
                        tmp = next_one * (ud + 1.0) / ((i + 1.0) * one_f)
                        total += tmp
                        next_one = p_w[depth, i] - tmp * zero_f * (ud - i) / (ud + 1.0)
                    else:
                        total += p_w[depth, i] / (zero_f * (ud - i) / (ud + 1.0))
                phi[p_feat[depth, pathi]] += total * (one_f - zero_f) * leaf * scale
            continue

        f = feature[node]
        if x[f] <= threshold[node]:
            hot, cold = left[node], right[node]
        else:
            hot, cold = right[node], left[node]
        hot_zero = cover[hot] / cover[node]
        cold_zero = cover[cold] / cover[node]
        inc_zero = 1.0
        inc_one = 1.0

        # duplicate split feature on the path: unwind it first
        path_index = 0
        found = False
        for i in range(1, ud + 1):
            if p_feat[depth, i] == f:
                path_index = i
                found = True
                break
        if found:
            inc_zero = p_zero[depth, path_index]
            inc_one = p_one[depth, path_index]
            next_one = p_w[depth, ud]
            for i in range(ud - 1, -1, -1):
                if inc_one != 0.0:
                    tmp = p_w[depth, i]
                    p_w[depth, i] = next_one * (ud + 1.0) / ((i + 1.0) * inc_one)
                    next_one = tmp - p_w[depth, i] * inc_zero * (ud - i) / (ud + 1.0)
                else:
                    p_w[depth, i] = p_w[depth, i] * (ud + 1.0) / (inc_zero * (ud - i))
            for i in range(path_index, ud):
                p_feat[depth, i] = p_feat[depth, i + 1]
                p_zero[depth, i] = p_zero[depth, i + 1]
                p_one[depth, i] = p_one[depth, i + 1]
            ud -= 1

        s_node[top] = hot
        s_depth[top] = depth + 1
        s_pud[top] = ud
        s_pz[top] = hot_zero * inc_zero
        s_po[top] = inc_one
        s_pi[top] = f
        top += 1
        s_node[top] = cold
        s_depth[top] = depth + 1
        s_pud[top] = ud
        s_pz[top] = cold_zero * inc_zero
        s_po[top] = 0.0
        s_pi[top] = f
        top += 1


def _shap_batch_py(X, feature, threshold, left, right, value, cover,
                   offsets, depths, lr):
    n, d = X.shape
    phis = np.zeros((n, d))
    for t in range(offsets.shape[0] - 1):
        root = offsets[t]
        max_depth = depths[t]
        for i in range(n):
            _tree_shap_single(X[i], phis[i], feature, threshold, left, right,
                              value, cover, root, max_depth, lr)
    return phis


if USE_NUMBA:
    best_split = njit(cache=True)(_best_split_py)
    predict_flat = njit(cache=True)(_predict_flat_py)
    _tree_shap_single = njit(cache=True)(_tree_shap_single_py)
    shap_batch = njit(cache=True)(_shap_batch_py)
else:
    best_split = _best_split_np
    predict_flat = _predict_flat_np
    _tree_shap_single = _tree_shap_single_py
    shap_batch = _shap_batch_py
