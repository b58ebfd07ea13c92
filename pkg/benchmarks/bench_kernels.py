"""Benchmark the jit kernels against the pure-numpy fallback path.

The kernel path is fixed at import time by ``RADSCHED_NO_NUMBA``, so this
script re-runs itself in a subprocess for the other path and prints both
timing tables side by side.

Usage: python3 benchmarks/bench_kernels.py [--quick]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def bench_one(repeat: int):
    from radsched import _kernels
    from radsched.gbt import Hyperparams, fit_gbt

    rng = np.random.default_rng(7)
    results = {"path": "numba" if _kernels.USE_NUMBA else "numpy"}

    # split search on a realistic node
    X = rng.uniform(0, 240, size=(5000, 54))
    y = rng.normal(size=5000)
    idx = np.arange(5000, dtype=np.int64)
    _kernels.best_split(X, y, idx, 5)   # warm-up / JIT compile
    t0 = time.perf_counter()
    for _ in range(repeat):
        _kernels.best_split(X, y, idx, 5)
    results["best_split_ms"] = (time.perf_counter() - t0) / repeat * 1000

    # full model fit + predict + SHAP
    Xs = rng.uniform(0, 240, size=(2000, 54))
    ys = rng.normal(size=2000)
    t0 = time.perf_counter()
    model = fit_gbt(Xs, ys, Hyperparams(50, 6, 0.1, 5))
    results["fit_50x6_s"] = time.perf_counter() - t0

    flat = model.flat()
    feature, threshold, left, right, value, cover, offsets, depths = flat
    Xq = np.ascontiguousarray(Xs[:1000])
    _kernels.predict_flat(Xq, feature, threshold, left, right, value, offsets,
                          model.learning_rate, model.base_score)
    t0 = time.perf_counter()
    for _ in range(repeat):
        _kernels.predict_flat(Xq, feature, threshold, left, right, value,
                              offsets, model.learning_rate, model.base_score)
    results["predict_1000_ms"] = (time.perf_counter() - t0) / repeat * 1000

    Xp = np.ascontiguousarray(Xs[:200])
    _kernels.shap_batch(Xp[:1], feature, threshold, left, right, value, cover,
                        offsets, depths, model.learning_rate)
    t0 = time.perf_counter()
    _kernels.shap_batch(Xp, feature, threshold, left, right, value, cover,
                        offsets, depths, model.learning_rate)
    results["shap_200_s"] = time.perf_counter() - t0
    return results


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--quick", action="store_true", help="fewer repeats")
    parser.add_argument("--json", action="store_true",
                        help="print one JSON result for the current path only")
    args = parser.parse_args()
    repeat = 3 if args.quick else 10

    if args.json:
        print(json.dumps(bench_one(repeat)))
        return

    here = bench_one(repeat)
    env = dict(os.environ)
    env["RADSCHED_NO_NUMBA"] = "0" if here["path"] == "numpy" else "1"
    out = subprocess.run(
        [sys.executable, __file__, "--json"] + (["--quick"] if args.quick else []),
        env=env, capture_output=True, text=True, check=True)
    other = json.loads(out.stdout.strip().splitlines()[-1])

    rows = ["best_split_ms", "fit_50x6_s", "predict_1000_ms", "shap_200_s"]
    a, b = (here, other) if here["path"] == "numba" else (other, here)
    print(f"{'kernel':<18}{'numba':>12}{'numpy':>12}{'speedup':>10}")
    for row in rows:
        ratio = b[row] / a[row] if a[row] > 0 else float("inf")
        print(f"{row:<18}{a[row]:>12.3f}{b[row]:>12.3f}{ratio:>9.1f}x")


if __name__ == "__main__":
    main()
