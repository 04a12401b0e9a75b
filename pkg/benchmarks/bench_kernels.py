"""Time the numba and numpy flavour of each kernel on adult-sized inputs.

    python benchmarks/bench_kernels.py [--repeat 5]

Prints one line per kernel: best-of-``repeat`` wall time for each backend
and the speedup.  Outputs of the two flavours are checked for equality
before timing.  A last line times one full anchor search under each backend
(by monkeypatching the dispatched names).
"""
import argparse
import os
import sys
import time

import numpy as np

from anchorkit import kernels
from anchorkit.data import VALIDATION, prepare_dataset
from anchorkit.models import train_tree_ensemble
from anchorkit.perturbation import TabularRowSampler
from anchorkit.search import SearchConfig, find_anchor

HERE = os.path.dirname(os.path.abspath(__file__))
ADULT = os.path.join(HERE, "..", "data", "adult.csv")
NAMES = ("forest_scores", "overwrite_rows", "conjunction_mask", "hamming_fraction", "class_histograms")


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def use_backend(name):
    for k in NAMES:
        setattr(kernels, k, getattr(kernels, f"{k}_{name}"))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--n-trees", type=int, default=100)
    args = ap.parse_args(argv)
    if not kernels.HAS_NUMBA:
        sys.exit("numba is not installed; nothing to compare")

    ds = prepare_dataset(ADULT, "Salary")
    model = train_tree_ensemble(ds, n_trees=args.n_trees, max_depth=8, seed=0)
    rng = np.random.default_rng(0)
    X = np.ascontiguousarray(ds.disc)
    sampler = TabularRowSampler.from_dataset(ds)
    src = sampler.source_rows
    x = X[0]
    Z = np.ascontiguousarray(X[rng.integers(0, len(X), 10_000)])
    row_idx = rng.integers(0, len(src), 10_000)
    fixed = np.array([2, 5], dtype=np.int64)
    y = ds.labels
    rows = np.arange(len(X), dtype=np.int64)
    feats = np.arange(X.shape[1], dtype=np.int64)
    tree_args = (model._roots, model._feature, model._left, model._right, model._left_set, model._leaf_values)

    cases = {
        "forest_scores": (Z, *tree_args),
        "overwrite_rows": (src, row_idx, x, fixed),
        "conjunction_mask": (X, fixed, x[fixed]),
        "hamming_fraction": (Z, x),
        "class_histograms": (X, y, rows, feats, model.n_cols, model.n_classes),
    }
    print(f"{'kernel':<18} {'numba (ms)':>11} {'numpy (ms)':>11} {'speedup':>8}")
    for name in NAMES:
        a, b = getattr(kernels, f"{name}_numba"), getattr(kernels, f"{name}_numpy")
        args_ = cases[name]
        ra, rb = a(*args_), b(*args_)  # also warms up the jit
        assert np.array_equal(ra, rb), name
        ta, tb = best_of(lambda: a(*args_), args.repeat), best_of(lambda: b(*args_), args.repeat)
        print(f"{name:<18} {ta * 1e3:11.3f} {tb * 1e3:11.3f} {tb / ta:7.1f}x")

    xv = ds.disc[ds.indices(VALIDATION)[0]]
    res = {}
    for backend in ("numba", "numpy"):
        use_backend(backend)
        find_anchor(model, xv, sampler, SearchConfig(), np.random.default_rng(0))
        t = time.perf_counter()
        a = find_anchor(model, xv, sampler, SearchConfig(), np.random.default_rng(0))
        res[backend] = (time.perf_counter() - t, a)
    assert res["numba"][1] == res["numpy"][1]
    ta, tb = res["numba"][0], res["numpy"][0]
    print(f"{'find_anchor':<18} {ta * 1e3:11.1f} {tb * 1e3:11.1f} {tb / ta:7.1f}x  "
          f"({res['numba'][1].samples_drawn} samples)")


if __name__ == "__main__":
    main()
