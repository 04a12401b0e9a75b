"""The numba and numpy flavours of every kernel must agree exactly."""
import numpy as np
import pytest

from anchorkit import kernels
from anchorkit.data import from_arrays, split_dataset
from anchorkit.models import train_tree_ensemble

pytestmark = pytest.mark.skipif(not kernels.HAS_NUMBA, reason="numba not installed")


def test_overwrite_rows_matches(rng):
    src = rng.integers(0, 5, size=(50, 7))
    idx = rng.integers(0, 50, size=300)
    x = rng.integers(0, 5, size=7)
    for fixed in ([], [0], [2, 5], list(range(7))):
        fixed = np.asarray(fixed, dtype=np.int64)
        a = kernels.overwrite_rows_numba(src, idx, x, fixed)
        b = kernels.overwrite_rows_numpy(src, idx, x, fixed)
        assert np.array_equal(a, b)
        assert np.array_equal(a[:, fixed], np.broadcast_to(x[fixed], (300, len(fixed))))


def test_conjunction_mask_matches(rng):
    Z = rng.integers(-1, 3, size=(500, 6))
    for feats, bins in (([], []), ([1], [2]), ([0, 3, 4], [1, 0, 2])):
        f = np.asarray(feats, dtype=np.int64)
        b = np.asarray(bins, dtype=np.int64)
        expected = np.all(Z[:, f] == b, axis=1) if len(f) else np.ones(500, dtype=bool)
        assert np.array_equal(kernels.conjunction_mask_numba(Z, f, b), expected)
        assert np.array_equal(kernels.conjunction_mask_numpy(Z, f, b), expected)


def test_hamming_fraction_matches(rng):
    Z = rng.integers(0, 3, size=(200, 9))
    x = rng.integers(0, 3, size=9)
    expected = np.array([sum(int(a != b) for a, b in zip(row, x)) / 9 for row in Z.tolist()])
    assert np.allclose(kernels.hamming_fraction_numba(Z, x), expected, rtol=0, atol=1e-15)
    assert np.allclose(kernels.hamming_fraction_numpy(Z, x), expected, rtol=0, atol=1e-15)


def test_class_histograms_matches(rng):
    X = rng.integers(-1, 4, size=(300, 5))
    y = rng.integers(0, 3, size=300)
    rows = np.sort(rng.integers(0, 300, size=200))
    feats = np.array([0, 2, 4], dtype=np.int64)
    a = kernels.class_histograms_numba(X, y, rows, feats, 6, 3)
    b = kernels.class_histograms_numpy(X, y, rows, feats, 6, 3)
    assert np.array_equal(a, b)
    # brute-force count; unknown bins land in the last column
    for k, f in enumerate(feats):
        for r in rows:
            col = X[r, f] if X[r, f] >= 0 else 5
            a[k, col, y[r]] -= 1
    assert not a.any()


def test_forest_scores_match(rng):
    X = rng.integers(0, 4, size=(600, 6))
    y = ((X[:, 0] >= 2) ^ (X[:, 3] == 1)).astype(int)
    ds = split_dataset(from_arrays(X, y), seed=0)
    m = train_tree_ensemble(ds, n_trees=15, max_depth=4, seed=3)
    Z = np.ascontiguousarray(rng.integers(-1, 4, size=(400, 6)))
    args = (m._roots, m._feature, m._left, m._right, m._left_set, m._leaf_values)
    assert np.array_equal(kernels.forest_scores_numba(Z, *args), kernels.forest_scores_numpy(Z, *args))


def test_backend_flag_valid():
    assert kernels.BACKEND in ("numba", "numpy")


def test_env_flag_selects_numpy_backend():
    import subprocess
    import sys

    code = ("import numpy as np\n"
            "from anchorkit import kernels\n"
            "from anchorkit.search import find_anchor, SearchConfig\n"
            "from anchorkit.synthetic import and_problem\n"
            "p = and_problem(seed=3)\n"
            "a = find_anchor(p.model, p.x, p.sampler, SearchConfig(), np.random.default_rng(1))\n"
            "print(kernels.BACKEND, a.features.tolist(), a.samples_drawn)\n")
    outs = {}
    for backend in ("numpy", "numba"):
        env = {**__import__("os").environ, "ANCHORKIT_BACKEND": backend}
        outs[backend] = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                                       check=True).stdout.split(" ", 1)
    assert outs["numpy"][0] == "numpy" and outs["numba"][0] == "numba"
    assert outs["numpy"][1] == outs["numba"][1]
