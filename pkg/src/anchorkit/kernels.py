"""Hot inner loops, each in two flavours: numba ``@njit`` and pure numpy.

The active backend is picked once at import time.  Set
``ANCHORKIT_BACKEND=numpy`` to force the numpy path (useful for debugging
and for platforms without numba); the default is ``numba`` when it imports.

Both flavours must return bit-identical results; ``tests/test_kernels.py``
runs them side by side and ``benchmarks/bench_kernels.py`` times them.
All kernels work on discretized rows: ``int64`` matrices of bin indices
where ``-1`` marks an unknown bin.
"""
import os

import numpy as np

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False

_requested = os.environ.get("ANCHORKIT_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(f"ANCHORKIT_BACKEND must be 'numba' or 'numpy', got {_requested!r}")
BACKEND = "numba" if (_requested == "numba" and HAS_NUMBA) else "numpy"


def _njit(fn):
    if not HAS_NUMBA:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


# ---------------------------------------------------------------------------
# forest traversal
# ---------------------------------------------------------------------------

def _forest_scores_numpy(X, roots, feature, left, right, left_set, leaf_values):
    n = X.shape[0]
    n_classes = leaf_values.shape[1]
    unknown_col = left_set.shape[1] - 1
    out = np.zeros((n, n_classes))
    rows = np.arange(n)
    for root in roots:
        idx = np.full(n, root, dtype=np.int64)
        while True:
            feat = feature[idx]
            internal = feat >= 0
            if not internal.any():
                break
            b = X[rows, np.where(internal, feat, 0)]
            b = np.where(b < 0, unknown_col, b)
            go_left = left_set[idx, b]
            nxt = np.where(go_left, left[idx], right[idx])
            idx = np.where(internal, nxt, idx)
        out += leaf_values[idx]
    return out


def _forest_scores_loop(X, roots, feature, left, right, left_set, leaf_values):
    n = X.shape[0]
    n_classes = leaf_values.shape[1]
    unknown_col = left_set.shape[1] - 1
    out = np.zeros((n, n_classes))
    for t in range(roots.shape[0]):
        for i in range(n):
            node = roots[t]
            while feature[node] >= 0:
                b = X[i, feature[node]]
                if b < 0:
                    b = unknown_col
                if left_set[node, b]:
                    node = left[node]
                else:
                    node = right[node]
            for c in range(n_classes):
                out[i, c] += leaf_values[node, c]
    return out


# ---------------------------------------------------------------------------
# row overwrite sampling
# ---------------------------------------------------------------------------

def _overwrite_rows_numpy(source, row_idx, x, fixed):
    Z = source[row_idx]
    if fixed.shape[0]:
        Z[:, fixed] = x[fixed]
    return Z


def _overwrite_rows_loop(source, row_idx, x, fixed):
    n = row_idx.shape[0]
    n_feat = source.shape[1]
    Z = np.empty((n, n_feat), dtype=source.dtype)
    for i in range(n):
        r = row_idx[i]
        for j in range(n_feat):
            Z[i, j] = source[r, j]
        for k in range(fixed.shape[0]):
            j = fixed[k]
            Z[i, j] = x[j]
    return Z


# ---------------------------------------------------------------------------
# predicate conjunction / distances
# ---------------------------------------------------------------------------

def _conjunction_mask_numpy(Z, features, bins):
    mask = np.ones(Z.shape[0], dtype=np.bool_)
    for k in range(features.shape[0]):
        mask &= Z[:, features[k]] == bins[k]
    return mask


def _conjunction_mask_loop(Z, features, bins):
    n = Z.shape[0]
    mask = np.ones(n, dtype=np.bool_)
    for i in range(n):
        for k in range(features.shape[0]):
            if Z[i, features[k]] != bins[k]:
                mask[i] = False
                break
    return mask


def _hamming_fraction_numpy(Z, x):
    if Z.shape[1] == 0:
        return np.zeros(Z.shape[0])
    return (Z != x).sum(axis=1) / Z.shape[1]


def _hamming_fraction_loop(Z, x):
    n, m = Z.shape
    out = np.zeros(n)
    if m == 0:
        return out
    for i in range(n):
        d = 0
        for j in range(m):
            if Z[i, j] != x[j]:
                d += 1
        out[i] = d / m
    return out


# ---------------------------------------------------------------------------
# tree training histograms
# ---------------------------------------------------------------------------

def _class_histograms_numpy(X, y, rows, features, n_cols, n_classes):
    out = np.zeros((features.shape[0], n_cols, n_classes), dtype=np.int64)
    yr = y[rows]
    for k in range(features.shape[0]):
        b = X[rows, features[k]]
        b = np.where(b < 0, n_cols - 1, b)
        np.add.at(out[k], (b, yr), 1)
    return out


def _class_histograms_loop(X, y, rows, features, n_cols, n_classes):
    out = np.zeros((features.shape[0], n_cols, n_classes), dtype=np.int64)
    for i in range(rows.shape[0]):
        r = rows[i]
        c = y[r]
        for k in range(features.shape[0]):
            b = X[r, features[k]]
            if b < 0:
                b = n_cols - 1
            out[k, b, c] += 1
    return out


forest_scores_numba = _njit(_forest_scores_loop)
overwrite_rows_numba = _njit(_overwrite_rows_loop)
conjunction_mask_numba = _njit(_conjunction_mask_loop)
hamming_fraction_numba = _njit(_hamming_fraction_loop)
class_histograms_numba = _njit(_class_histograms_loop)

forest_scores_numpy = _forest_scores_numpy
overwrite_rows_numpy = _overwrite_rows_numpy
conjunction_mask_numpy = _conjunction_mask_numpy
hamming_fraction_numpy = _hamming_fraction_numpy
class_histograms_numpy = _class_histograms_numpy

if BACKEND == "numba":
    forest_scores = forest_scores_numba
    overwrite_rows = overwrite_rows_numba
    conjunction_mask = conjunction_mask_numba
    hamming_fraction = hamming_fraction_numba
    class_histograms = class_histograms_numba
else:
    forest_scores = forest_scores_numpy
    overwrite_rows = overwrite_rows_numpy
    conjunction_mask = conjunction_mask_numpy
    hamming_fraction = hamming_fraction_numpy
    class_histograms = class_histograms_numpy

__all__ = [
    "BACKEND",
    "HAS_NUMBA",
    "forest_scores",
    "overwrite_rows",
    "conjunction_mask",
    "hamming_fraction",
    "class_histograms",
]
