"""Small enumerable problems used as oracles for the search.

Everything here is binary-featured and tiny, so exact precision (by
enumerating the source rows) and the truly shortest valid anchor (by
enumerating all predicate subsets) are cheap to compute.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .data import Predicate, as_matrix
from .perturbation import TabularRowSampler
from .search import exact_precision


class TruthTableModel:
    """Predictor over binary rows given by a lookup table of ``2**F`` labels."""

    def __init__(self, table, n_classes: int = 2):
        self.table = np.asarray(table, dtype=np.int64)
        self.n_features = int(np.log2(len(self.table)))
        if 2 ** self.n_features != len(self.table):
            raise ValueError("truth table length must be a power of two")
        self.n_classes = n_classes
        self._weights = (1 << np.arange(self.n_features, dtype=np.int64))

    def predict_batch(self, instances) -> np.ndarray:
        X = as_matrix(instances)
        if X.shape[0] == 0:
            return np.zeros(0, dtype=np.int64)
        return self.table[X @ self._weights]

    @classmethod
    def from_function(cls, fn, n_features: int) -> "TruthTableModel":
        patterns = all_bit_patterns(n_features)
        return cls([int(fn(row)) for row in patterns])


class ConjunctionModel:
    """``1`` iff every listed feature equals its listed bin, else ``0``."""

    n_classes = 2

    def __init__(self, features, bins):
        self.features = np.asarray(features, dtype=np.int64)
        self.bins = np.asarray(bins, dtype=np.int64)

    def predict_batch(self, instances) -> np.ndarray:
        X = as_matrix(instances)
        if X.shape[0] == 0:
            return np.zeros(0, dtype=np.int64)
        return (X[:, self.features] == self.bins).all(axis=1).astype(np.int64)


def all_bit_patterns(n_features: int) -> np.ndarray:
    return ((np.arange(2 ** n_features)[:, None] >> np.arange(n_features)) & 1).astype(np.int64)


@dataclass
class Problem:
    model: object
    sampler: TabularRowSampler
    x: np.ndarray
    n_features: int


def and_problem(n_features: int = 10, n_rows: int = 500, designated=(0, 1), seed: int = 0) -> Problem:
    """Uniform random binary rows; model = AND of the designated features; ``x`` predicted 1."""
    rng = np.random.default_rng(seed)
    rows = rng.integers(0, 2, size=(n_rows, n_features))
    x = rng.integers(0, 2, size=n_features)
    x[list(designated)] = 1
    return Problem(ConjunctionModel(designated, [1] * len(designated)), TabularRowSampler(rows), x, n_features)


def random_problem(seed: int, max_features: int = 8, n_rows: int = 200, depth: int = 3) -> Problem:
    """Random binary rows and a random depth-``depth`` decision rule as the model.

    Feature count is drawn from 3..``max_features``; each feature is 1 with
    its own probability in [0.2, 0.8] so rows are not uniform.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, 7919]))
    F = int(rng.integers(3, max_features + 1))
    p_one = rng.uniform(0.2, 0.8, size=F)
    rows = (rng.random((n_rows, F)) < p_one).astype(np.int64)

    def grow(d, used):
        free = [j for j in range(F) if j not in used]
        if d == 0 or not free or rng.random() < 0.15:
            return int(rng.integers(0, 2))
        j = int(rng.choice(free))
        return (j, grow(d - 1, used | {j}), grow(d - 1, used | {j}))

    tree = grow(depth, frozenset())

    def evaluate(node, row):
        while isinstance(node, tuple):
            j, lo, hi = node
            node = hi if row[j] else lo
        return node

    model = TruthTableModel.from_function(lambda r: evaluate(tree, r), F)
    x = rows[int(rng.integers(0, n_rows))].copy()
    return Problem(model, TabularRowSampler(rows), x, F)


def shortest_valid_anchor(model, x, sampler: TabularRowSampler, epsilon: float):
    """Brute force: the smallest predicate set whose exact precision is >= 1 - epsilon.

    Subsets are tried by size, then lexicographically; returns
    ``(predicates, exact precision)``.
    """
    xd = np.asarray(x, dtype=np.int64)
    feats = sampler.candidate_features(xd)
    for size in range(len(feats) + 1):
        for subset in itertools.combinations(feats, size):
            c = [Predicate(j, int(xd[j])) for j in subset]
            prec = exact_precision(model, xd, c, sampler)
            if prec >= 1.0 - epsilon:
                return c, prec
    raise AssertionError("the full anchor always has exact precision 1")
