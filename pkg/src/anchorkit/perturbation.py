"""Tabular conditional sampler: whole train rows with the anchored features overwritten.

A draw picks a train row uniformly at random and copies the explained
instance's value into every feature the anchor constrains.  Because the
copied value is the instance's own, constraining every feature reproduces
the instance exactly.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .data import TRAIN, UNKNOWN_BIN, Dataset, Instance, Predicate, as_matrix, predicate_holds
from .errors import ContractError, DataError


def _disc_of(x) -> np.ndarray:
    if isinstance(x, Instance):
        return x.disc
    return np.asarray(x, dtype=np.int64)


@dataclass(frozen=True, eq=False)
class TabularRowSampler:
    source_rows: np.ndarray
    source_raw: tuple | None = None
    rng_seed: int = 0

    def __post_init__(self):
        rows = np.ascontiguousarray(self.source_rows, dtype=np.int64)
        if rows.ndim != 2 or rows.shape[0] == 0:
            raise DataError("sampler needs a non-empty 2-d matrix of source rows")
        if self.source_raw is not None and len(self.source_raw) != rows.shape[0]:
            raise DataError("source_raw must align with source_rows")
        rows.setflags(write=False)
        object.__setattr__(self, "source_rows", rows)

    @classmethod
    def from_dataset(cls, dataset: Dataset, rng_seed: int = 0) -> "TabularRowSampler":
        """Sampler over the dataset's train split."""
        idx = dataset.indices(TRAIN)
        return cls(dataset.disc[idx], tuple(dataset.raw[i] for i in idx), rng_seed)

    @property
    def n_features(self) -> int:
        return self.source_rows.shape[1]

    def candidate_features(self, x) -> list[int]:
        """Features that admit a predicate on ``x`` (its bin is known)."""
        xd = _disc_of(x)
        return [j for j in range(len(xd)) if xd[j] != UNKNOWN_BIN]

    def predicate_for(self, x, feature: int) -> Predicate:
        return Predicate(int(feature), int(_disc_of(x)[feature]))

    def as_batch(self, x) -> np.ndarray:
        return _disc_of(x)[None, :]

    def draw(self, x, features: Sequence[int], n: int, rng: np.random.Generator) -> np.ndarray:
        """``n`` disc rows from the conditional distribution, as one matrix."""
        xd = np.ascontiguousarray(_disc_of(x), dtype=np.int64)
        if xd.shape != (self.n_features,):
            raise DataError(f"instance has {xd.shape} bins, sampler expects {self.n_features}")
        fixed = np.asarray(sorted(features), dtype=np.int64)
        row_idx = rng.integers(0, self.source_rows.shape[0], size=n)
        return kernels.overwrite_rows(self.source_rows, row_idx, xd, fixed)

    def enumerate(self, x, features: Sequence[int]) -> np.ndarray:
        """Every source row overwritten once; the exact finite support of ``draw``."""
        xd = np.ascontiguousarray(_disc_of(x), dtype=np.int64)
        fixed = np.asarray(sorted(features), dtype=np.int64)
        row_idx = np.arange(self.source_rows.shape[0], dtype=np.int64)
        return kernels.overwrite_rows(self.source_rows, row_idx, xd, fixed)


def check_anchor_holds(c: Sequence[Predicate], x) -> None:
    xd = _disc_of(x)
    for p in c:
        if p.feature >= len(xd) or xd[p.feature] != p.bin:
            raise ContractError(f"predicate {p} does not hold on the explained instance")


def sample_conditional(sampler: TabularRowSampler, c: Sequence[Predicate], x: Instance, n: int,
                       rng: np.random.Generator | None = None) -> list[Instance]:
    """Draw ``n`` instances ``z`` with every predicate of ``c`` satisfied.

    Raw values follow the same rule as the bins: a source row with ``x``'s
    raw value copied into each constrained feature.  Without ``rng`` the
    sampler's own seed is used.
    """
    check_anchor_holds(c, x)
    if rng is None:
        rng = np.random.default_rng(sampler.rng_seed)
    feats = sorted(p.feature for p in c)
    row_idx = rng.integers(0, sampler.source_rows.shape[0], size=n)
    xd = np.ascontiguousarray(x.disc, dtype=np.int64)
    Z = kernels.overwrite_rows(sampler.source_rows, row_idx, xd, np.asarray(feats, dtype=np.int64))
    out = []
    for k, r in enumerate(row_idx):
        if sampler.source_raw is not None:
            raw = list(sampler.source_raw[r])
            for j in feats:
                raw[j] = x.raw_values[j]
            raw = tuple(raw)
        else:
            raw = tuple(int(b) for b in Z[k])
        out.append(Instance(raw, tuple(int(b) for b in Z[k])))
    return out


def satisfies_all(c: Sequence[Predicate], samples) -> bool:
    if isinstance(samples, np.ndarray):
        Z = as_matrix(samples)
        return all(bool((Z[:, p.feature] == p.bin).all()) for p in c)
    return all(predicate_holds(p, z) for z in samples for p in c)
