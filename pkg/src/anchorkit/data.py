"""Tabular datasets, quantile discretization and the predicate vocabulary.

Every downstream module works on *discretized* rows: one integer bin index
per feature.  Numeric features are cut at empirical quantiles of the train
split into half-open intervals ``(lo, hi]``; categorical features get one
bin per distinct value.  A value never seen while building the schema maps
to :data:`UNKNOWN_BIN`, which no :class:`Predicate` may reference.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from .errors import ConfigError, ContractError, CorruptFileError, DataError, FormatVersionError, ParseError

log = logging.getLogger(__name__)

UNKNOWN_BIN = -1
MISSING_CELLS = frozenset({"", "?", "NA", "NaN", "nan"})
MISSING_CATEGORY = "missing"

TRAIN, VALIDATION, TEST = 0, 1, 2
SPLIT_NAMES = ("train", "validation", "test")

DATASET_FORMAT_VERSION = 1


def _fmt_num(v: float) -> str:
    return f"{v:g}" if math.isfinite(v) else str(v)


@dataclass(frozen=True)
class FeatureSchema:
    """One column of the table.

    ``categories`` is used by categorical features, ``cuts`` (strictly
    increasing) by numeric ones.  Numeric bin ``i`` is ``cuts[i-1] < v <= cuts[i]``
    with open ends at both extremes, so ``len(cuts) + 1`` bins.
    """

    name: str
    kind: str
    categories: tuple = ()
    cuts: tuple = ()
    fill_value: float | None = None

    def __post_init__(self):
        if self.kind not in ("categorical", "numeric"):
            raise ContractError(f"feature {self.name!r}: kind must be categorical or numeric")
        if self.kind == "categorical":
            if len(set(self.categories)) != len(self.categories):
                raise ContractError(f"feature {self.name!r}: duplicate categories")
            if not self.categories:
                raise ContractError(f"feature {self.name!r}: needs at least one category")
        else:
            if any(b <= a for a, b in zip(self.cuts, self.cuts[1:])):
                raise ContractError(f"feature {self.name!r}: cut points must be strictly increasing")

    @property
    def n_bins(self) -> int:
        if self.kind == "categorical":
            return len(self.categories)
        return len(self.cuts) + 1

    @cached_property
    def _index(self) -> dict:
        return {c: i for i, c in enumerate(self.categories)}

    def bin_label(self, b: int) -> str:
        if b == UNKNOWN_BIN:
            return f"{self.name} = <unknown>"
        if self.kind == "categorical":
            return f"{self.name} = {self.categories[b]}"
        cuts = self.cuts
        if not cuts:
            return f"{self.name} = any"
        if b == 0:
            return f"{self.name} <= {_fmt_num(cuts[0])}"
        if b == len(cuts):
            return f"{self.name} > {_fmt_num(cuts[-1])}"
        return f"{_fmt_num(cuts[b - 1])} < {self.name} <= {_fmt_num(cuts[b])}"

    @property
    def bin_labels(self) -> list[str]:
        return [self.bin_label(b) for b in range(self.n_bins)]

    def bin_of(self, value) -> int:
        """Bin index of a single raw value."""
        if self.kind == "categorical":
            if value is None:
                value = MISSING_CATEGORY
            return self._index.get(str(value), UNKNOWN_BIN)
        v = _to_float(value)
        if v is None:
            if self.fill_value is None:
                raise DataError(f"feature {self.name!r}: missing numeric value and no fill value")
            v = self.fill_value
        return int(np.searchsorted(np.asarray(self.cuts, dtype=float), v, side="left"))

    def to_json(self) -> dict:
        out = {"name": self.name, "kind": self.kind}
        if self.kind == "categorical":
            out["categories"] = list(self.categories)
        else:
            # repr() of a float round-trips exactly
            out["cuts"] = [repr(float(c)) for c in self.cuts]
            out["fill_value"] = None if self.fill_value is None else repr(float(self.fill_value))
        return out

    @classmethod
    def from_json(cls, d: Mapping) -> "FeatureSchema":
        if d["kind"] == "categorical":
            return cls(d["name"], "categorical", categories=tuple(d["categories"]))
        fill = d.get("fill_value")
        return cls(
            d["name"],
            "numeric",
            cuts=tuple(float(c) for c in d["cuts"]),
            fill_value=None if fill is None else float(fill),
        )


@dataclass(frozen=True)
class Instance:
    raw_values: tuple
    disc_values: tuple

    @property
    def disc(self) -> np.ndarray:
        return np.asarray(self.disc_values, dtype=np.int64)


@dataclass(frozen=True, order=True)
class Predicate:
    """``feature == bin`` on the discretized representation."""

    feature: int
    bin: int

    def __post_init__(self):
        if self.feature < 0 or self.bin < 0:
            raise ContractError(f"invalid predicate {self}")

    def describe(self, schema: Sequence[FeatureSchema]) -> str:
        return schema[self.feature].bin_label(self.bin)


@dataclass(frozen=True)
class Anchor:
    """A conjunction of predicates that all hold on the explained instance.

    ``predicates`` keeps insertion order, so a greedy search's round-k anchor
    is a prefix of its round-(k+1) anchor.
    """

    predicates: tuple
    anchored_label: int
    precision_estimate: object = None
    coverage: float | None = None
    samples_drawn: int = 0

    def __post_init__(self):
        feats = [p.feature for p in self.predicates]
        if len(set(feats)) != len(feats):
            raise ContractError("anchor predicates must constrain distinct features")

    def __len__(self):
        return len(self.predicates)

    @property
    def features(self) -> np.ndarray:
        return np.asarray([p.feature for p in self.predicates], dtype=np.int64)

    @property
    def bins(self) -> np.ndarray:
        return np.asarray([p.bin for p in self.predicates], dtype=np.int64)

    def holds_on(self, z: Instance) -> bool:
        return all(predicate_holds(p, z) for p in self.predicates)

    def covers(self, Z: np.ndarray) -> np.ndarray:
        """Boolean mask of rows of the disc matrix ``Z`` satisfying every predicate."""
        Z = np.ascontiguousarray(Z, dtype=np.int64)
        return kernels.conjunction_mask(Z, self.features, self.bins)

    def agrees(self, Z: np.ndarray, labels: np.ndarray) -> np.ndarray:
        return np.asarray(labels) == self.anchored_label

    def describe(self, schema: Sequence[FeatureSchema], class_names: Sequence[str]) -> str:
        cond = " AND ".join(p.describe(schema) for p in self.predicates) or "(always)"
        return f"IF {cond} THEN PREDICT {class_names[self.anchored_label]}"


def predicate_holds(p: Predicate, z: Instance) -> bool:
    return z.disc_values[p.feature] == p.bin


def as_matrix(instances) -> np.ndarray:
    """Disc matrix from a list of :class:`Instance` or anything array-like."""
    if isinstance(instances, np.ndarray):
        return np.ascontiguousarray(instances, dtype=np.int64)
    rows = [z.disc_values if isinstance(z, Instance) else z for z in instances]
    if not rows:
        return np.zeros((0, 0), dtype=np.int64)
    return np.asarray(rows, dtype=np.int64)


def coverage(anchor: Anchor, reference) -> float:
    """Fraction of ``reference`` (instances or a disc matrix) the anchor covers."""
    Z = as_matrix(reference)
    if Z.shape[0] == 0:
        raise DataError("coverage needs a non-empty reference set")
    return float(anchor.covers(Z).mean())


# ---------------------------------------------------------------------------
# dataset
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Dataset:
    schema: tuple
    raw: tuple
    labels: np.ndarray
    class_names: tuple
    split: np.ndarray = field(default=None)

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.shape != (len(self.raw),):
            raise DataError("one label per row required")
        if len(labels) and (labels.min() < 0 or labels.max() >= len(self.class_names)):
            raise DataError("labels out of range")
        split = np.zeros(len(self.raw), dtype=np.int64) if self.split is None else np.asarray(self.split, dtype=np.int64)
        if split.shape != labels.shape or (len(split) and (split.min() < 0 or split.max() > TEST)):
            raise DataError("invalid split designation")
        for row_no, row in enumerate(self.raw):
            if len(row) != len(self.schema):
                raise DataError(f"row {row_no} has {len(row)} values, schema has {len(self.schema)}")
        labels.setflags(write=False)
        split.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "split", split)
        object.__setattr__(self, "schema", tuple(self.schema))
        object.__setattr__(self, "class_names", tuple(self.class_names))

    @property
    def n_features(self) -> int:
        return len(self.schema)

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    @property
    def feature_names(self) -> list[str]:
        return [f.name for f in self.schema]

    def __len__(self):
        return len(self.raw)

    @cached_property
    def disc(self) -> np.ndarray:
        X = discretize_rows(self.raw, self.schema)
        X.setflags(write=False)
        return X

    @property
    def instances(self) -> list[Instance]:
        return [Instance(tuple(r), tuple(int(b) for b in d)) for r, d in zip(self.raw, self.disc)]

    def instance(self, i: int) -> Instance:
        return Instance(tuple(self.raw[i]), tuple(int(b) for b in self.disc[i]))

    def indices(self, split: int) -> np.ndarray:
        return np.flatnonzero(self.split == split)

    def part(self, split: int) -> tuple[np.ndarray, np.ndarray]:
        """``(disc matrix, labels)`` for one split."""
        idx = self.indices(split)
        return self.disc[idx], self.labels[idx]

    def with_schema(self, schema: Sequence[FeatureSchema]) -> "Dataset":
        return replace(self, schema=tuple(schema))

    def with_split(self, split: np.ndarray) -> "Dataset":
        return replace(self, split=np.asarray(split))

    def schema_json(self) -> list[dict]:
        return [f.to_json() for f in self.schema]


def _to_float(value) -> float | None:
    if value is None:
        return None
    if isinstance(value, (int, float, np.integer, np.floating)):
        v = float(value)
        return None if math.isnan(v) else v
    s = str(value).strip()
    if s in MISSING_CELLS:
        return None
    return float(s)


def discretize(raw_values, schema: Sequence[FeatureSchema]) -> Instance:
    """Map raw values (or an existing :class:`Instance`) onto bin indices."""
    if isinstance(raw_values, Instance):
        raw_values = raw_values.raw_values
    raw_values = tuple(raw_values)
    if len(raw_values) != len(schema):
        raise DataError(f"expected {len(schema)} values, got {len(raw_values)}")
    try:
        disc = tuple(f.bin_of(v) for f, v in zip(schema, raw_values))
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    return Instance(raw_values, disc)


def discretize_rows(raw: Sequence[Sequence], schema: Sequence[FeatureSchema]) -> np.ndarray:
    n = len(raw)
    X = np.empty((n, len(schema)), dtype=np.int64)
    for j, feat in enumerate(schema):
        col = [r[j] for r in raw]
        if feat.kind == "categorical":
            idx = feat._index
            X[:, j] = [idx.get(MISSING_CATEGORY if v is None else str(v), UNKNOWN_BIN) for v in col]
        else:
            vals = np.array([np.nan if v is None else float(v) for v in col], dtype=float)
            if np.isnan(vals).any():
                if feat.fill_value is None:
                    raise DataError(f"feature {feat.name!r}: missing numeric values and no fill value")
                vals[np.isnan(vals)] = feat.fill_value
            X[:, j] = np.searchsorted(np.asarray(feat.cuts, dtype=float), vals, side="left")
    return X


def load_csv(path, label_column: str, schema_hints: Mapping[str, str] | None = None) -> Dataset:
    """Read an RFC-4180 CSV with a header row into an un-split :class:`Dataset`.

    A column is numeric when every non-missing cell parses as a number,
    unless ``schema_hints`` maps its name to ``"categorical"`` or
    ``"numeric"``.  Rows whose label cell is missing are dropped.  Missing
    categorical cells become the category ``"missing"``; missing numeric
    cells are imputed with the column median (recomputed on the train split
    by :func:`fit_discretizer`).
    """
    schema_hints = dict(schema_hints or {})
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot open dataset {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh, strict=True)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file", row=1) from None
        except csv.Error as exc:
            raise ParseError(str(exc), row=reader.line_num) from exc
        header = [h.strip() for h in header]
        if label_column not in header:
            raise ConfigError(f"label column {label_column!r} not in header {header}")
        unknown = set(schema_hints) - set(header)
        if unknown:
            raise ConfigError(f"schema hints for unknown columns: {sorted(unknown)}")
        for name, kind in schema_hints.items():
            if kind not in ("categorical", "numeric"):
                raise ConfigError(f"schema hint for {name!r} must be categorical or numeric")
        label_at = header.index(label_column)
        feat_at = [i for i in range(len(header)) if i != label_at]
        cells, labels, dropped = [], [], 0
        try:
            for row in reader:
                if not row:
                    continue
                if len(row) != len(header):
                    raise ParseError(f"expected {len(header)} cells, found {len(row)}", row=reader.line_num)
                lab = row[label_at].strip()
                if lab in MISSING_CELLS:
                    dropped += 1
                    continue
                cells.append(([row[i].strip() for i in feat_at], reader.line_num))
                labels.append(lab)
        except csv.Error as exc:
            raise ParseError(str(exc), row=reader.line_num) from exc
    if dropped:
        log.warning("dropped %d rows with a missing label", dropped)

    schema, columns = [], []
    for k, i in enumerate(feat_at):
        name = header[i]
        col = [(c[k], line) for c, line in cells]
        kind = schema_hints.get(name)
        if kind is None:
            kind = "numeric" if col and all(_parses(v) for v, _ in col) else "categorical"
        if kind == "numeric":
            vals = []
            for v, line in col:
                try:
                    vals.append(_to_float(v))
                except ValueError:
                    raise ParseError(f"column {name!r}: non-numeric value {v!r}", row=line) from None
            present = [v for v in vals if v is not None]
            fill = float(np.median(present)) if present else 0.0
            schema.append(FeatureSchema(name, "numeric", fill_value=fill))
            columns.append(vals)
        else:
            vals = [MISSING_CATEGORY if v in MISSING_CELLS else v for v, _ in col]
            cats = tuple(sorted(set(vals))) or (MISSING_CATEGORY,)
            schema.append(FeatureSchema(name, "categorical", categories=cats))
            columns.append(vals)

    raw = tuple(tuple(col[r] for col in columns) for r in range(len(cells)))
    class_names = tuple(sorted(set(labels)))
    lab_idx = {c: i for i, c in enumerate(class_names)}
    return Dataset(tuple(schema), raw, np.array([lab_idx[l] for l in labels], dtype=np.int64), class_names)


def _parses(v: str) -> bool:
    if v in MISSING_CELLS:
        return True
    try:
        float(v)
    except ValueError:
        return False
    return True


def split_dataset(dataset: Dataset, seed: int = 0, fractions=(0.8, 0.1, 0.1)) -> Dataset:
    """Seeded shuffle into train / validation / test (default 80/10/10)."""
    if len(fractions) != 3 or min(fractions) < 0 or not math.isclose(sum(fractions), 1.0):
        raise ConfigError(f"split fractions must be three non-negative numbers summing to 1, got {fractions}")
    n = len(dataset)
    order = np.random.default_rng(seed).permutation(n)
    n_val = int(n * fractions[1])
    n_test = int(n * fractions[2])
    split = np.full(n, TRAIN, dtype=np.int64)
    split[order[n - n_val - n_test : n - n_test]] = VALIDATION
    split[order[n - n_test :]] = TEST
    return dataset.with_split(split)


def fit_discretizer(dataset: Dataset, quantiles: int = 4) -> tuple:
    """Schema whose numeric features are cut at train-split quantiles.

    Cut points use numpy's default (linear interpolation) quantile rule.
    Duplicate cuts are merged and cuts at or above the train maximum are
    dropped, so a constant column ends up with a single bin.  Categorical
    features are returned unchanged.
    """
    if quantiles < 2:
        raise ConfigError("quantiles must be >= 2")
    train = dataset.indices(TRAIN)
    if len(train) == 0:
        raise DataError("fit_discretizer needs a non-empty train split")
    probs = np.arange(1, quantiles) / quantiles
    out = []
    for j, feat in enumerate(dataset.schema):
        if feat.kind == "categorical":
            out.append(feat)
            continue
        vals = np.array([dataset.raw[i][j] for i in train if dataset.raw[i][j] is not None], dtype=float)
        if len(vals) == 0:
            out.append(replace(feat, cuts=(), fill_value=feat.fill_value if feat.fill_value is not None else 0.0))
            continue
        cuts = np.unique(np.quantile(vals, probs))
        cuts = cuts[cuts < vals.max()]
        out.append(replace(feat, cuts=tuple(float(c) for c in cuts), fill_value=float(np.median(vals))))
    return tuple(out)


def prepare_dataset(path, label_column, schema_hints=None, quantiles=4, split_seed=0) -> Dataset:
    """load, split, fit the discretizer on train; the usual pipeline."""
    ds = split_dataset(load_csv(path, label_column, schema_hints), seed=split_seed)
    return ds.with_schema(fit_discretizer(ds, quantiles))


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------


def dataset_to_json(dataset: Dataset) -> dict:
    return {
        "format_version": DATASET_FORMAT_VERSION,
        "schema": dataset.schema_json(),
        "class_names": list(dataset.class_names),
        "rows": [list(r) for r in dataset.raw],
        "labels": dataset.labels.tolist(),
        "splits": [SPLIT_NAMES[s] for s in dataset.split.tolist()],
    }


def dataset_from_json(doc: Mapping) -> Dataset:
    try:
        if doc["format_version"] != DATASET_FORMAT_VERSION:
            raise FormatVersionError(f"unsupported dataset format_version {doc['format_version']}")
        schema = tuple(FeatureSchema.from_json(d) for d in doc["schema"])
        split = np.array([SPLIT_NAMES.index(s) for s in doc["splits"]], dtype=np.int64)
        raw = tuple(tuple(r) for r in doc["rows"])
        return Dataset(schema, raw, np.asarray(doc["labels"], dtype=np.int64), tuple(doc["class_names"]), split)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, DataError):
            raise
        raise CorruptFileError(f"malformed dataset document: {exc}") from exc


def save_dataset(dataset: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(dataset_to_json(dataset), fh)


def load_dataset(path) -> Dataset:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise CorruptFileError(f"{path}: {exc}") from exc
    return dataset_from_json(doc)


def from_arrays(X: np.ndarray, y: Iterable[int], n_bins: Sequence[int] | None = None, names=None,
                class_names=None, split=None) -> Dataset:
    """Dataset over already-binned integer columns (categorical '0', '1', ...).

    Handy for synthetic problems: bin ``b`` of each feature is the category
    ``str(b)``, so ``disc`` equals ``X``.
    """
    X = np.asarray(X, dtype=np.int64)
    y = np.asarray(list(y), dtype=np.int64)
    n_feat = X.shape[1]
    if n_bins is None:
        n_bins = [int(X[:, j].max()) + 1 if len(X) else 1 for j in range(n_feat)]
    names = names or [f"x{j}" for j in range(n_feat)]
    schema = tuple(
        FeatureSchema(names[j], "categorical", categories=tuple(str(b) for b in range(n_bins[j]))) for j in range(n_feat)
    )
    class_names = class_names or tuple(str(c) for c in range(int(y.max()) + 1 if len(y) else 1))
    raw = tuple(tuple(str(v) for v in row) for row in X.tolist())
    return Dataset(schema, raw, y, tuple(class_names), split)
