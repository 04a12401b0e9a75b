import json

import numpy as np
import pytest

from anchorkit.data import (
    TEST,
    TRAIN,
    UNKNOWN_BIN,
    VALIDATION,
    Anchor,
    Dataset,
    FeatureSchema,
    Instance,
    Predicate,
    coverage,
    dataset_from_json,
    dataset_to_json,
    discretize,
    fit_discretizer,
    from_arrays,
    load_csv,
    load_dataset,
    predicate_holds,
    prepare_dataset,
    save_dataset,
    split_dataset,
)
from anchorkit.errors import ConfigError, ContractError, CorruptFileError, DataError, FormatVersionError, ParseError
from conftest import ADULT_CSV, write_csv


def linear_quantile(sorted_vals, p):
    # textbook "type 7" rule: h = (n-1)p, interpolate between neighbours
    h = (len(sorted_vals) - 1) * p
    lo = int(h)
    hi = min(lo + 1, len(sorted_vals) - 1)
    return sorted_vals[lo] + (h - lo) * (sorted_vals[hi] - sorted_vals[lo])


def numeric_dataset(values):
    schema = (FeatureSchema("v", "numeric", fill_value=0.0),)
    return Dataset(schema, tuple((float(v),) for v in values), np.zeros(len(values), dtype=int), ("c",))


def test_three_row_csv(tmp_path):
    p = write_csv(tmp_path / "t.csv", ["a", "b", "label"], [(1, "x", "y"), (2, "z", "n"), (3, "x", "y")])
    ds = load_csv(p, "label")
    assert ds.n_features == 2 and len(ds) == 3
    assert [f.kind for f in ds.schema] == ["numeric", "categorical"]
    assert ds.class_names == ("n", "y")
    assert ds.labels.tolist() == [1, 0, 1]


def test_non_numeric_in_numeric_hint(tmp_path):
    p = write_csv(tmp_path / "t.csv", ["a", "label"], [(1, "y"), ("oops", "n")])
    with pytest.raises(ParseError) as e:
        load_csv(p, "label", {"a": "numeric"})
    assert e.value.row == 3


def test_bad_inputs(tmp_path):
    p = write_csv(tmp_path / "t.csv", ["a", "label"], [(1, "y")])
    with pytest.raises(ConfigError):
        load_csv(p, "missing")
    with pytest.raises(ConfigError):
        load_csv(p, "label", {"nope": "numeric"})
    with pytest.raises(ConfigError):
        load_csv(tmp_path / "absent.csv", "label")
    bad = tmp_path / "ragged.csv"
    bad.write_text("a,label\n1,y\n2\n")
    with pytest.raises(ParseError):
        load_csv(bad, "label")


def test_missing_values(tmp_path):
    p = write_csv(tmp_path / "t.csv", ["a", "c", "label"],
                  [(1, "x", "y"), ("", "", "n"), (3, "x", ""), (5, "z", "y")])
    ds = load_csv(p, "label")
    assert len(ds) == 3  # row with missing label dropped
    assert "missing" in ds.schema[1].categories
    assert ds.schema[0].fill_value == 3.0  # median of {1, 5}
    assert discretize(ds.raw[1], ds.schema).disc_values[0] == ds.schema[0].bin_of(3.0)


def test_adult_has_twelve_features():
    ds = load_csv(ADULT_CSV, "Salary")
    assert ds.feature_names == ["Age", "Workclass", "Education", "Marital Status", "Occupation", "Relationship",
                                "Race", "Sex", "Capital Gain", "Capital Loss", "Hours per week", "Country"]
    assert ds.class_names == ("<=50K", ">50K")


def test_quartiles_of_1_to_100():
    vals = list(range(1, 101))
    ds = numeric_dataset(vals)
    cuts = fit_discretizer(ds, 4)[0].cuts
    expected = [linear_quantile(vals, p) for p in (0.25, 0.5, 0.75)]
    assert expected == pytest.approx([25.75, 50.5, 75.25])
    assert list(cuts) == pytest.approx(expected, abs=1e-12)


def test_constant_column_single_bin():
    ds = numeric_dataset([4.0] * 20)
    f = fit_discretizer(ds, 4)[0]
    assert f.n_bins == 1
    assert f.bin_of(4.0) == 0 and f.bin_of(1e9) == 0


def test_categorical_untouched(tmp_path):
    p = write_csv(tmp_path / "t.csv", ["c", "label"], [("b", 1), ("a", 0), ("c", 1)])
    ds = load_csv(p, "label")
    assert fit_discretizer(ds, 4)[0] == ds.schema[0]
    assert ds.schema[0].categories == ("a", "b", "c")


def test_discretize_age_example():
    schema = (FeatureSchema("Age", "numeric", cuts=(28.0, 37.0, 48.0), fill_value=37.0),)
    inst = discretize((40,), schema)
    assert inst.disc_values == (2,)
    assert schema[0].bin_label(2) == "37 < Age <= 48"
    assert discretize((5,), schema).disc_values == (0,)
    # half-open (lo, hi]: the cut value itself is in the lower bin
    assert discretize((37,), schema).disc_values == (1,)
    assert discretize((99,), schema).disc_values == (3,)


def test_unseen_category_unknown():
    schema = (FeatureSchema("c", "categorical", categories=("a", "b")),)
    assert discretize(("zzz",), schema).disc_values == (UNKNOWN_BIN,)


def test_predicate_holds():
    z = Instance(("a", 3), (0, 2))
    assert predicate_holds(Predicate(1, z.disc_values[1]), z)
    assert not predicate_holds(Predicate(1, 1), z)
    zu = Instance(("?", 3), (UNKNOWN_BIN, 2))
    assert not any(predicate_holds(Predicate(0, b), zu) for b in range(5))
    with pytest.raises(ContractError):
        Predicate(0, UNKNOWN_BIN)


def test_coverage_examples():
    Z = np.array([[0, 1], [1, 1], [0, 0], [1, 0]])
    assert coverage(Anchor((), 0), Z) == 1.0
    assert coverage(Anchor((Predicate(0, 0),), 0), Z) == 0.5
    assert coverage(Anchor((Predicate(0, 0), Predicate(1, 1)), 0), Z) == 0.25
    with pytest.raises(DataError):
        coverage(Anchor((), 0), np.zeros((0, 2), dtype=int))


def test_anchor_rejects_duplicate_feature():
    with pytest.raises(ContractError):
        Anchor((Predicate(0, 0), Predicate(0, 1)), 0)


def test_split_fractions_and_determinism(toy_csv):
    ds = load_csv(toy_csv, "label")
    a = split_dataset(ds, seed=3)
    b = split_dataset(ds, seed=3)
    assert np.array_equal(a.split, b.split)
    counts = np.bincount(a.split, minlength=3)
    assert counts.tolist() == [320, 40, 40]
    assert not np.array_equal(a.split, split_dataset(ds, seed=4).split)
    with pytest.raises(ConfigError):
        split_dataset(ds, fractions=(0.5, 0.5, 0.5))


def test_discretizer_fit_on_train_only():
    vals = list(range(100))
    ds = numeric_dataset(vals).with_split(np.array([TRAIN] * 50 + [TEST] * 50))
    cuts = fit_discretizer(ds, 2)[0].cuts
    assert cuts == (linear_quantile(list(range(50)), 0.5),)


def test_dataset_json_roundtrip(tmp_path, toy_csv):
    ds = prepare_dataset(toy_csv, "label", quantiles=3, split_seed=1)
    path = tmp_path / "ds.json"
    save_dataset(ds, path)
    back = load_dataset(path)
    assert back.schema == ds.schema
    assert np.array_equal(back.disc, ds.disc)
    assert np.array_equal(back.split, ds.split)
    doc = dataset_to_json(ds)
    doc["format_version"] = 99
    with pytest.raises(FormatVersionError):
        dataset_from_json(doc)
    path.write_text(json.dumps(dataset_to_json(ds))[:-20])
    with pytest.raises(CorruptFileError):
        load_dataset(path)


def test_from_arrays_disc_identity(rng):
    X = rng.integers(0, 3, size=(30, 4))
    ds = from_arrays(X, X[:, 0] == 1)
    assert np.array_equal(ds.disc, X)
    assert ds.indices(VALIDATION).size == 0
