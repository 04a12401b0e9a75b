import numpy as np
import pytest

from anchorkit.data import TRAIN, from_arrays, prepare_dataset, split_dataset
from anchorkit.errors import ConfigError, CorruptFileError, DataError, FormatVersionError
from anchorkit.models import TreeEnsemble, _gini_split, load_model, predict_batch, save_model, train_tree_ensemble


@pytest.fixture
def toy(rng):
    X = rng.integers(0, 4, size=(300, 5))
    y = (X[:, 0] == 0).astype(int)
    return split_dataset(from_arrays(X, y), seed=0)


def test_single_class(rng):
    X = rng.integers(0, 3, size=(50, 3))
    ds = from_arrays(X, np.zeros(50, dtype=int), class_names=("only",))
    m = train_tree_ensemble(ds, n_trees=3, max_depth=3)
    assert (m.predict_batch(rng.integers(0, 3, size=(20, 3))) == 0).all()


def test_perfect_fit_on_indicator(toy):
    # one stump sees every feature: it must find the indicator split
    m = train_tree_ensemble(toy, n_trees=1, max_depth=1, seed=0, bootstrap=False, max_features=5)
    X, y = toy.part(TRAIN)
    assert (m.predict_batch(X) == y).all()
    m = train_tree_ensemble(toy, n_trees=5, max_depth=3, seed=0, max_features=5)
    assert (m.predict_batch(X) == y).all()


def test_same_seed_identical_bytes(toy):
    a = train_tree_ensemble(toy, n_trees=4, max_depth=3, seed=9).dumps()
    b = train_tree_ensemble(toy, n_trees=4, max_depth=3, seed=9).dumps()
    assert a == b
    assert a != train_tree_ensemble(toy, n_trees=4, max_depth=3, seed=10).dumps()


def test_predict_edge_cases(toy):
    m = train_tree_ensemble(toy, n_trees=3, max_depth=2)
    assert predict_batch(m, []).tolist() == []
    assert m.predict_batch(np.zeros((0, 5), dtype=int)).shape == (0,)
    x = toy.disc[0]
    out = m.predict_batch(np.vstack([x, x, x]))
    assert len(set(out.tolist())) == 1
    with pytest.raises(DataError):
        m.predict_batch(np.zeros((2, 4), dtype=int))
    with pytest.raises(DataError):
        m.predict_batch(np.full((1, 5), 50))


def test_unknown_bin_predicts(toy):
    m = train_tree_ensemble(toy, n_trees=3, max_depth=3)
    out = m.predict_batch(np.full((2, 5), -1))
    assert out.shape == (2,) and set(out.tolist()) <= {0, 1}


def test_roundtrip(tmp_path, toy):
    m = train_tree_ensemble(toy, n_trees=6, max_depth=3, seed=1, aggregation="vote")
    p = tmp_path / "m.json"
    save_model(m, p)
    back = load_model(p)
    X, _ = toy.part(TRAIN)
    assert back.n_trees == 6 and back.aggregation == "vote"
    assert np.array_equal(back.predict_batch(X), m.predict_batch(X))
    assert back.dumps() == m.dumps()


def test_corrupt_files(tmp_path, toy):
    m = train_tree_ensemble(toy, n_trees=2, max_depth=2)
    p = tmp_path / "m.json"
    text = m.dumps()
    p.write_text(text[: len(text) // 2])
    with pytest.raises(CorruptFileError):
        load_model(p)
    p.write_text(text.replace('"format_version":1', '"format_version":7'))
    with pytest.raises(FormatVersionError):
        load_model(p)
    p.write_text('{"format_version": 1, "trees": "x"}')
    with pytest.raises(CorruptFileError):
        load_model(p)


def test_bad_params(toy):
    with pytest.raises(ConfigError):
        train_tree_ensemble(toy, n_trees=0)
    with pytest.raises(ConfigError):
        train_tree_ensemble(toy, aggregation="mean")


def test_gini_split_two_class_optimum():
    # bins 0 and 2 are pure class 0, bin 1 is pure class 1: optimum isolates bin 1
    hist = np.array([[5, 0], [0, 5], [3, 0], [0, 0]])
    imp, left = _gini_split(hist, majority=0)
    assert imp == 0.0
    assert sorted(left.tolist()) == [0, 2]
    assert _gini_split(np.array([[4, 1], [0, 0]]), 0) is None


def test_adult_accuracy():
    from conftest import ADULT_CSV
    from anchorkit.data import TEST

    ds = prepare_dataset(ADULT_CSV, "Salary")
    m = train_tree_ensemble(ds, n_trees=10, max_depth=6, seed=0)
    Xt, yt = ds.part(TEST)
    majority = max(np.mean(yt), 1 - np.mean(yt))
    assert (m.predict_batch(Xt) == yt).mean() > majority + 0.04
