import numpy as np
import pytest

from anchorkit.data import TRAIN, Instance, Predicate, prepare_dataset
from anchorkit.errors import ContractError, DataError
from anchorkit.perturbation import TabularRowSampler, sample_conditional, satisfies_all
from conftest import ADULT_CSV


def test_all_features_constrained_reproduces_x(rng):
    src = rng.integers(0, 3, size=(40, 5))
    s = TabularRowSampler(src)
    x = Instance(tuple(range(5)), (2, 1, 0, 2, 1))
    c = [Predicate(j, x.disc_values[j]) for j in range(5)]
    out = sample_conditional(s, c, x, 200, rng)
    assert all(z.disc_values == x.disc_values for z in out)


def test_empty_anchor_uniform_rows(rng):
    # each source row is unique, so a draw identifies its row
    src = np.array([[i // 4, i % 4] for i in range(16)])
    s = TabularRowSampler(src)
    Z = s.draw(np.array([0, 0]), [], 10_000, rng)
    counts = np.bincount(Z[:, 0] * 4 + Z[:, 1], minlength=16)
    expected = 10_000 / 16
    sigma = np.sqrt(10_000 * (1 / 16) * (15 / 16))
    assert np.all(np.abs(counts - expected) <= 3 * sigma)


def test_constrained_marginals_adult():
    ds = prepare_dataset(ADULT_CSV, "Salary")
    s = TabularRowSampler.from_dataset(ds)
    edu = ds.feature_names.index("Education")
    x = ds.instance(int(np.flatnonzero(ds.disc[:, edu] == 0)[0]))
    c = [Predicate(edu, 0)]
    z = sample_conditional(s, c, x, 5000, np.random.default_rng(1))
    assert satisfies_all(c, z)
    Z = np.array([q.disc_values for q in z])
    X, _ = ds.part(TRAIN)
    # chi-square goodness of fit of another feature against its train marginal
    j = ds.feature_names.index("Relationship")
    k = ds.schema[j].n_bins
    p = np.bincount(X[:, j], minlength=k) / len(X)
    obs = np.bincount(Z[:, j], minlength=k)
    chi2 = float(((obs - 5000 * p) ** 2 / (5000 * p)).sum())
    # 99.9% point of chi-square with 5 dof
    assert chi2 < 20.52
    # raw values follow the bins
    assert all(q.raw_values[edu] == x.raw_values[edu] for q in z[:50])


def test_predicate_must_hold(rng):
    s = TabularRowSampler(rng.integers(0, 2, size=(10, 3)))
    x = Instance((0, 0, 0), (0, 0, 0))
    with pytest.raises(ContractError):
        sample_conditional(s, [Predicate(1, 1)], x, 5, rng)


def test_enumerate_is_support(rng):
    src = rng.integers(0, 3, size=(25, 4))
    s = TabularRowSampler(src)
    x = np.array([1, 1, 1, 1])
    E = s.enumerate(x, [2])
    assert E.shape == (25, 4) and (E[:, 2] == 1).all()
    assert np.array_equal(np.delete(E, 2, axis=1), np.delete(src, 2, axis=1))


def test_bad_sampler_inputs():
    with pytest.raises(DataError):
        TabularRowSampler(np.zeros((0, 3), dtype=int))
    s = TabularRowSampler(np.zeros((3, 3), dtype=int))
    with pytest.raises(DataError):
        s.draw(np.zeros(2, dtype=int), [], 3, np.random.default_rng(0))


def test_unknown_bin_not_candidate():
    s = TabularRowSampler(np.zeros((3, 3), dtype=int))
    assert s.candidate_features(np.array([0, -1, 2])) == [0, 2]


def test_seeded_draws_reproducible():
    s = TabularRowSampler(np.arange(60).reshape(20, 3))
    x = np.array([0, 1, 2])
    a = s.draw(x, [1], 50, np.random.default_rng(5))
    b = s.draw(x, [1], 50, np.random.default_rng(5))
    assert np.array_equal(a, b)
