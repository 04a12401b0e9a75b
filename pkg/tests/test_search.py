import itertools
import math

import numpy as np
import pytest

from anchorkit.data import Anchor, Predicate
from anchorkit.errors import ConfigError, ContractError
from anchorkit.perturbation import TabularRowSampler
from anchorkit.search import (
    PrecisionEstimate,
    SearchConfig,
    certify_anchor,
    estimate_precision,
    exact_precision,
    find_anchor,
    hoeffding_halfwidth,
    is_certified,
    select_best_candidate,
)
from anchorkit.synthetic import ConjunctionModel, TruthTableModel, and_problem


class Constant:
    n_classes = 2

    def predict_batch(self, X):
        return np.zeros(len(X), dtype=np.int64)


def brute_force_shortest(f, x, rows, eps):
    # independent of anchorkit.synthetic: plain enumeration of subsets and rows
    F = len(x)
    target = int(f.predict_batch(np.asarray([x]))[0])
    for size in range(F + 1):
        for subset in itertools.combinations(range(F), size):
            Z = np.array(rows, copy=True)
            Z[:, list(subset)] = np.asarray(x)[list(subset)]
            if (f.predict_batch(Z) == target).mean() >= 1 - eps:
                return subset


# --- hoeffding -------------------------------------------------------------

def test_hoeffding_reference_value():
    assert hoeffding_halfwidth(200, 0.05) == pytest.approx(math.sqrt(math.log(40) / 400), abs=1e-12)
    assert hoeffding_halfwidth(200, 0.05) == pytest.approx(0.09603, abs=1e-5)


def test_hoeffding_scaling_and_monotone():
    assert hoeffding_halfwidth(800, 0.05) == pytest.approx(hoeffding_halfwidth(200, 0.05) / 2, rel=1e-12)
    widths = [hoeffding_halfwidth(100, d) for d in (0.5, 0.1, 0.05, 0.01, 1e-6)]
    assert all(a < b for a, b in zip(widths, widths[1:]))
    with pytest.raises(ContractError):
        hoeffding_halfwidth(0, 0.1)
    with pytest.raises(ContractError):
        hoeffding_halfwidth(10, 1.0)


def test_estimate_bounds_clipped():
    e = PrecisionEstimate(10, 10, 0.1)
    assert e.upper == 1.0 and e.lower == pytest.approx(1 - hoeffding_halfwidth(10, 0.1))
    assert PrecisionEstimate(0, 0, 0.1).halfwidth == math.inf


# --- estimate / exact --------------------------------------------------------

FOUR_ROWS = np.array([[0, 0], [0, 1], [1, 0], [1, 1]])
IND0 = ConjunctionModel([0], [0])


def test_constant_classifier(rng):
    s = TabularRowSampler(FOUR_ROWS)
    x = np.array([1, 0])
    assert estimate_precision(Constant(), x, [], s, 50, 0.1, rng).mean == 1.0
    assert exact_precision(Constant(), x, [], s) == 1.0


def test_all_features_constrained(rng):
    s = TabularRowSampler(FOUR_ROWS)
    x = np.array([0, 1])
    c = [Predicate(0, 0), Predicate(1, 1)]
    assert estimate_precision(IND0, x, c, s, 100, 0.1, rng).mean == 1.0
    assert exact_precision(IND0, x, c, FOUR_ROWS) == 1.0


def test_four_row_half(rng):
    x = np.array([0, 0])
    # hand enumeration: rows 0 and 1 have feature0 = bin0, rows 2 and 3 do not
    assert exact_precision(IND0, x, [], FOUR_ROWS) == 0.5
    est = estimate_precision(IND0, x, [], TabularRowSampler(FOUR_ROWS), 400, 0.1, rng)
    assert abs(est.mean - 0.5) <= est.halfwidth


def test_estimate_requires_holding_anchor(rng):
    with pytest.raises(ContractError):
        estimate_precision(IND0, np.array([0, 0]), [Predicate(0, 1)], TabularRowSampler(FOUR_ROWS), 10, 0.1, rng)
    with pytest.raises(ContractError):
        estimate_precision(IND0, np.array([0, 0]), [], TabularRowSampler(FOUR_ROWS), 0, 0.1, rng)


# --- select_best_candidate -------------------------------------------------

def test_single_candidate_one_batch(rng):
    s = TabularRowSampler(FOUR_ROWS)
    cfg = SearchConfig(batch_size=37)
    p, est = select_best_candidate(IND0, np.array([0, 0]), [], [Predicate(1, 0)], s, cfg, rng)
    assert p == Predicate(1, 0) and est.n_samples == 37


def test_one_vs_zero_precision_arms():
    # f = 1[feature0 == 1]; feature0 is 0 in every source row, so fixing feature0 gives precision 1
    # and fixing feature1 gives precision 0
    g = np.random.default_rng(0)
    rows = np.column_stack([np.zeros(30, dtype=int), g.integers(0, 2, 30), g.integers(0, 2, 30)])
    f = ConjunctionModel([0], [1])
    x = np.array([1, 1, 0])
    s = TabularRowSampler(rows)
    assert exact_precision(f, x, [Predicate(0, 1)], rows) == 1.0
    assert exact_precision(f, x, [Predicate(1, 1)], rows) == 0.0
    wins = 0
    for t in range(100):
        p, _ = select_best_candidate(f, x, [], [Predicate(1, 1), Predicate(0, 1)], s, SearchConfig(),
                                     np.random.default_rng(t))
        wins += p == Predicate(0, 1)
    assert wins >= 99


def test_tie_goes_to_lowest_feature_at_cap(rng):
    s = TabularRowSampler(FOUR_ROWS)
    cfg = SearchConfig(batch_size=50, max_samples_per_candidate=200, tolerance_eta=0.0)
    p, est = select_best_candidate(Constant(), np.array([1, 1]), [], [Predicate(1, 1), Predicate(0, 1)], s, cfg, rng)
    assert p.feature == 0
    assert est.n_samples == 200


def test_candidate_conflicting_with_base(rng):
    s = TabularRowSampler(FOUR_ROWS)
    with pytest.raises(ContractError):
        select_best_candidate(IND0, np.array([0, 0]), [Predicate(0, 0)], [Predicate(0, 0)], s, SearchConfig(), rng)


# --- certify ----------------------------------------------------------------

def test_certify_precision_one_sample_count(rng):
    rows = np.random.default_rng(1).integers(0, 2, size=(20, 3))
    s = TabularRowSampler(rows)
    cfg = SearchConfig(epsilon=0.05, delta=0.1, batch_size=100)
    est = certify_anchor(Constant(), np.array([1, 0, 1]), [], s, cfg, rng)
    assert est.lower >= 0.95
    delta_look = 0.1 / (3 ** 2 * math.ceil(10_000 / 100))
    needed = math.ceil(math.log(2 / delta_look) / (2 * 0.05 ** 2))
    assert est.n_samples == 100 * math.ceil(needed / 100)


def test_certify_rejects_half(rng):
    x = np.array([0, 0])
    assert exact_precision(IND0, x, [], FOUR_ROWS) == 0.5
    est = certify_anchor(IND0, x, [], TabularRowSampler(FOUR_ROWS), SearchConfig(epsilon=0.05), rng)
    assert est.upper < 0.95


# --- find_anchor -----------------------------------------------------------

def test_epsilon_one_gives_empty_anchor(rng):
    p = and_problem(seed=1)
    a = find_anchor(p.model, p.x, p.sampler, SearchConfig(epsilon=1.0), rng)
    assert len(a) == 0


def test_indicator_gives_single_predicate(rng):
    rows = np.random.default_rng(3).integers(0, 3, size=(200, 5))
    f = ConjunctionModel([2], [1])
    x = np.array([0, 2, 1, 0, 1])
    a = find_anchor(f, x, TabularRowSampler(rows), SearchConfig(epsilon=0.05), rng)
    assert a.predicates == (Predicate(2, 1),)
    assert a.anchored_label == 1 and a.samples_drawn > 0


def test_and_model_matches_brute_force():
    p = and_problem(n_features=6, n_rows=300, designated=(1, 4), seed=2)
    rows = p.sampler.source_rows
    # dataset construction: each single predicate leaves precision well below 0.95
    for j in range(6):
        assert exact_precision(p.model, p.x, [Predicate(j, int(p.x[j]))], rows) < 0.95
    best = brute_force_shortest(p.model, p.x, rows, 0.05)
    for seed in range(5):
        a = find_anchor(p.model, p.x, p.sampler, SearchConfig(), np.random.default_rng(seed))
        assert sorted(a.features.tolist()) == list(best) == [1, 4]
        assert is_certified(a, SearchConfig())


def test_trace_prefix_property(rng):
    p = and_problem(seed=4)
    trace = []
    a = find_anchor(p.model, p.x, p.sampler, SearchConfig(), rng, trace=trace)
    assert [len(t) for t in trace] == list(range(len(a) + 1))
    for small, big in zip(trace, trace[1:]):
        assert big.predicates[: len(small)] == small.predicates


def test_sample_budget(rng):
    p = and_problem(seed=6)
    cfg = SearchConfig(max_samples_per_candidate=500)
    a = find_anchor(p.model, p.x, p.sampler, cfg, rng)
    assert 0 < a.samples_drawn <= (len(a) + 1) * p.n_features * 500


def test_max_anchor_size_stops_search(rng):
    p = and_problem(seed=4)
    a = find_anchor(p.model, p.x, p.sampler, SearchConfig(max_anchor_size=1), rng)
    assert len(a) == 1 and not is_certified(a, SearchConfig())


def test_find_anchor_deterministic():
    p = and_problem(seed=5)
    a = find_anchor(p.model, p.x, p.sampler, SearchConfig(), np.random.default_rng(9))
    b = find_anchor(p.model, p.x, p.sampler, SearchConfig(), np.random.default_rng(9))
    assert a == b


def test_truth_table_xor_needs_both():
    f = TruthTableModel.from_function(lambda r: r[0] ^ r[1], 3)
    rows = np.array(list(itertools.product([0, 1], repeat=3)))
    x = np.array([1, 0, 0])
    a = find_anchor(f, x, TabularRowSampler(rows), SearchConfig(), np.random.default_rng(0))
    assert sorted(a.features.tolist()) == [0, 1]


def test_config_validation():
    for bad in ({"epsilon": 0}, {"delta": 1.0}, {"batch_size": 0}, {"max_samples_per_candidate": 0},
                {"max_anchor_size": -1}, {"tolerance_eta": -0.1}):
        with pytest.raises(ConfigError):
            SearchConfig(**bad)
