"""Search-vs-oracle suites on small enumerable problems.

Three checks, each comparing the sampling-based search to an exact answer:

* soundness: AND-of-two-features model, fraction of returned anchors whose
  exact precision falls below ``1 - epsilon``;
* shortest-anchor agreement: random rule models, greedy anchor vs the
  brute-force shortest valid anchor;
* estimator coverage: how often the sampled precision lands within the
  Hoeffding halfwidth of the exact precision.
"""
from __future__ import annotations

import numpy as np

from .perturbation import TabularRowSampler
from .search import SearchConfig, estimate_precision, exact_precision, find_anchor, hoeffding_halfwidth
from .synthetic import ConjunctionModel, and_problem, random_problem, shortest_valid_anchor


def soundness_suite(config: SearchConfig, runs: int = 100, seed: int = 0) -> dict:
    prob = and_problem(seed=seed)
    bad, lengths = 0, []
    for r in range(runs):
        a = find_anchor(prob.model, prob.x, prob.sampler, config, np.random.default_rng(np.random.SeedSequence([seed, r])))
        if exact_precision(prob.model, prob.x, a, prob.sampler) < config.threshold:
            bad += 1
        lengths.append(len(a))
    return {"runs": runs, "violations": bad, "violation_rate": bad / runs,
            "length_histogram": np.bincount(lengths).tolist()}


def shortest_anchor_suite(config: SearchConfig, runs: int = 50, seed: int = 0) -> dict:
    precise = near = 0
    cases = []
    for r in range(runs):
        prob = random_problem(seed * 100003 + r)
        a = find_anchor(prob.model, prob.x, prob.sampler, config, np.random.default_rng(np.random.SeedSequence([seed, r])))
        prec = exact_precision(prob.model, prob.x, a, prob.sampler)
        best, _ = shortest_valid_anchor(prob.model, prob.x, prob.sampler, config.epsilon)
        precise += prec >= config.threshold
        near += len(a) <= len(best) + 1
        cases.append({"n_features": prob.n_features, "length": len(a), "shortest": len(best), "precision": prec})
    return {"runs": runs, "precise": int(precise), "near_shortest": int(near), "cases": cases}


def bernoulli_problem(p_num: int = 7, p_den: int = 10):
    """One binary feature, ``p_num / p_den`` of source rows share x's label: the empty anchor has precision p."""
    rows = np.array([[1]] * p_num + [[0]] * (p_den - p_num), dtype=np.int64)
    return ConjunctionModel([0], [1]), TabularRowSampler(rows), np.array([1], dtype=np.int64)


def estimator_suite(trials: int = 1000, n: int = 200, delta: float = 0.1, seed: int = 0) -> dict:
    f, D, x = bernoulli_problem()
    exact = exact_precision(f, x, [], D)
    hw = hoeffding_halfwidth(n, delta)
    hits = 0
    for t in range(trials):
        est = estimate_precision(f, x, [], D, n, delta, np.random.default_rng(np.random.SeedSequence([seed, t])))
        hits += abs(est.mean - exact) <= hw
    return {"trials": trials, "n": n, "delta": delta, "exact": exact, "halfwidth": hw,
            "within": int(hits), "rate": hits / trials}


def run_oracle_suite(config: SearchConfig, n_and: int = 100, n_random: int = 50, n_estimator: int = 1000,
                     seed: int = 0) -> dict:
    """Run all three suites; ``passed`` applies the acceptance thresholds."""
    s = soundness_suite(config, n_and, seed)
    g = shortest_anchor_suite(config, n_random, seed)
    e = estimator_suite(n_estimator, delta=config.delta, seed=seed)
    passed = (s["violation_rate"] <= 0.16 and g["precise"] >= 0.9 * g["runs"]
              and g["near_shortest"] >= 0.9 * g["runs"] and e["rate"] >= 0.9)
    return {"and": s, "random": g, "estimator": e, "passed": bool(passed), "seed": seed,
            "search_config": config.to_json()}
