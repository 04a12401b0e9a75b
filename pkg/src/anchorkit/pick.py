"""Random / submodular pick of explanations and held-out precision-coverage evaluation.

An *explanation* here is anything with two vectorised methods:

``covers(Z) -> bool[n]``
    which rows of the disc matrix ``Z`` the explanation applies to;
``agrees(Z, labels) -> bool[n]``
    whether the explanation's prediction for each row matches ``labels``.

:class:`anchorkit.data.Anchor` and :class:`anchorkit.linear.LimeRegion`
both qualify.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .data import TEST, VALIDATION, Dataset
from .errors import AnchorKitError, ConfigError, DataError
from .linear import LimeRegion, explain_linear
from .perturbation import TabularRowSampler
from .search import SearchConfig, find_anchor

log = logging.getLogger(__name__)

CSV_COLUMNS = ("method", "setting_name", "setting_value", "K", "pick", "seed", "coverage", "precision")


class InvariantError(AnchorKitError):
    exit_code = 4


def coverage_matrix(explanations: Sequence, Z: np.ndarray) -> np.ndarray:
    """``M[i, j]`` is True when explanation ``i`` covers row ``j`` of ``Z``."""
    if len(explanations) == 0:
        return np.zeros((0, Z.shape[0]), dtype=bool)
    return np.vstack([np.asarray(e.covers(Z), dtype=bool) for e in explanations])


def submodular_pick(matrix: np.ndarray, K: int, return_gains: bool = False):
    """Greedy max-coverage: add the row with the largest marginal gain, ``K`` times.

    Ties go to the lowest row index; stops early once no row adds coverage.
    """
    M = np.asarray(matrix, dtype=bool)
    if M.ndim != 2 or M.shape[0] == 0:
        raise DataError("submodular_pick needs a non-empty coverage matrix")
    if K < 1:
        raise ConfigError("K must be >= 1")
    covered = np.zeros(M.shape[1], dtype=bool)
    picked, gains = [], []
    available = np.ones(M.shape[0], dtype=bool)
    for _ in range(min(K, M.shape[0])):
        gain = (M & ~covered).sum(axis=1)
        gain[~available] = -1
        best = int(np.argmax(gain))
        if gain[best] <= 0:
            break
        if gains and gain[best] > gains[-1]:
            raise InvariantError("greedy marginal gain increased; coverage is not submodular")
        picked.append(best)
        gains.append(int(gain[best]))
        available[best] = False
        covered |= M[best]
    return (picked, gains) if return_gains else picked


def random_pick(n_explanations: int, K: int, rng: np.random.Generator) -> list[int]:
    if K < 1:
        raise ConfigError("K must be >= 1")
    if K > n_explanations:
        raise ConfigError(f"cannot pick {K} of {n_explanations} explanations")
    return [int(i) for i in rng.choice(n_explanations, size=K, replace=False)]


@dataclass
class EvalRecord:
    coverage: float
    precision: float | None
    n_covered: int
    n_pairs: int
    n_agree: int


def evaluate(explanations: Sequence, pick: Sequence[int], test: np.ndarray, f=None,
             labels: np.ndarray | None = None) -> EvalRecord:
    """Coverage and precision of the picked explanations on ``test``.

    Coverage is the fraction of test rows covered by at least one picked
    explanation.  Precision pools every (picked explanation, covered row)
    pair and counts agreement with the black box; it is ``None`` when
    nothing is covered.
    """
    Z = np.asarray(test, dtype=np.int64)
    if Z.shape[0] == 0:
        raise DataError("evaluate needs a non-empty test set")
    if labels is None:
        labels = np.asarray(f.predict_batch(Z))
    any_cov = np.zeros(Z.shape[0], dtype=bool)
    pairs = agree = 0
    for i in pick:
        e = explanations[i]
        cov = np.asarray(e.covers(Z), dtype=bool)
        any_cov |= cov
        pairs += int(cov.sum())
        if cov.any():
            agree += int(np.asarray(e.agrees(Z[cov], labels[cov])).sum())
    return EvalRecord(float(any_cov.mean()), agree / pairs if pairs else None, int(any_cov.sum()), pairs, agree)


def single_explanation_stats(explanations: Sequence, test: np.ndarray, labels: np.ndarray):
    """Per-explanation ``(coverage, precision)`` arrays; precision is NaN when nothing is covered."""
    cov = np.empty(len(explanations))
    prec = np.full(len(explanations), np.nan)
    for i in range(len(explanations)):
        r = evaluate(explanations, [i], test, labels=labels)
        cov[i] = r.coverage
        if r.precision is not None:
            prec[i] = r.precision
    return cov, prec


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------


@dataclass
class SweepGrid:
    epsilons: list = field(default_factory=lambda: [0.01, 0.05, 0.1, 0.2])
    taus: list = field(default_factory=lambda: [0.0, 0.1, 0.2, 0.3, 0.4, 0.5])
    k_list: list = field(default_factory=lambda: [1, 2, 5, 10])
    picks: list = field(default_factory=lambda: ["rp", "sp"])
    seeds: list = field(default_factory=lambda: [0, 1, 2, 3, 4])
    n_explain: int = 500
    methods: list = field(default_factory=lambda: ["anchor", "lime"])

    def __post_init__(self):
        for p in self.picks:
            if p not in ("rp", "sp"):
                raise ConfigError(f"unknown pick method {p!r}")
        for m in self.methods:
            if m not in ("anchor", "lime"):
                raise ConfigError(f"unknown method {m!r}")
        if any(k < 1 for k in self.k_list):
            raise ConfigError("every K must be >= 1")
        if self.n_explain < 1:
            raise ConfigError("n_explain must be >= 1")


@dataclass
class LimeParams:
    sigma: float = 0.75
    n_samples: int = 5000
    K_feat: int = 5
    lam: float = 0.01


@dataclass
class EvalReport:
    rows: list = field(default_factory=list)
    # exact K=1 expectation: mean over every single explanation of a setting
    singles: list = field(default_factory=list)
    pools: dict = field(default_factory=dict)

    def summary(self) -> list[dict]:
        """Rows averaged over seeds (precision over the seeds where it is defined)."""
        groups: dict = {}
        for r in self.rows:
            key = (r["method"], r["setting_name"], r["setting_value"], r["K"], r["pick"])
            groups.setdefault(key, []).append(r)
        out = []
        for key, rs in groups.items():
            precs = [r["precision"] for r in rs if r["precision"] is not None]
            out.append({
                "method": key[0], "setting_name": key[1], "setting_value": key[2], "K": key[3], "pick": key[4],
                "seed": "mean",
                "coverage": float(np.mean([r["coverage"] for r in rs])),
                "precision": float(np.mean(precs)) if precs else None,
            })
        return out


def _instance_seed(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def explain_pool(method: str, f, dataset: Dataset, instance_rows: Sequence[int], sampler: TabularRowSampler,
                 seed: int, threads: int = 1, search_config: SearchConfig | None = None,
                 lime: LimeParams | None = None) -> list:
    """One explanation per dataset row in ``instance_rows``, each with its own derived seed."""
    X = dataset.disc

    def one(k_row):
        k, row = k_row
        rng = _instance_seed(seed, int(row))
        if method == "anchor":
            return find_anchor(f, X[row], sampler, search_config, rng)
        p = lime or LimeParams()
        return explain_linear(f, X[row], sampler, p.n_samples, p.sigma, p.K_feat, rng, p.lam)

    items = list(enumerate(instance_rows))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, items))
    return [one(it) for it in items]


def _fmt_setting(v: float) -> float:
    return float(round(v, 12))


def sweep(dataset: Dataset, f, grid: SweepGrid | None = None, search_config: SearchConfig | None = None,
          lime: LimeParams | None = None, seed: int = 0, threads: int = 1) -> EvalReport:
    """Full factorial of (method setting, K, pick, seed).

    Explanations are generated for (up to ``grid.n_explain``) validation
    instances, picked on the validation split and scored on the test split.
    """
    grid = grid or SweepGrid()
    search_config = search_config or SearchConfig()
    lime = lime or LimeParams()
    report = EvalReport()
    val_rows = dataset.indices(VALIDATION)[: grid.n_explain]
    Xv, _ = dataset.part(VALIDATION)
    Xt, _ = dataset.part(TEST)
    if len(Xt) == 0 or len(val_rows) == 0:
        raise DataError("sweep needs non-empty validation and test splits")
    labels_t = np.asarray(f.predict_batch(Xt))
    sampler = TabularRowSampler.from_dataset(dataset)

    settings = []
    if "anchor" in grid.methods:
        for eps in grid.epsilons:
            cfg = SearchConfig(epsilon=eps, delta=search_config.delta, batch_size=search_config.batch_size,
                               max_samples_per_candidate=search_config.max_samples_per_candidate,
                               max_anchor_size=search_config.max_anchor_size,
                               tolerance_eta=search_config.tolerance_eta)
            log.info("explaining %d instances with anchors at epsilon=%g", len(val_rows), eps)
            pool = explain_pool("anchor", f, dataset, val_rows, sampler, seed, threads, cfg)
            report.pools[("anchor", _fmt_setting(eps))] = pool
            settings.append(("anchor", "epsilon", _fmt_setting(eps), pool))
    if "lime" in grid.methods and grid.taus:
        log.info("explaining %d instances with linear surrogates", len(val_rows))
        lin = explain_pool("lime", f, dataset, val_rows, sampler, seed, threads, lime=lime)
        for tau in grid.taus:
            pool = [LimeRegion(e, tau) for e in lin]
            report.pools[("lime", _fmt_setting(tau))] = pool
            settings.append(("lime", "tau", _fmt_setting(tau), pool))

    for method, name, value, pool in settings:
        cov, prec = single_explanation_stats(pool, Xt, labels_t)
        ok = ~np.isnan(prec)
        report.singles.append({
            "method": method, "setting_name": name, "setting_value": value, "K": 1, "pick": "all", "seed": "all",
            "coverage": float(cov.mean()), "precision": float(prec[ok].mean()) if ok.any() else None,
        })
        M = coverage_matrix(pool, Xv)
        for K in grid.k_list:
            if K > len(pool):
                log.warning("skipping K=%d: only %d explanations", K, len(pool))
                continue
            sp = submodular_pick(M, K) if "sp" in grid.picks else None
            for pick_name in grid.picks:
                for s in grid.seeds:
                    if pick_name == "sp":
                        idx = sp
                    else:
                        idx = random_pick(len(pool), K, np.random.default_rng(np.random.SeedSequence([s, K, 17])))
                    r = evaluate(pool, idx, Xt, labels=labels_t)
                    report.rows.append({
                        "method": method, "setting_name": name, "setting_value": value, "K": K,
                        "pick": pick_name.upper(), "seed": s, "coverage": r.coverage, "precision": r.precision,
                    })
    return report

