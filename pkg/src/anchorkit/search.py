"""Greedy anchor search with Hoeffding-certified precision.

The search grows an anchor one predicate per round.  Each round picks the
candidate predicate whose extended anchor has the highest precision, using
an LUCB-style loop that only samples the current leader and its strongest
challenger.  Before every round the current anchor is tested: once the
Hoeffding lower bound on its precision reaches ``1 - epsilon`` the search
stops.  Constraining every feature always terminates the search, since
under the row-overwrite sampler that anchor has precision exactly 1.

All confidence statements use a single per-look level
``delta / (F**2 * B)`` where ``F`` is the number of candidate features and
``B`` the maximum number of batches any one arm can receive; a union bound
over rounds, arms and repeated looks then keeps the overall failure
probability below ``delta``.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, replace
from typing import Sequence

import numpy as np

from .data import Anchor, Predicate, as_matrix
from .errors import AnchorKitError, ConfigError, ContractError
from .perturbation import TabularRowSampler, check_anchor_holds


def hoeffding_halfwidth(n: int, delta: float) -> float:
    """``sqrt(ln(2/delta) / (2n))``: two-sided Hoeffding radius for a mean of ``n`` draws in [0, 1]."""
    if n < 1:
        raise ContractError("hoeffding_halfwidth needs n >= 1")
    if not 0.0 < delta < 1.0:
        raise ContractError("delta must lie in (0, 1)")
    return math.sqrt(math.log(2.0 / delta) / (2.0 * n))


@dataclass(frozen=True)
class PrecisionEstimate:
    n_samples: int
    n_matches: int
    delta: float

    @property
    def mean(self) -> float:
        return self.n_matches / self.n_samples if self.n_samples else 0.0

    @property
    def halfwidth(self) -> float:
        return hoeffding_halfwidth(self.n_samples, self.delta) if self.n_samples else math.inf

    @property
    def lower(self) -> float:
        return max(0.0, self.mean - self.halfwidth)

    @property
    def upper(self) -> float:
        return min(1.0, self.mean + self.halfwidth)

    def add(self, n: int, matches: int) -> "PrecisionEstimate":
        return replace(self, n_samples=self.n_samples + n, n_matches=self.n_matches + matches)

    def to_json(self) -> dict:
        return {"mean": self.mean, "lower": self.lower, "upper": self.upper, "n": self.n_samples,
                "matches": self.n_matches, "delta": self.delta}


@dataclass(frozen=True)
class SearchConfig:
    epsilon: float = 0.05
    delta: float = 0.1
    batch_size: int = 100
    max_samples_per_candidate: int = 10_000
    max_anchor_size: int | None = None
    tolerance_eta: float = 0.01

    def __post_init__(self):
        if not 0.0 < self.epsilon <= 1.0:
            raise ConfigError("epsilon must lie in (0, 1]")
        if not 0.0 < self.delta < 1.0:
            raise ConfigError("delta must lie in (0, 1)")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.max_samples_per_candidate < 1:
            raise ConfigError("max_samples_per_candidate must be >= 1")
        if self.max_anchor_size is not None and self.max_anchor_size < 0:
            raise ConfigError("max_anchor_size must be >= 0")
        if self.tolerance_eta < 0:
            raise ConfigError("tolerance_eta must be >= 0")

    @property
    def threshold(self) -> float:
        return 1.0 - self.epsilon

    @property
    def looks_per_arm(self) -> int:
        return math.ceil(self.max_samples_per_candidate / self.batch_size)

    def look_delta(self, n_features: int) -> float:
        """Confidence level used for every single bound evaluation."""
        F = max(n_features, 1)
        return self.delta / (F * F * self.looks_per_arm)

    def to_json(self) -> dict:
        return asdict(self)


class _Arm:
    """Sampling state of one candidate anchor during a search."""

    __slots__ = ("predicates", "features", "estimate")

    def __init__(self, predicates: tuple, delta: float):
        self.predicates = predicates
        self.features = [p.feature for p in predicates]
        self.estimate = PrecisionEstimate(0, 0, delta)


class _Context:
    """Everything one search invocation shares: model, sampler, target label, budget counter."""

    def __init__(self, f, x, D, config: SearchConfig, rng, n_features: int | None = None):
        self.f = f
        self.x = x
        self.D = D
        self.config = config
        self.rng = rng
        self.target = int(np.asarray(f.predict_batch(D.as_batch(x)))[0])
        self.candidates = list(D.candidate_features(x))
        nf = len(self.candidates) if n_features is None else n_features
        self.delta = config.look_delta(nf)
        self.drawn = 0

    def pull(self, arm: _Arm, n: int) -> None:
        cap = self.config.max_samples_per_candidate - arm.estimate.n_samples
        n = min(n, cap)
        if n <= 0:
            return
        batch = self.D.draw(self.x, arm.features, n, self.rng)
        labels = np.asarray(self.f.predict_batch(batch))
        arm.estimate = arm.estimate.add(n, int((labels == self.target).sum()))
        self.drawn += n

    def capped(self, arm: _Arm) -> bool:
        return arm.estimate.n_samples >= self.config.max_samples_per_candidate


def estimate_precision(f, x, c: Sequence[Predicate] | Anchor, D, n: int, delta: float,
                       rng: np.random.Generator) -> PrecisionEstimate:
    """Monte-Carlo precision of anchor ``c`` from ``n`` conditional draws.

    Precision is the fraction of draws ``z`` with ``f(z) == f(x)``; the
    returned estimate carries a two-sided Hoeffding interval at ``delta``.
    """
    preds = tuple(c.predicates if isinstance(c, Anchor) else c)
    if n < 1:
        raise ContractError("estimate_precision needs n >= 1")
    _check_holds(preds, x, D)
    target = int(np.asarray(f.predict_batch(D.as_batch(x)))[0])
    batch = D.draw(x, [p.feature for p in preds], n, rng)
    labels = np.asarray(f.predict_batch(batch))
    return PrecisionEstimate(n, int((labels == target).sum()), delta)


def exact_precision(f, x, c: Sequence[Predicate] | Anchor, source_rows) -> float:
    """Precision under the row-overwrite sampler, by enumerating every source row."""
    preds = tuple(c.predicates if isinstance(c, Anchor) else c)
    sampler = source_rows if isinstance(source_rows, TabularRowSampler) else TabularRowSampler(as_matrix(source_rows))
    check_anchor_holds(preds, x)
    target = int(np.asarray(f.predict_batch(sampler.as_batch(x)))[0])
    Z = sampler.enumerate(x, [p.feature for p in preds])
    return float((np.asarray(f.predict_batch(Z)) == target).mean())


def _check_holds(preds, x, D) -> None:
    for p in preds:
        if D.predicate_for(x, p.feature) != p:
            raise ContractError(f"predicate {p} does not hold on the explained instance")


def _select(ctx: _Context, base: tuple, candidates: Sequence[Predicate]) -> _Arm:
    cfg = ctx.config
    if not candidates:
        raise ContractError("select_best_candidate needs at least one candidate")
    used = {p.feature for p in base}
    for p in candidates:
        if p.feature in used:
            raise ContractError(f"candidate {p} re-constrains a feature of the base anchor")
    # arms in feature order so argmax ties resolve to the lowest feature index
    arms = [_Arm(base + (p,), ctx.delta) for p in sorted(candidates, key=lambda p: p.feature)]
    for arm in arms:
        ctx.pull(arm, cfg.batch_size)
    if len(arms) == 1:
        return arms[0]
    while True:
        means = np.array([a.estimate.mean for a in arms])
        best = int(np.argmax(means))
        uppers = np.array([a.estimate.upper for a in arms])
        uppers[best] = -np.inf
        rival = int(np.argmax(uppers))
        if arms[best].estimate.lower >= arms[rival].estimate.upper - cfg.tolerance_eta:
            return arms[best]
        todo = [a for a in (arms[best], arms[rival]) if not ctx.capped(a)]
        if not todo:
            return arms[best]
        for a in todo:
            ctx.pull(a, cfg.batch_size)


def _certify(ctx: _Context, arm: _Arm) -> PrecisionEstimate:
    cfg = ctx.config
    thr = cfg.threshold
    while True:
        est = arm.estimate
        if est.n_samples:
            if est.lower >= thr or est.upper < thr:
                return est
        if ctx.capped(arm):
            return est
        ctx.pull(arm, cfg.batch_size)


def select_best_candidate(f, x, base: Sequence[Predicate] | Anchor, candidates: Sequence[Predicate], D,
                          config: SearchConfig, rng: np.random.Generator) -> tuple[Predicate, PrecisionEstimate]:
    """Pick the candidate whose addition to ``base`` gives the most precise anchor.

    LUCB loop: after one batch per arm, repeatedly sample the empirical
    leader and the rival with the highest upper bound until the leader's
    lower bound clears the rival's upper bound minus ``tolerance_eta``.  If
    both are at the per-arm cap the empirical leader is returned (ties to
    the lowest feature index).
    """
    base = tuple(base.predicates if isinstance(base, Anchor) else base)
    _check_holds(base + tuple(candidates), x, D)
    ctx = _Context(f, x, D, config, rng)
    arm = _select(ctx, base, list(candidates))
    return arm.predicates[-1], arm.estimate


def certify_anchor(f, x, c: Sequence[Predicate] | Anchor, D, config: SearchConfig,
                   rng: np.random.Generator) -> PrecisionEstimate:
    """Sample anchor ``c`` in batches until its precision is decided.

    Stops when the lower bound reaches ``1 - epsilon`` (accept), the upper
    bound falls below it (reject) or the per-candidate cap is hit (reject).
    Acceptance is ``estimate.lower >= 1 - epsilon`` on the returned estimate.
    """
    preds = tuple(c.predicates if isinstance(c, Anchor) else c)
    _check_holds(preds, x, D)
    ctx = _Context(f, x, D, config, rng)
    return _certify(ctx, _Arm(preds, ctx.delta))


def find_anchor(f, x, D, config: SearchConfig | None = None, rng: np.random.Generator | None = None,
                trace: list | None = None) -> Anchor:
    """Shortest-first greedy anchor for ``f``'s prediction on ``x``.

    ``D`` is a perturbation sampler (tabular or text).  The returned
    anchor's ``precision_estimate`` is its final certified (or, when the
    feature budget ran out, best available) estimate; ``samples_drawn``
    counts every model query made by the search.  If ``trace`` is given, the
    anchor reached at each round is appended to it.
    """
    config = config or SearchConfig()
    rng = rng if rng is not None else np.random.default_rng(0)
    ctx = _Context(f, x, D, config, rng)
    max_size = len(ctx.candidates) if config.max_anchor_size is None else min(config.max_anchor_size, len(ctx.candidates))
    arm = _Arm((), ctx.delta)
    while True:
        est = _certify(ctx, arm)
        if trace is not None:
            trace.append(Anchor(arm.predicates, ctx.target, est, samples_drawn=ctx.drawn))
        if est.lower >= config.threshold:
            break
        used = set(arm.features)
        remaining = [D.predicate_for(x, j) for j in ctx.candidates if j not in used]
        if not remaining or len(arm.predicates) >= max_size:
            break
        arm = _select(ctx, arm.predicates, remaining)
    budget = (len(arm.predicates) + 1) * max(len(ctx.candidates), 1) * config.max_samples_per_candidate
    if ctx.drawn > budget:
        raise AnchorKitError(f"search drew {ctx.drawn} samples, over the budget of {budget}")
    return Anchor(arm.predicates, ctx.target, arm.estimate, samples_drawn=ctx.drawn)


def is_certified(anchor: Anchor, config: SearchConfig) -> bool:
    est = anchor.precision_estimate
    return est is not None and est.n_samples > 0 and est.lower >= config.threshold


def explanation_json(anchor: Anchor, schema, class_names, instance_index: int, config: SearchConfig, seed: int,
                     coverage: float | None = None, extra: dict | None = None) -> dict:
    est = anchor.precision_estimate
    doc = {
        "instance_index": instance_index,
        "predicted_class": class_names[anchor.anchored_label],
        "predicates": [{"feature": schema[p.feature].name, "bin": schema[p.feature].bin_label(p.bin)}
                       for p in anchor.predicates],
        "rule": anchor.describe(schema, class_names),
        "precision": None if est is None else {"mean": est.mean, "lower": est.lower, "n": est.n_samples},
        "coverage": coverage if coverage is not None else anchor.coverage,
        "certified": is_certified(anchor, config),
        "samples_drawn": anchor.samples_drawn,
        "config": config.to_json(),
        "seed": seed,
    }
    if extra:
        doc.update(extra)
    return doc


def dumps(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2)
