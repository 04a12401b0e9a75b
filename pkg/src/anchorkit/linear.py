"""Linear LIME baseline: a sparse, kernel-weighted ridge surrogate.

Perturbations are unconditioned draws from the row sampler.  Each draw is
mapped to a binary vector (bit ``i`` set when the draw shares the explained
instance's bin on feature ``i``) and weighted by an exponential kernel of
its Hamming-fraction distance.  The regression target is one-vs-rest:
``1`` when the black box gives the draw the same label as the instance.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .data import Instance, as_matrix
from .errors import ConfigError

NOT_TARGET = -1


def _disc(x) -> np.ndarray:
    return x.disc if isinstance(x, Instance) else np.asarray(x, dtype=np.int64)


def to_interpretable(z, x) -> np.ndarray:
    """Bits of ``z`` (one row or a matrix) relative to ``x``: 1 where the bins agree."""
    xd = _disc(x)
    if isinstance(z, Instance):
        return (z.disc == xd).astype(np.int64)
    Z = np.asarray(z, dtype=np.int64)
    return (Z == xd).astype(np.int64)


def hamming_distance(z, x) -> np.ndarray | float:
    """Fraction of features on which ``z`` and ``x`` fall in different bins."""
    xd = np.ascontiguousarray(_disc(x), dtype=np.int64)
    if isinstance(z, Instance) or np.ndim(z) == 1:
        zd = _disc(z)
        return float((zd != xd).mean()) if len(xd) else 0.0
    return kernels.hamming_fraction(as_matrix(z), xd)


def kernel_weight(distance, sigma: float):
    """``exp(-d**2 / sigma**2)``."""
    if sigma <= 0:
        raise ConfigError("kernel width must be positive")
    return np.exp(-np.square(distance) / sigma ** 2)


def weighted_ridge(B: np.ndarray, y: np.ndarray, w: np.ndarray, lam: float) -> tuple[float, np.ndarray]:
    """Minimise ``sum w (y - b0 - B @ coef)**2 + lam * |coef|**2``; the intercept is not penalised."""
    B = np.asarray(B, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    sw = w.sum()
    if B.shape[1] == 0 or sw <= 0:
        return (float(np.dot(w, y) / sw) if sw > 0 else float(y.mean())), np.zeros(B.shape[1])
    mu_b = w @ B / sw
    mu_y = float(w @ y / sw)
    Bc = B - mu_b
    A = Bc.T @ (Bc * w[:, None]) + lam * np.eye(B.shape[1])
    rhs = Bc.T @ (w * (y - mu_y))
    coef = np.linalg.lstsq(A, rhs, rcond=None)[0] if lam == 0 else np.linalg.solve(A, rhs)
    return mu_y - float(mu_b @ coef), coef


@dataclass(frozen=True, eq=False)
class LinearExplanation:
    target_class: int
    weights: np.ndarray
    intercept: float
    kernel_width: float
    n_features_kept: int
    x_disc: np.ndarray

    def surrogate(self, Z) -> np.ndarray:
        return self.intercept + to_interpretable(as_matrix(Z), self.x_disc) @ self.weights

    def local_predict(self, Z) -> np.ndarray:
        """``target_class`` where the surrogate is >= 0.5, else :data:`NOT_TARGET`."""
        return np.where(self.surrogate(Z) >= 0.5, self.target_class, NOT_TARGET)

    def to_json(self, schema=None, tau: float | None = None) -> dict:
        names = [f.name for f in schema] if schema is not None else [str(j) for j in range(len(self.weights))]
        doc = {
            "target_class": self.target_class,
            "kernel_width": self.kernel_width,
            "weights": [{"feature": names[j], "weight": float(self.weights[j])}
                        for j in np.flatnonzero(self.weights)],
            "intercept": self.intercept,
        }
        if tau is not None:
            doc["tau"] = tau
        return doc


@dataclass(frozen=True, eq=False)
class LimeRegion:
    """A linear explanation together with its coverage radius ``tau``."""

    explanation: LinearExplanation
    tau: float

    def covers(self, Z) -> np.ndarray:
        return lime_covers(self.explanation.x_disc, Z, self.tau)

    def agrees(self, Z, labels) -> np.ndarray:
        """One-vs-rest agreement of the surrogate's local prediction with the true labels."""
        t = self.explanation.target_class
        local_is_target = self.explanation.local_predict(Z) == t
        return local_is_target == (np.asarray(labels) == t)


def lime_covers(x, z, tau: float):
    """``distance(x, z) <= tau``; ``z`` may be one instance or a matrix."""
    d = hamming_distance(z, x)
    return np.asarray(d) <= tau + 1e-12 if np.ndim(d) else bool(d <= tau + 1e-12)


def lime_local_predict(expl: LinearExplanation, z, x=None) -> int:
    """Local prediction for one instance ``z`` (``x`` defaults to the explained instance)."""
    if x is not None and not np.array_equal(_disc(x), expl.x_disc):
        raise ConfigError("explanation was fitted around a different instance")
    return int(expl.local_predict(_disc(z)[None, :])[0])


def _sse(B, y, w, lam, cols):
    b0, coef = weighted_ridge(B[:, cols], y, w, lam)
    resid = y - b0 - B[:, cols] @ coef
    return float(w @ resid ** 2)


def explain_linear(f, x, sampler, n_samples: int = 5000, sigma: float = 0.75, K_feat: int = 5,
                   rng: np.random.Generator | None = None, lam: float = 0.01) -> LinearExplanation:
    """Fit the sparse surrogate around ``x``; features kept by forward selection.

    Forward selection adds, one at a time, the bit whose inclusion gives the
    lowest weighted residual sum of squares (ties to the lowest index), up to
    ``K_feat`` bits; the final model is refit on the kept bits.
    """
    if K_feat < 0:
        raise ConfigError("K_feat must be >= 0")
    if n_samples < K_feat + 1:
        raise ConfigError("n_samples must be at least K_feat + 1")
    rng = rng if rng is not None else np.random.default_rng(0)
    xd = np.ascontiguousarray(_disc(x), dtype=np.int64)
    target = int(np.asarray(f.predict_batch(xd[None, :]))[0])
    Z = sampler.draw(xd, [], n_samples, rng)
    y = (np.asarray(f.predict_batch(Z)) == target).astype(float)
    B = to_interpretable(Z, xd).astype(float)
    w = kernel_weight(kernels.hamming_fraction(Z, xd), sigma)
    F = B.shape[1]
    weights = np.zeros(F)
    if (B == B[0]).all():
        b0, _ = weighted_ridge(B[:, :0], y, w, lam)
        return LinearExplanation(target, weights, b0, sigma, K_feat, xd)
    kept: list[int] = []
    for _ in range(min(K_feat, F)):
        rest = [j for j in range(F) if j not in kept]
        scores = [_sse(B, y, w, lam, kept + [j]) for j in rest]
        kept.append(rest[int(np.argmin(scores))])
    kept.sort()
    b0, coef = weighted_ridge(B[:, kept], y, w, lam)
    weights[kept] = coef
    return LinearExplanation(target, weights, b0, sigma, K_feat, xd)
