"""Exact 2-D t-SNE for codebook centroids.

Quadratic-cost implementation: Gaussian input affinities with per-point
bandwidths found by binary search, Student-t output kernel, plain momentum
gradient descent with early exaggeration. Intended for at most a few
thousand points, which covers any realistic codebook.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .rng import TSNE_STREAM, make_rng
from .types import Codebook, ValidationError

_EXAGGERATION = 12.0
_EXAGGERATION_ITERS = 250
_MOMENTUM_EARLY = 0.5
_MOMENTUM_LATE = 0.8
_LEARNING_RATE = 200.0
_P_FLOOR = 1e-12
_PERPLEXITY_TOL = 1e-4
_MAX_BISECTIONS = 200


@dataclass
class Embedding2D:
    """2-D projection of codebook centroids plus optimization diagnostics."""

    points: np.ndarray
    seed: int
    final_kl: float
    kl_history: list[tuple[int, float]] = field(default_factory=list)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        if self.points.ndim != 2 or self.points.shape[1] != 2:
            raise ValidationError("embedding must be K x 2")
        if not np.all(np.isfinite(self.points)):
            raise ValidationError("non-finite embedding coordinate")


def conditional_affinities(
    sq_dists: np.ndarray, perplexity: float
) -> tuple[np.ndarray, np.ndarray]:
    """Row-stochastic Gaussian affinities whose rows hit the requested
    perplexity; returns (P_conditional, per-point precisions)."""
    n = sq_dists.shape[0]
    target = float(perplexity)
    p = np.zeros((n, n))
    betas = np.ones(n)
    for i in range(n):
        d = np.delete(sq_dists[i], i)
        beta, row = _search_beta(d, target)
        betas[i] = beta
        p[i, :i] = row[:i]
        p[i, i + 1 :] = row[i:]
    return p, betas


def _row_perplexity(d: np.ndarray, beta: float) -> tuple[float, np.ndarray]:
    w = np.exp(-d * beta)
    total = w.sum()
    if total <= 0:
        return 1.0, np.full_like(d, 1.0 / d.size)
    row = w / total
    nz = row[row > 0]
    entropy = float(-(nz * np.log(nz)).sum())
    return float(np.exp(entropy)), row


def _search_beta(d: np.ndarray, target: float) -> tuple[float, np.ndarray]:
    """Bisection on the Gaussian precision until the row perplexity matches
    the target within tolerance. Perplexity decreases monotonically in beta."""
    beta, lo, hi = 1.0, 0.0, np.inf
    perp, row = _row_perplexity(d, beta)
    for _ in range(_MAX_BISECTIONS):
        if abs(perp - target) < _PERPLEXITY_TOL:
            break
        if perp > target:
            lo = beta
            beta = beta * 2.0 if not np.isfinite(hi) else (beta + hi) / 2.0
        else:
            hi = beta
            beta = beta / 2.0 if lo == 0.0 else (beta + lo) / 2.0
        perp, row = _row_perplexity(d, beta)
    return beta, row


def joint_affinities(sq_dists: np.ndarray, perplexity: float) -> np.ndarray:
    """Symmetrized and normalized affinities with a small positive floor."""
    p_cond, _ = conditional_affinities(sq_dists, perplexity)
    n = sq_dists.shape[0]
    p = (p_cond + p_cond.T) / (2.0 * n)
    return np.maximum(p, _P_FLOOR)


def _student_t_q(y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    sq = squareform(pdist(y, "sqeuclidean"))
    num = 1.0 / (1.0 + sq)
    np.fill_diagonal(num, 0.0)
    q = np.maximum(num / num.sum(), _P_FLOOR)
    return q, num


def kl_divergence(p: np.ndarray, q: np.ndarray) -> float:
    mask = p > _P_FLOOR
    return float((p[mask] * np.log(p[mask] / q[mask])).sum())


def tsne_embed(
    cb: Codebook,
    perplexity: float = 30.0,
    iters: int = 1000,
    seed: int = 0,
    metric: str = "euclidean",
) -> Embedding2D:
    """Project centroids to 2-D, one point per unit, deterministically per seed.

    Early exaggeration multiplies the affinities by 12 for the first 250
    iterations; momentum steps up from 0.5 to 0.8 when it ends. The metric
    for input distances is Euclidean by default, with cosine available.
    """
    k = cb.k
    if k < 4:
        raise ValidationError(f"need at least 4 centroids to embed, got {k}")
    if iters < 1:
        raise ValidationError("iters must be positive")
    if metric not in ("euclidean", "cosine"):
        raise ValidationError(f"unknown t-SNE metric {metric!r}")

    perplexity = min(float(perplexity), (k - 1) / 3.0)
    if metric == "euclidean":
        sq = squareform(pdist(cb.centroids, "sqeuclidean"))
    else:
        cos = squareform(pdist(cb.centroids, "cosine"))
        sq = cos**2

    p = joint_affinities(sq, perplexity)
    rng = make_rng(seed, TSNE_STREAM)
    y = rng.standard_normal((k, 2)) * 1e-4
    velocity = np.zeros_like(y)
    history: list[tuple[int, float]] = []

    p_run = p * _EXAGGERATION
    kl = np.inf
    for it in range(iters):
        if it == min(_EXAGGERATION_ITERS, iters):
            p_run = p
        q, num = _student_t_q(y)
        grad = _gradient(p_run, q, num, y)
        momentum = _MOMENTUM_EARLY if it < _EXAGGERATION_ITERS else _MOMENTUM_LATE
        velocity = momentum * velocity - _LEARNING_RATE * grad
        y = y + velocity
        y = y - y.mean(axis=0)
        if it >= _EXAGGERATION_ITERS and (it % 50 == 0 or it == iters - 1):
            q, _ = _student_t_q(y)
            kl = kl_divergence(p, q)
            history.append((it, kl))
    if not np.isfinite(kl):
        q, _ = _student_t_q(y)
        kl = kl_divergence(p, q)
        history.append((iters - 1, kl))
    return Embedding2D(points=y, seed=seed, final_kl=kl, kl_history=history)


def _gradient(p: np.ndarray, q: np.ndarray, num: np.ndarray, y: np.ndarray) -> np.ndarray:
    coeff = (p - q) * num
    return 4.0 * (coeff.sum(axis=1)[:, None] * y - coeff @ y)
