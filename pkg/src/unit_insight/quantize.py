"""K-means codebook learning, frame-to-unit assignment, and run-length
deduplication of unit sequences."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .rng import KMEANS_STREAM, make_rng
from .types import Codebook, DedupedSequence, FeatureMatrix, UnitSequence, ValidationError

_ASSIGN_BLOCK = 16384


@dataclass(frozen=True)
class KMeansConfig:
    k: int
    max_iters: int = 300
    tol: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValidationError("k must be positive")
        if self.max_iters < 1:
            raise ValidationError("max_iters must be positive")
        if self.tol < 0:
            raise ValidationError("tol must be non-negative")


def nearest_units(frames: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Index of the nearest centroid per frame; ties go to the lowest id."""
    out = np.empty(frames.shape[0], dtype=np.int64)
    for lo in range(0, frames.shape[0], _ASSIGN_BLOCK):
        hi = min(lo + _ASSIGN_BLOCK, frames.shape[0])
        d = cdist(frames[lo:hi], centroids, "sqeuclidean")
        out[lo:hi] = np.argmin(d, axis=1)
    return out


def _plus_plus_init(frames: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Distance-weighted greedy seeding: each new center is drawn with
    probability proportional to squared distance from the chosen set."""
    n = frames.shape[0]
    centers = np.empty((k, frames.shape[1]), dtype=np.float64)
    centers[0] = frames[int(rng.integers(n))]
    d2 = cdist(frames, centers[:1], "sqeuclidean")[:, 0]
    for i in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            # remaining points coincide with chosen centers; pick uniformly
            idx = int(rng.integers(n))
        else:
            r = rng.random() * total
            idx = int(np.searchsorted(np.cumsum(d2), r, side="right").clip(0, n - 1))
        centers[i] = frames[idx]
        d2 = np.minimum(d2, cdist(frames, centers[i : i + 1], "sqeuclidean")[:, 0])
    return centers


def kmeans_fit(frames: np.ndarray, cfg: KMeansConfig) -> Codebook:
    """Lloyd iterations from distance-weighted seeding, deterministic per seed.

    Stops when the relative SSE improvement drops below cfg.tol or after
    cfg.max_iters. An empty cluster is repaired by relocating its centroid to
    the point currently farthest from its own centroid (one point per empty
    cluster per iteration), which keeps K fixed and never increases SSE.
    """
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 2 or frames.shape[0] == 0:
        raise ValidationError("training frames must be a non-empty 2-D matrix")
    if not np.all(np.isfinite(frames)):
        raise ValidationError("non-finite training frame")
    n = frames.shape[0]
    if n < cfg.k:
        raise ValidationError(f"cannot fit k={cfg.k} clusters to {n} frames")

    rng = make_rng(cfg.seed, KMEANS_STREAM)
    centers = _plus_plus_init(frames, cfg.k, rng)

    prev_sse = np.inf
    assign = np.zeros(n, dtype=np.int64)
    for _ in range(cfg.max_iters):
        assign = nearest_units(frames, centers)
        diff = frames - centers[assign]
        d2 = np.einsum("ij,ij->i", diff, diff)

        counts = np.bincount(assign, minlength=cfg.k)
        for empty in np.flatnonzero(counts == 0):
            eligible = counts[assign] > 1  # never empty a singleton cluster
            if not np.any(eligible):
                break
            victim = int(np.argmax(np.where(eligible, d2, -1.0)))
            counts[assign[victim]] -= 1
            counts[empty] += 1
            centers[empty] = frames[victim]
            assign[victim] = empty
            d2[victim] = 0.0

        sse = float(d2.sum())
        assert sse <= prev_sse * (1 + 1e-12) + 1e-12  # Lloyd steps never increase SSE
        done = np.isfinite(prev_sse) and prev_sse - sse < cfg.tol * max(prev_sse, 1e-300)
        prev_sse = sse
        if done:
            break

        sums = np.zeros_like(centers)
        np.add.at(sums, assign, frames)
        centers = sums / counts[:, None]

    counts = np.bincount(assign, minlength=cfg.k)
    centers = _separate_duplicates(centers)
    return Codebook(centers, counts, source_tag=f"kmeans(k={cfg.k},seed={cfg.seed})")


def kmeans_fit_standardized(frames: np.ndarray, cfg: KMeansConfig) -> Codebook:
    """Cluster per-dimension standardized frames, then report each cluster's
    centroid as the mean of its raw member frames, so downstream assignment
    needs no scaling state."""
    frames = np.asarray(frames, dtype=np.float64)
    scaled, _, _ = standardize(frames)
    scaled_cb = kmeans_fit(scaled, cfg)
    assign = nearest_units(scaled, scaled_cb.centroids)
    counts = np.bincount(assign, minlength=cfg.k)
    sums = np.zeros((cfg.k, frames.shape[1]))
    np.add.at(sums, assign, frames)
    centers = sums / np.maximum(counts, 1)[:, None]
    centers = _separate_duplicates(centers)
    return Codebook(centers, counts, source_tag=f"kmeans-std(k={cfg.k},seed={cfg.seed})")


def _separate_duplicates(centers: np.ndarray) -> np.ndarray:
    """Nudge exactly-coincident centroids apart so the codebook stays valid."""
    centers = centers.copy()
    seen: set[bytes] = set()
    for i in range(centers.shape[0]):
        key = centers[i].tobytes()
        while key in seen:
            centers[i, 0] = np.nextafter(centers[i, 0], np.inf)
            key = centers[i].tobytes()
        seen.add(key)
    return centers


def kmeans_sse(frames: np.ndarray, cb: Codebook) -> float:
    assign = nearest_units(frames, cb.centroids)
    diff = frames - cb.centroids[assign]
    return float(np.einsum("ij,ij->i", diff, diff).sum())


def quantize(m: FeatureMatrix, cb: Codebook) -> UnitSequence:
    """Map each frame to its nearest centroid under Euclidean distance."""
    if m.dim != cb.dim:
        raise ValidationError(f"feature dim {m.dim} does not match codebook dim {cb.dim}")
    return UnitSequence(m.utterance_id, nearest_units(m.data, cb.centroids))


def deduplicate(z: UnitSequence) -> DedupedSequence:
    """Collapse adjacent repeats into (unit, duration) runs."""
    units = z.units
    if units.size == 0:
        return DedupedSequence(z.utterance_id, units.copy(), units.copy())
    boundaries = np.flatnonzero(np.diff(units)) + 1
    starts = np.concatenate(([0], boundaries))
    ends = np.concatenate((boundaries, [units.size]))
    return DedupedSequence(z.utterance_id, units[starts], ends - starts)


def reduplicate(d: DedupedSequence) -> UnitSequence:
    """Expand (unit, duration) runs back to per-frame units."""
    return UnitSequence(d.utterance_id, np.repeat(d.units, d.durations))


def standardize(frames: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-dimension zero-mean unit-variance scaling; returns (scaled, mean, std)."""
    mean = frames.mean(axis=0)
    std = frames.std(axis=0)
    std = np.where(std == 0, 1.0, std)
    return (frames - mean) / std, mean, std
