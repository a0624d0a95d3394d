"""Codebook reduction: re-clustering centroids with k-means, agglomerating
them under Euclidean distance, or agglomerating under the swap-rate-weighted
distance

    D(i, j) = L2(c_i, c_j) * (1 - (swap(i, j) + swap(j, i)) / 2)

so that unit pairs that frequently substitute for one another merge early.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .quantize import KMeansConfig, kmeans_fit, nearest_units, _separate_duplicates
from .redundancy import CRMatrix
from .types import Codebook, UnitSequence, ValidationError

METHOD_KK = "kk"
METHOD_KH = "kh"
METHOD_KWH = "kwh"


@dataclass
class MergeMap:
    """Assignment of every source unit to a merged unit, onto [0, k_target)."""

    mapping: np.ndarray
    method: str

    def __post_init__(self):
        self.mapping = np.asarray(self.mapping, dtype=np.int64)
        if self.mapping.ndim != 1 or self.mapping.size < 1:
            raise ValidationError("mapping must be a non-empty 1-D array")
        k_target = self.k_target
        present = np.unique(self.mapping)
        if present[0] < 0 or present.size != k_target:
            raise ValidationError("mapping must cover [0, k_target) with no gaps")

    @property
    def k_source(self) -> int:
        return self.mapping.size

    @property
    def k_target(self) -> int:
        return int(self.mapping.max()) + 1


@dataclass(frozen=True)
class AgglomerationTrace:
    """Merge audit: step s fused the groups holding source units (i, j),
    identified by their lowest member index at the time of the merge."""

    steps: tuple[tuple[int, int], ...]


def average_linkage_merge(
    dist: np.ndarray, target_k: int
) -> tuple[np.ndarray, AgglomerationTrace]:
    """Bottom-up agglomeration on a fixed distance matrix.

    Group-to-group distance is the mean of the initial pairwise distances
    between members (updated with the Lance-Williams average-linkage rule).
    The closest pair merges each step; ties pick the lexicographically
    smallest slot pair, and a merged group keeps its lower slot, so runs are
    deterministic. Returns labels in [0, target_k) numbered by ascending
    surviving slot, and the merge trace.
    """
    dist = np.asarray(dist, dtype=np.float64)
    k = dist.shape[0]
    if dist.shape != (k, k):
        raise ValidationError("distance matrix must be square")
    if not 1 <= target_k < k:
        raise ValidationError(f"target_k must be in [1, {k}), got {target_k}")

    work = dist.copy()
    np.fill_diagonal(work, np.inf)
    active = np.ones(k, dtype=bool)
    sizes = np.ones(k, dtype=np.int64)
    members: list[list[int]] = [[i] for i in range(k)]
    steps = []

    for _ in range(k - target_k):
        masked = np.where(active[:, None] & active[None, :], work, np.inf)
        masked[np.tril_indices(k)] = np.inf
        flat = int(np.argmin(masked))
        i, j = divmod(flat, k)
        steps.append((i, j))

        ni, nj = sizes[i], sizes[j]
        merged_row = (ni * work[i] + nj * work[j]) / (ni + nj)
        work[i, :] = merged_row
        work[:, i] = merged_row
        work[i, i] = np.inf
        active[j] = False
        sizes[i] = ni + nj
        members[i].extend(members[j])
        members[j] = []

    labels = np.empty(k, dtype=np.int64)
    for new_id, slot in enumerate(np.flatnonzero(active)):
        labels[members[slot]] = new_id
    return labels, AgglomerationTrace(tuple(steps))


def _merged_codebook(cb: Codebook, labels: np.ndarray, method: str) -> tuple[Codebook, MergeMap]:
    """Occupancy-weighted member means become the merged centroids."""
    k_target = int(labels.max()) + 1
    weights = np.maximum(cb.counts.astype(np.float64), 1.0)
    sums = np.zeros((k_target, cb.dim))
    mass = np.zeros(k_target)
    np.add.at(sums, labels, cb.centroids * weights[:, None])
    np.add.at(mass, labels, weights)
    centers = _separate_duplicates(sums / mass[:, None])
    counts = np.zeros(k_target, dtype=np.int64)
    np.add.at(counts, labels, cb.counts)
    merged = Codebook(centers, counts, source_tag=f"{method}(from={cb.k},to={k_target})")
    return merged, MergeMap(labels, method)


def merge_kk(cb: Codebook, target_k: int, seed: int = 0) -> tuple[Codebook, MergeMap]:
    """Second k-means over the centroid rows; each source unit maps to the
    sub-cluster its centroid lands in."""
    if not 1 <= target_k < cb.k:
        raise ValidationError(f"target_k must be in [1, {cb.k}), got {target_k}")
    sub = kmeans_fit(cb.centroids, KMeansConfig(k=target_k, seed=seed))
    labels = nearest_units(cb.centroids, sub.centroids)
    counts = np.zeros(target_k, dtype=np.int64)
    np.add.at(counts, labels, cb.counts)
    merged = Codebook(
        sub.centroids, counts, source_tag=f"{METHOD_KK}(from={cb.k},to={target_k},seed={seed})"
    )
    return merged, MergeMap(labels, METHOD_KK)


def merge_kk_weighted(cb: Codebook, target_k: int, seed: int = 0) -> tuple[Codebook, MergeMap]:
    """Occupancy-weighted variant: each centroid participates with its
    training mass by sample replication of the mean update."""
    if not 1 <= target_k < cb.k:
        raise ValidationError(f"target_k must be in [1, {cb.k}), got {target_k}")
    weights = np.maximum(cb.counts, 1)
    expanded = np.repeat(cb.centroids, weights, axis=0)
    sub = kmeans_fit(expanded, KMeansConfig(k=target_k, seed=seed))
    labels = nearest_units(cb.centroids, sub.centroids)
    if np.unique(labels).size != target_k:
        # a sub-center may capture no source centroid; fall back to grouping
        return merge_kk(cb, target_k, seed)
    counts = np.zeros(target_k, dtype=np.int64)
    np.add.at(counts, labels, cb.counts)
    merged = Codebook(sub.centroids, counts, source_tag=f"kkw(from={cb.k},to={target_k})")
    return merged, MergeMap(labels, METHOD_KK)


def merge_kh(cb: Codebook, target_k: int) -> tuple[Codebook, MergeMap]:
    """Average-linkage agglomeration of centroids under Euclidean distance."""
    if not 1 <= target_k < cb.k:
        raise ValidationError(f"target_k must be in [1, {cb.k}), got {target_k}")
    dist = squareform(pdist(cb.centroids, "euclidean"))
    labels, _ = average_linkage_merge(dist, target_k)
    return _merged_codebook(cb, labels, METHOD_KH)


def merge_kwh(cb: Codebook, cr: CRMatrix, target_k: int) -> tuple[Codebook, MergeMap]:
    """Agglomeration under the swap-weighted distance: mutual swap rates
    shrink a pair's effective distance, down to zero for always-swapping
    pairs, which therefore merge before anything else."""
    if not 1 <= target_k < cb.k:
        raise ValidationError(f"target_k must be in [1, {cb.k}), got {target_k}")
    if cr.k_ext < cb.k:
        raise ValidationError(f"swap matrix covers {cr.k_ext} units, codebook has {cb.k}")
    labels, _ = average_linkage_merge(swap_weighted_distance(cb, cr), target_k)
    return _merged_codebook(cb, labels, METHOD_KWH)


def swap_weighted_distance(cb: Codebook, cr: CRMatrix) -> np.ndarray:
    """Pairwise L2 between centroids, scaled by one minus the mean of the
    two directed swap rates."""
    rates = cr.swap_rate[: cb.k, : cb.k]
    if np.any(rates < 0) or np.any(rates > 1):
        raise ValidationError("swap rates must lie in [0, 1]")
    l2 = squareform(pdist(cb.centroids, "euclidean"))
    bracket = 1.0 - (rates + rates.T) / 2.0
    return l2 * bracket


def relabel_units(zs: list[UnitSequence], m: MergeMap) -> list[UnitSequence]:
    """Apply a merge map element-wise to unit sequences."""
    out = []
    for z in zs:
        if len(z) and int(z.units.max()) >= m.k_source:
            raise ValidationError(
                f"{z.utterance_id!r} holds unit {int(z.units.max())}, "
                f"but the merge map covers only [0, {m.k_source})"
            )
        out.append(UnitSequence(z.utterance_id, m.mapping[z.units]))
    return out
