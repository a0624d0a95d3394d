"""Bounded Voronoi partition of embedded unit positions.

Each cell is carved directly from the bounding rectangle by clipping against
the perpendicular bisector of the owning site and every relevant neighbor,
visiting neighbors nearest-first so clipping stops once no closer neighbor
can cut the remaining polygon. Cells are convex, tile the box exactly, and
carry their site strictly inside.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .rng import VORONOI_STREAM, make_rng
from .tsne import Embedding2D
from .types import ValidationError

_AREA_RTOL = 1e-6


@dataclass
class VoronoiDiagram:
    """Convex cell polygons (CCW vertex rings) with their sites and the
    clipping rectangle (xmin, xmax, ymin, ymax)."""

    cells: list[np.ndarray]
    sites: np.ndarray
    bbox: tuple[float, float, float, float]

    def __post_init__(self):
        self.sites = np.asarray(self.sites, dtype=np.float64)
        if len(self.cells) != self.sites.shape[0]:
            raise ValidationError("one cell per site required")

    @property
    def bbox_area(self) -> float:
        xmin, xmax, ymin, ymax = self.bbox
        return (xmax - xmin) * (ymax - ymin)


def polygon_area(poly: np.ndarray) -> float:
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def clip_halfplane(poly: np.ndarray, point: np.ndarray, normal: np.ndarray) -> np.ndarray:
    """Keep the side of the line through `point` where (v - point) . normal <= 0."""
    if poly.shape[0] == 0:
        return poly
    side = (poly - point) @ normal
    keep = side <= 0.0
    if keep.all():
        return poly
    out = []
    n = poly.shape[0]
    for i in range(n):
        j = (i + 1) % n
        vi, vj = poly[i], poly[j]
        si, sj = side[i], side[j]
        if keep[i]:
            out.append(vi)
        if (si < 0.0) != (sj < 0.0) and si != sj:
            t = si / (si - sj)
            out.append(vi + t * (vj - vi))
    if not out:
        return np.empty((0, 2))
    ring = np.array(out)
    distinct = np.ones(ring.shape[0], dtype=bool)
    for i in range(ring.shape[0]):
        if np.array_equal(ring[i], ring[(i + 1) % ring.shape[0]]):
            distinct[(i + 1) % ring.shape[0]] = False
    return ring[distinct]


def voronoi(
    e: Embedding2D,
    bbox_margin: float = 0.05,
    bbox: tuple[float, float, float, float] | None = None,
) -> VoronoiDiagram:
    """Clip every site's region to the bounding box of the embedding,
    expanded by bbox_margin relative on each side (or to an explicit box).
    Coincident sites are separated by a tiny seeded jitter first."""
    sites = np.array(e.points, dtype=np.float64)
    n = sites.shape[0]
    if n < 2:
        raise ValidationError("need at least 2 sites")

    sites = _separate_sites(sites, e.seed)

    if bbox is None:
        xmin, ymin = sites.min(axis=0)
        xmax, ymax = sites.max(axis=0)
        w = max(xmax - xmin, 1e-9)
        h = max(ymax - ymin, 1e-9)
        bbox = (xmin - bbox_margin * w, xmax + bbox_margin * w,
                ymin - bbox_margin * h, ymax + bbox_margin * h)
    xmin, xmax, ymin, ymax = bbox
    if not (xmax > xmin and ymax > ymin):
        raise ValidationError(f"degenerate bounding box {bbox}")
    box = np.array([[xmin, ymin], [xmax, ymin], [xmax, ymax], [xmin, ymax]])

    dists = cdist(sites, sites)
    cells = []
    for i in range(n):
        order = np.argsort(dists[i], kind="stable")
        poly = box
        for j in order:
            if j == i:
                continue
            if poly.shape[0] == 0:
                break
            radius = float(np.sqrt(((poly - sites[i]) ** 2).sum(axis=1)).max())
            if dists[i, j] / 2.0 > radius:
                break  # no farther site can cut the remaining polygon
            midpoint = (sites[i] + sites[j]) / 2.0
            normal = sites[j] - sites[i]
            poly = clip_halfplane(poly, midpoint, normal)
        if poly.shape[0] < 3:
            raise ValidationError(f"site {i} produced a degenerate cell")
        cells.append(poly)
    return VoronoiDiagram(cells=cells, sites=sites, bbox=bbox)


def _separate_sites(sites: np.ndarray, seed: int) -> np.ndarray:
    rng = make_rng(seed, VORONOI_STREAM)
    for _ in range(16):
        _, first = np.unique(sites, axis=0, return_index=True)
        if first.size == sites.shape[0]:
            return sites
        dup = np.setdiff1d(np.arange(sites.shape[0]), first)
        sites = sites.copy()
        sites[dup] += rng.normal(0.0, 1e-9, (dup.size, 2))
    raise ValidationError("could not separate coincident sites")


def containing_cell(d: VoronoiDiagram, point: np.ndarray) -> int:
    """Index of the cell containing the point (nearest site by construction)."""
    return int(np.argmin(((d.sites - point) ** 2).sum(axis=1)))


def point_in_cell(d: VoronoiDiagram, cell_index: int, point: np.ndarray, atol: float = 1e-9) -> bool:
    poly = d.cells[cell_index]
    n = poly.shape[0]
    for i in range(n):
        a, b = poly[i], poly[(i + 1) % n]
        edge = b - a
        cross = edge[0] * (point[1] - a[1]) - edge[1] * (point[0] - a[0])
        if cross < -atol * max(1.0, float(np.abs(edge).max())):
            return False
    return True
