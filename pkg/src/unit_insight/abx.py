"""Discrimination error over discrete unit representations.

A triple (A, B, X) asks whether the representation puts the probe X closer
to the item A sharing its center phoneme than to the item B with a different
center, where all three share left/right phoneme context. The within
condition draws A, B, X from one speaker; the across condition draws A and B
from one speaker and X from another. Frame sequences are compared by dynamic
time warping over cosine distances between the frames' unit centroids.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import ABX_STREAM, make_rng
from .types import Codebook, LabelAlignment, SIL_LABEL, UnitSequence, ValidationError

_WITHIN = "within"
_ACROSS = "across"


@dataclass(frozen=True)
class AbxItem:
    """A maximal same-phoneme span with both neighbors present."""

    utterance_id: str
    start: int
    end: int
    phoneme: str
    left: str
    right: str
    speaker: str


def extract_items(
    phones: list[LabelAlignment], speakers: list[LabelAlignment]
) -> list[AbxItem]:
    """One item per interior phoneme segment; silence is never a center."""
    spk_by_id = {a.utterance_id: a for a in speakers}
    items = []
    for ph in phones:
        if ph.utterance_id not in spk_by_id:
            raise ValidationError(f"no speaker alignment for {ph.utterance_id!r}")
        spk = spk_by_id[ph.utterance_id]
        if len(spk) != len(ph):
            raise ValidationError(
                f"{ph.utterance_id!r}: phoneme alignment has {len(ph)} frames, "
                f"speaker alignment has {len(spk)}"
            )
        labels = ph.frame_labels
        boundaries = np.flatnonzero(np.diff(labels)) + 1
        starts = np.concatenate(([0], boundaries))
        ends = np.concatenate((boundaries, [len(labels)]))
        for seg in range(1, len(starts) - 1):
            center = ph.category_names[labels[starts[seg]]]
            if center == SIL_LABEL:
                continue
            items.append(
                AbxItem(
                    utterance_id=ph.utterance_id,
                    start=int(starts[seg]),
                    end=int(ends[seg]),
                    phoneme=center,
                    left=ph.category_names[labels[starts[seg - 1]]],
                    right=ph.category_names[labels[starts[seg + 1]]],
                    speaker=spk.label_at(int(starts[seg])),
                )
            )
    return items


def unit_cosine_distances(cb: Codebook) -> np.ndarray:
    """K x K matrix of 1 - cosine between centroids; exactly symmetric with
    an exactly zero diagonal."""
    norms = np.linalg.norm(cb.centroids, axis=1)
    zero = np.flatnonzero(norms == 0)
    if zero.size:
        raise ValidationError(f"zero-norm centroid(s) {zero.tolist()}: cosine undefined")
    unit = cb.centroids / norms[:, None]
    cos = np.clip(unit @ unit.T, -1.0, 1.0)
    dist = 1.0 - cos
    dist = (dist + dist.T) / 2.0
    np.fill_diagonal(dist, 0.0)
    return dist


def dtw_distance(a, b, cb: Codebook, unit_dists: np.ndarray | None = None) -> float:
    """Path-normalized warping cost between two frame-wise unit sequences.

    Cells cost 1 - cos between the frames' centroids; steps move down,
    right, or diagonally. Among minimal-cost warping paths the shortest is
    taken, and the cost is divided by that path's cell count.
    """
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if a.size == 0 or b.size == 0:
        raise ValidationError("cannot warp an empty sequence")
    if unit_dists is None:
        unit_dists = unit_cosine_distances(cb)
    cost = unit_dists[np.ix_(a, b)]
    total, cells = _dtw_accumulate(cost)
    return total / cells


def _dtw_accumulate(cost: np.ndarray) -> tuple[float, int]:
    """Lexicographic DP: minimize accumulated cost, then path cell count."""
    m, n = cost.shape
    acc = np.empty((m, n))
    length = np.empty((m, n), dtype=np.int64)
    acc[0, 0] = cost[0, 0]
    length[0, 0] = 1
    for j in range(1, n):
        acc[0, j] = acc[0, j - 1] + cost[0, j]
        length[0, j] = j + 1
    for i in range(1, m):
        acc[i, 0] = acc[i - 1, 0] + cost[i, 0]
        length[i, 0] = i + 1
        row_a, row_l = acc[i], length[i]
        up_a, up_l = acc[i - 1], length[i - 1]
        for j in range(1, n):
            best_a, best_l = up_a[j - 1], up_l[j - 1]  # diagonal
            if up_a[j] < best_a or (up_a[j] == best_a and up_l[j] < best_l):
                best_a, best_l = up_a[j], up_l[j]
            if row_a[j - 1] < best_a or (row_a[j - 1] == best_a and row_l[j - 1] < best_l):
                best_a, best_l = row_a[j - 1], row_l[j - 1]
            row_a[j] = best_a + cost[i, j]
            row_l[j] = best_l + 1
    return float(acc[m - 1, n - 1]), int(length[m - 1, n - 1])


@dataclass
class AbxResult:
    score: float
    num_triples: int
    num_cells: int


def abx_score(
    items: list[AbxItem],
    mode: str,
    units: list[UnitSequence],
    cb: Codebook,
    max_triples: int = 500,
    seed: int = 0,
    dedupe: bool = False,
) -> float:
    """Discrimination error percentage (lower is better)."""
    return abx_evaluate(items, mode, units, cb, max_triples, seed, dedupe).score


def abx_evaluate(
    items: list[AbxItem],
    mode: str,
    units: list[UnitSequence],
    cb: Codebook,
    max_triples: int = 500,
    seed: int = 0,
    dedupe: bool = False,
) -> AbxResult:
    """Score all (A, B, X) cells and aggregate.

    Triples are averaged within each (a, b, context, speaker-config) cell,
    cells are averaged after symmetrizing over the (a, b) phoneme pair, and
    cells with more than max_triples candidate triples are subsampled with
    the given seed. Ties in the two distances score one half.
    """
    if mode not in (_WITHIN, _ACROSS):
        raise ValidationError(f"unknown ABX mode {mode!r}")
    if max_triples < 1:
        raise ValidationError("max_triples must be positive")
    by_utt = {z.utterance_id: z for z in units}
    missing = sorted({it.utterance_id for it in items} - set(by_utt))
    if missing:
        raise ValidationError(f"no unit sequences for {missing}")

    seqs = []
    for it in items:
        z = by_utt[it.utterance_id]
        if it.end > len(z):
            raise ValidationError(f"item span [{it.start}, {it.end}) exceeds {it.utterance_id!r}")
        s = z.units[it.start : it.end]
        if dedupe:
            s = s[np.concatenate(([True], s[1:] != s[:-1]))] if s.size else s
        seqs.append(s)

    groups: dict[tuple, list[int]] = {}
    for idx, it in enumerate(items):
        groups.setdefault((it.phoneme, it.left, it.right, it.speaker), []).append(idx)

    unit_dists = unit_cosine_distances(cb)
    cache: dict[tuple[int, int], float] = {}

    def distance(x: int, y: int) -> float:
        key = (x, y) if x <= y else (y, x)
        if key not in cache:
            cache[key] = dtw_distance(seqs[key[0]], seqs[key[1]], cb, unit_dists)
        return cache[key]

    rng = make_rng(seed, ABX_STREAM)
    cell_errors: dict[tuple, list[float]] = {}
    total_triples = 0

    for (a, left, right, spk_a), g_a in sorted(groups.items()):
        for (b, l2, r2, spk_b), g_b in sorted(groups.items()):
            if b == a or (l2, r2) != (left, right) or spk_b != spk_a:
                continue
            if mode == _WITHIN:
                x_pools = {spk_a: g_a} if len(g_a) >= 2 else {}
            else:
                x_pools = {
                    spk_x: g_x
                    for (p, lx, rx, spk_x), g_x in sorted(groups.items())
                    if p == a and (lx, rx) == (left, right) and spk_x != spk_a
                }
            for spk_x, g_x in x_pools.items():
                err, n = _score_cell(g_a, g_b, g_x, mode, distance, max_triples, rng)
                if n == 0:
                    continue
                total_triples += n
                sym_key = (tuple(sorted((a, b))), left, right, spk_a, spk_x)
                cell_errors.setdefault(sym_key, []).append(err)

    if not cell_errors:
        raise ValidationError("no valid ABX triples under the requested mode")
    score = float(np.mean([np.mean(v) for v in cell_errors.values()]))
    return AbxResult(100.0 * score, total_triples, len(cell_errors))


def _score_cell(g_a, g_b, g_x, mode, distance, max_triples, rng) -> tuple[float, int]:
    """Mean triple error in one cell; X pool equals the A pool in within
    mode, where A and X must additionally be distinct items."""
    same_pool = mode == _WITHIN
    n_all = len(g_a) * len(g_b) * (len(g_x) - (1 if same_pool else 0))
    if n_all <= 0:
        return 0.0, 0
    if n_all <= max_triples:
        triples = [
            (ia, ib, ix)
            for ia in g_a
            for ib in g_b
            for ix in g_x
            if not (same_pool and ix == ia)
        ]
    else:
        triples = []
        while len(triples) < max_triples:
            ia = g_a[int(rng.integers(len(g_a)))]
            ib = g_b[int(rng.integers(len(g_b)))]
            ix = g_x[int(rng.integers(len(g_x)))]
            if same_pool and ix == ia:
                continue
            triples.append((ia, ib, ix))

    errs = 0.0
    for ia, ib, ix in triples:
        da = distance(ix, ia)
        db = distance(ix, ib)
        errs += 1.0 if da > db else (0.5 if da == db else 0.0)
    return errs / len(triples), len(triples)
