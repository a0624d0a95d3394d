"""Unit/attribute correlation: co-occurrence counting, V-measure, and
per-unit majority labels."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .types import LabelAlignment, UnitSequence, UNSEEN_LABEL, ValidationError


@dataclass
class ContingencyTable:
    """Frame-level co-occurrence counts, units as rows and categories as columns."""

    counts: np.ndarray
    category_names: list[str]

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.ndim != 2:
            raise ValidationError("contingency counts must be 2-D")
        if np.any(self.counts < 0):
            raise ValidationError("negative co-occurrence count")
        if self.counts.shape[1] != len(self.category_names):
            raise ValidationError("category_names length must match column count")
        if self.total < 1:
            raise ValidationError("contingency table is empty")

    @property
    def unit_totals(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def category_totals(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class VMeasureResult:
    """Homogeneity, completeness and their harmonic mean, on a 0..100 scale."""

    homogeneity: float
    completeness: float
    v: float


def build_contingency(
    zs: list[UnitSequence],
    labels: list[LabelAlignment],
    num_units: int | None = None,
    exclude: frozenset[str] | set[str] = frozenset(),
) -> ContingencyTable:
    """Tally unit/category pairs frame by frame across paired utterances.

    Sequences and alignments are matched on utterance_id and must cover the
    same frame count. Category columns are the union of the alignments'
    category names in sorted order. Frames whose category is in `exclude`
    are skipped.
    """
    by_id = {a.utterance_id: a for a in labels}
    missing = [z.utterance_id for z in zs if z.utterance_id not in by_id]
    unmatched = sorted(set(by_id) - {z.utterance_id for z in zs})
    if missing or unmatched:
        raise ValidationError(
            f"utterances without a pairing: units without labels {missing}, "
            f"labels without units {unmatched}"
        )

    names = sorted({n for a in labels for n in a.category_names} - set(exclude))
    col = {n: i for i, n in enumerate(names)}
    if num_units is None:
        num_units = 1 + max((int(z.units.max()) for z in zs if len(z)), default=0)

    counts = np.zeros((num_units, len(names)), dtype=np.int64)
    for z in zs:
        a = by_id[z.utterance_id]
        if len(a) != len(z):
            raise ValidationError(
                f"{z.utterance_id!r}: {len(z)} unit frames vs {len(a)} label frames"
            )
        cats = np.array([col.get(n, -1) for n in a.category_names], dtype=np.int64)
        frame_cols = cats[a.frame_labels]
        keep = frame_cols >= 0
        np.add.at(counts, (z.units[keep], frame_cols[keep]), 1)
    return ContingencyTable(counts, names)


def _entropy(totals: np.ndarray, n: float, base: float) -> float:
    p = totals[totals > 0] / n
    return float(-(p * np.log(p)).sum() / math.log(base))


def _conditional_entropy(counts: np.ndarray, given_totals: np.ndarray, n: float, base: float) -> float:
    # H(rows | columns) when given_totals are the column sums
    nz = counts > 0
    joint = counts[nz] / n
    cond = counts[nz] / np.broadcast_to(given_totals, counts.shape)[nz]
    return float(-(joint * np.log(cond)).sum() / math.log(base))


def v_measure(t: ContingencyTable, base: float = math.e) -> VMeasureResult:
    """Entropy-based agreement between units and categories.

    homogeneity = 1 - H(units | categories) / H(units)
    completeness = 1 - H(categories | units) / H(categories)
    v is their harmonic mean. Degenerate conventions: a zero marginal
    entropy makes its ratio 1; if both scores are 0 then v = 0. All three
    are reported on a 0..100 scale. The logarithm base cancels and is
    exposed only so tests can confirm that.
    """
    n = float(t.total)
    h_units = _entropy(t.unit_totals, n, base)
    h_cats = _entropy(t.category_totals, n, base)
    h_units_given = _conditional_entropy(t.counts, t.category_totals, n, base)
    h_cats_given = _conditional_entropy(t.counts.T, t.unit_totals, n, base)

    hom = 1.0 if h_units == 0.0 else 1.0 - h_units_given / h_units
    com = 1.0 if h_cats == 0.0 else 1.0 - h_cats_given / h_cats
    v = 0.0 if hom + com == 0.0 else 2.0 * hom * com / (hom + com)
    return VMeasureResult(100.0 * hom, 100.0 * com, 100.0 * v)


def majority_label(t: ContingencyTable) -> dict[int, str]:
    """Most frequent category per unit; ties prefer the lowest category id,
    units that never occur map to the reserved "UNSEEN" category."""
    out = {}
    totals = t.unit_totals
    argmax = np.argmax(t.counts, axis=1)
    for u in range(t.counts.shape[0]):
        out[u] = t.category_names[argmax[u]] if totals[u] > 0 else UNSEEN_LABEL
    return out
