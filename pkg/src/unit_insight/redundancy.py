"""Unit-edit-distance and the circular-resynthesis swap-rate matrix.

The loop encodes a corpus to units, decodes it with the lookup vocoder,
re-encodes the result, and attributes the differences between the two unit
transcriptions to per-pair substitution rates. A directed rate
swap_rate[i, j] is the fraction of first-pass occurrences of unit i that
came back as unit j.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lookup_vocoder import KeyKind, MemorizationReport, lv_resynthesize
from .quantize import deduplicate, quantize
from .rng import NOISE_STREAM, make_rng
from .types import Codebook, DedupedSequence, FeatureMatrix, ValidationError, Waveform

MATCH = "match"
SUBSTITUTE = "substitute"
DELETE = "delete"
INSERT = "insert"


@dataclass(frozen=True)
class EditOp:
    """One step of an edit script over unit sequences.

    a_pos / b_pos index into the source and target where the op applies;
    the position is None on the side an op does not touch.
    """

    op: str
    a_pos: int | None
    b_pos: int | None
    a_unit: int | None
    b_unit: int | None


def edit_distance(a, b) -> int:
    """Levenshtein distance with unit insert/delete/substitute costs."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    prev = np.arange(b.size + 1, dtype=np.int64)
    cur = np.empty_like(prev)
    for i in range(1, a.size + 1):
        cur[0] = i
        sub = prev[:-1] + (b != a[i - 1])
        dele = prev[1:] + 1
        np.minimum(sub, dele, out=cur[1:])
        # insertions propagate left-to-right and need a scan
        for j in range(1, b.size + 1):
            ins = cur[j - 1] + 1
            if ins < cur[j]:
                cur[j] = ins
        prev, cur = cur, prev
    return int(prev[-1])


def ued(a, b) -> float:
    """Edit distance as a percentage of the first sequence's length."""
    a = np.asarray(a, dtype=np.int64)
    if a.size == 0:
        raise ValidationError("first sequence is empty; UED is undefined")
    return 100.0 * edit_distance(a, b) / a.size


def _dp_table(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    m, n = a.size, b.size
    table = np.zeros((m + 1, n + 1), dtype=np.int64)
    table[0, :] = np.arange(n + 1)
    table[:, 0] = np.arange(m + 1)
    for i in range(1, m + 1):
        row = table[i]
        above = table[i - 1]
        np.minimum(above[:-1] + (b != a[i - 1]), above[1:] + 1, out=row[1:])
        for j in range(1, n + 1):
            ins = row[j - 1] + 1
            if ins < row[j]:
                row[j] = ins
    return table


def align_ops(a, b) -> list[EditOp]:
    """One minimal edit script from the DP backtrace.

    Where several steps tie on cost the diagonal wins over deletion, and
    deletion over insertion, so the script is deterministic.
    """
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    table = _dp_table(a, b)
    ops: list[EditOp] = []
    i, j = a.size, b.size
    while i > 0 or j > 0:
        here = table[i, j]
        if i > 0 and j > 0 and table[i - 1, j - 1] + (a[i - 1] != b[j - 1]) == here:
            kind = MATCH if a[i - 1] == b[j - 1] else SUBSTITUTE
            ops.append(EditOp(kind, i - 1, j - 1, int(a[i - 1]), int(b[j - 1])))
            i, j = i - 1, j - 1
        elif i > 0 and table[i - 1, j] + 1 == here:
            ops.append(EditOp(DELETE, i - 1, None, int(a[i - 1]), None))
            i -= 1
        else:
            ops.append(EditOp(INSERT, None, j - 1, None, int(b[j - 1])))
            j -= 1
    ops.reverse()
    return ops


def replay_ops(a, ops: list[EditOp]) -> np.ndarray:
    """Apply an edit script to its source; returns the rebuilt target."""
    a = np.asarray(a, dtype=np.int64)
    out: list[int] = []
    for op in ops:
        if op.op == MATCH:
            out.append(int(a[op.a_pos]))
        elif op.op == SUBSTITUTE:
            out.append(op.b_unit)
        elif op.op == INSERT:
            out.append(op.b_unit)
        elif op.op != DELETE:
            raise ValidationError(f"unknown edit op {op.op!r}")
    return np.array(out, dtype=np.int64)


@dataclass
class CRMatrix:
    """Directed unit swap rates including two sentinel rows that stay zero."""

    swap_rate: np.ndarray
    occurrence_counts: np.ndarray

    def __post_init__(self):
        self.swap_rate = np.asarray(self.swap_rate, dtype=np.float64)
        self.occurrence_counts = np.asarray(self.occurrence_counts, dtype=np.int64)
        k_ext = self.swap_rate.shape[0]
        if self.swap_rate.shape != (k_ext, k_ext):
            raise ValidationError("swap_rate must be square")
        if self.occurrence_counts.shape != (k_ext,):
            raise ValidationError("occurrence_counts length must match swap_rate")
        if np.any(self.swap_rate < 0) or np.any(self.swap_rate > 1):
            raise ValidationError("swap rates must lie in [0, 1]")
        if np.any(np.diag(self.swap_rate) != 0):
            raise ValidationError("swap_rate diagonal must be zero")
        off_row_sums = self.swap_rate.sum(axis=1)
        if np.any(off_row_sums > 1 + 1e-9):
            raise ValidationError("swap_rate rows must sum to at most 1")

    @property
    def k_ext(self) -> int:
        return self.swap_rate.shape[0]


@dataclass
class RedundancyResult:
    mean_ued: float
    per_utterance_ued: dict[str, float]
    cr: CRMatrix


def measure_redundancy(
    pass1: list[DedupedSequence],
    pass2: list[DedupedSequence],
    k: int,
    normalize: str = "occurrences",
) -> RedundancyResult:
    """UED and swap rates between two unit transcriptions of the same corpus.

    Sequences pair up by utterance_id. The default normalization divides
    substitution counts i -> j by the first-pass occurrences of i, giving a
    conditional swap probability; "edits" divides by the total number of
    edit operations instead.
    """
    if normalize not in ("occurrences", "edits"):
        raise ValidationError(f"unknown normalization {normalize!r}")
    by_id = {d.utterance_id: d for d in pass2}
    missing = [d.utterance_id for d in pass1 if d.utterance_id not in by_id]
    if missing or len(pass1) != len(pass2):
        raise ValidationError(f"pass-1/pass-2 utterances do not pair up (missing: {missing})")

    k_ext = k + 2
    subs = np.zeros((k_ext, k_ext), dtype=np.int64)
    occurrences = np.zeros(k_ext, dtype=np.int64)
    per_ued = {}
    total_edits = 0
    for d1 in pass1:
        d2 = by_id[d1.utterance_id]
        if np.any(d1.units >= k_ext - 2) or np.any(d2.units >= k_ext - 2):
            raise ValidationError(f"unit id out of range for k={k} in {d1.utterance_id!r}")
        occurrences += np.bincount(d1.units, minlength=k_ext)
        per_ued[d1.utterance_id] = ued(d1.units, d2.units)
        for op in align_ops(d1.units, d2.units):
            if op.op == SUBSTITUTE:
                subs[op.a_unit, op.b_unit] += 1
            if op.op != MATCH:
                total_edits += 1

    if normalize == "occurrences":
        denom = np.maximum(occurrences, 1)[:, None]
    else:
        denom = max(total_edits, 1)
    rate = subs / denom
    cr = CRMatrix(rate, occurrences)
    return RedundancyResult(float(np.mean(list(per_ued.values()))), per_ued, cr)


@dataclass
class CircularResult:
    mean_ued: float
    per_utterance_ued: dict[str, float]
    cr: CRMatrix
    pass1: list[DedupedSequence]
    pass2: list[DedupedSequence]
    decoded: list[Waveform]
    memorization: MemorizationReport


def circular_resynthesis(
    corpus: list[tuple[FeatureMatrix, Waveform]],
    cb: Codebook,
    kind: KeyKind,
    fill_seed: int = 0,
    noise_seed: int = 0,
    noise_sigma: float = 0.0,
    noise_per_frame: bool = False,
    mode: str = "synthetic",
    pass2_features: list[FeatureMatrix] | None = None,
    normalize: str = "occurrences",
) -> CircularResult:
    """Encode, decode through the lookup vocoder, re-encode, and compare.

    In "synthetic" mode the second-pass features are assembled from the
    feature frames behind each decoded segment, optionally perturbed by
    Gaussian noise (one offset per segment, or per frame when
    noise_per_frame is set). In "external" mode the caller supplies
    second-pass features extracted from the decoded audio.
    """
    if mode not in ("synthetic", "external"):
        raise ValidationError(f"unknown circular-resynthesis mode {mode!r}")
    if not corpus:
        raise ValidationError("empty corpus")

    pass1 = [deduplicate(quantize(f, cb)) for f, _ in corpus]
    decoded, report = lv_resynthesize(
        [(d, w) for d, (_, w) in zip(pass1, corpus)], kind, cb.k, fill_seed
    )

    if mode == "external":
        if pass2_features is None:
            raise ValidationError("external mode needs second-pass features for the decoded audio")
        by_id = {f.utterance_id: f for f in pass2_features}
        missing = [f.utterance_id for f, _ in corpus if f.utterance_id not in by_id]
        if missing:
            raise ValidationError(f"second-pass features missing for {missing}")
        pass2_mats = [by_id[f.utterance_id] for f, _ in corpus]
    else:
        pass2_mats = _synthetic_pass2(corpus, pass1, report, noise_seed, noise_sigma, noise_per_frame)

    pass2 = [deduplicate(quantize(f, cb)) for f in pass2_mats]
    stats = measure_redundancy(pass1, pass2, cb.k, normalize=normalize)
    return CircularResult(
        stats.mean_ued, stats.per_utterance_ued, stats.cr, pass1, pass2, decoded, report
    )


def _synthetic_pass2(
    corpus: list[tuple[FeatureMatrix, Waveform]],
    pass1: list[DedupedSequence],
    report: MemorizationReport,
    noise_seed: int,
    noise_sigma: float,
    noise_per_frame: bool,
) -> list[FeatureMatrix]:
    """Second-pass features for the decoded audio, without an encoder: each
    emitted segment contributes the feature frames of its source run."""
    rng = make_rng(noise_seed, NOISE_STREAM)
    run_starts = []
    for d in pass1:
        run_starts.append(np.concatenate(([0], np.cumsum(d.durations))))

    out = []
    for utt_index, (feats, _) in enumerate(corpus):
        pieces = []
        for origin in report.origins[utt_index]:
            src_feats = corpus[origin.utt_index][0]
            lo = run_starts[origin.utt_index][origin.run_index]
            hi = run_starts[origin.utt_index][origin.run_index + 1]
            segment = src_feats.data[lo:hi]
            if noise_sigma > 0:
                if noise_per_frame:
                    segment = segment + rng.normal(0.0, noise_sigma, segment.shape)
                else:
                    segment = segment + rng.normal(0.0, noise_sigma, segment.shape[1])
            pieces.append(segment)
        data = np.concatenate(pieces) if pieces else np.empty((0, feats.dim))
        out.append(FeatureMatrix(feats.utterance_id, feats.frame_rate_hz, data))
    return out
