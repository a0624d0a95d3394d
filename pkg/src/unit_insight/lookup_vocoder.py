"""Concatenative resynthesis from a key -> audio-segment lookup table.

The table is filled in a seeded random pass over the corpus, one utterance
at a time: a run whose key is already stored replays the stored segment
verbatim; a run whose key is new falls back to its own source span, and the
utterance's new keys enter the table once the utterance is done. The
fraction of misses is the memorization statistic, so the first utterance
decoded always comes back sample-identical.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .rng import LOOKUP_STREAM, make_rng
from .types import DedupedSequence, ValidationError, Waveform


class KeyKind(enum.Enum):
    LOCAL_SINGLE = "ls"
    LOCAL_FULL = "lf"
    CONTEXT_SINGLE = "cs"
    CONTEXT_FULL = "cf"

    @classmethod
    def parse(cls, name: str) -> "KeyKind":
        try:
            return cls(name.lower())
        except ValueError:
            raise ValidationError(f"unknown key kind {name!r}; expected ls|lf|cs|cf") from None


def bos_unit(k: int) -> int:
    """Sentinel unit standing in for the missing left neighbor."""
    return k


def eos_unit(k: int) -> int:
    """Sentinel unit standing in for the missing right neighbor."""
    return k + 1


def make_key(d: DedupedSequence, i: int, kind: KeyKind, k: int) -> tuple[int, ...]:
    """Lookup key for run i: the unit alone, with its duration, with its
    neighboring units, or with both. Out-of-range neighbors become the
    BOS/EOS sentinel units k and k+1."""
    n = len(d)
    if not 0 <= i < n:
        raise ValidationError(f"run index {i} out of range for {n} runs")
    u = int(d.units[i])
    if kind is KeyKind.LOCAL_SINGLE:
        return (u,)
    if kind is KeyKind.LOCAL_FULL:
        return (u, int(d.durations[i]))
    prev = int(d.units[i - 1]) if i > 0 else bos_unit(k)
    nxt = int(d.units[i + 1]) if i < n - 1 else eos_unit(k)
    if kind is KeyKind.CONTEXT_SINGLE:
        return (prev, u, nxt)
    return (prev, u, nxt, int(d.durations[i]))


@dataclass
class SegmentTable:
    """First-appearance store: a key, once inserted, is never overwritten."""

    fill_seed: int
    _store: dict[tuple[int, ...], tuple[np.ndarray, int, int]] = field(default_factory=dict)

    def __contains__(self, key: tuple[int, ...]) -> bool:
        return key in self._store

    def __len__(self) -> int:
        return len(self._store)

    def insert(self, key: tuple[int, ...], samples: np.ndarray, utt_index: int, run_index: int) -> None:
        if key not in self._store:
            self._store[key] = (samples, utt_index, run_index)

    def lookup(self, key: tuple[int, ...]) -> tuple[np.ndarray, int, int]:
        return self._store[key]


@dataclass(frozen=True)
class SegmentOrigin:
    """Where an emitted segment's audio came from: corpus utterance index,
    run index within it, and whether it was a table hit."""

    utt_index: int
    run_index: int
    hit: bool


@dataclass
class MemorizationReport:
    """Per-utterance unseen-key percentages plus segment provenance, in the
    original corpus order."""

    kind: KeyKind
    fill_seed: int
    utterance_ids: list[str]
    unseen_percent: list[float]
    key_counts: list[int]
    origins: list[list[SegmentOrigin]]

    @property
    def mean_unseen_percent(self) -> float:
        if not self.unseen_percent:
            raise ValidationError("empty memorization report")
        return float(np.mean(self.unseen_percent))

    @property
    def pooled_unseen_percent(self) -> float:
        total = sum(self.key_counts)
        if total == 0:
            raise ValidationError("empty memorization report")
        misses = sum(
            p * c / 100.0 for p, c in zip(self.unseen_percent, self.key_counts)
        )
        return 100.0 * misses / total


def lv_resynthesize(
    corpus: list[tuple[DedupedSequence, Waveform]],
    kind: KeyKind,
    k: int,
    fill_seed: int = 0,
) -> tuple[list[Waveform], MemorizationReport]:
    """Decode every utterance by key lookup with miss-fallback to the source.

    The corpus is visited in a seeded random order; outputs and the report
    come back in the original order. Each run either replays the stored
    first-appearance segment (hit) or falls back to its own source span,
    which is then stored (miss).
    """
    if not corpus:
        raise ValidationError("empty corpus")
    for d, w in corpus:
        if d.utterance_id != w.utterance_id:
            raise ValidationError(f"sequence {d.utterance_id!r} paired with waveform {w.utterance_id!r}")
        w.samples_per_frame(d.num_frames)  # raises unless integral

    table = SegmentTable(fill_seed)
    rng = make_rng(fill_seed, LOOKUP_STREAM)
    order = rng.permutation(len(corpus))

    outputs: list[Waveform | None] = [None] * len(corpus)
    unseen = [0.0] * len(corpus)
    key_counts = [0] * len(corpus)
    origins: list[list[SegmentOrigin]] = [[] for _ in corpus]

    for utt_index in map(int, order):
        d, w = corpus[utt_index]
        spf = w.samples_per_frame(d.num_frames) if len(d) else 0
        offsets = np.concatenate(([0], np.cumsum(d.durations))) * spf
        pieces = []
        misses = 0
        # resolve every run against the table as of the utterance start;
        # the utterance's own novel keys are inserted only afterwards
        novel: list[tuple[tuple[int, ...], int]] = []
        for i in range(len(d)):
            key = make_key(d, i, kind, k)
            if key in table:
                samples, src_utt, src_run = table.lookup(key)
                origins[utt_index].append(SegmentOrigin(src_utt, src_run, True))
            else:
                samples = w.samples[offsets[i] : offsets[i + 1]]
                novel.append((key, i))
                origins[utt_index].append(SegmentOrigin(utt_index, i, False))
                misses += 1
            pieces.append(samples)
        for key, i in novel:
            table.insert(key, w.samples[offsets[i] : offsets[i + 1]], utt_index, i)
        merged = np.concatenate(pieces) if pieces else np.empty(0)
        outputs[utt_index] = Waveform(d.utterance_id, w.sample_rate_hz, merged)
        key_counts[utt_index] = len(d)
        unseen[utt_index] = 100.0 * misses / len(d) if len(d) else 0.0

    report = MemorizationReport(
        kind=kind,
        fill_seed=fill_seed,
        utterance_ids=[d.utterance_id for d, _ in corpus],
        unseen_percent=unseen,
        key_counts=key_counts,
        origins=origins,
    )
    return outputs, report  # type: ignore[return-value]


def memorization_rate(report: MemorizationReport, pooled: bool = False) -> float:
    """Mean unseen-key percentage: unweighted over utterances by default,
    or pooled over all keys."""
    return report.pooled_unseen_percent if pooled else report.mean_unseen_percent
