"""Seeded synthetic fixtures: every randomized evaluation in this package
can be exercised without external corpora or pretrained encoders.

Two generators matter. `planted_swap_units` emits two parallel unit
transcriptions where designated source units flip to a partner with a known
probability, giving a ground-truth swap rate to calibrate against.
`blob_corpus` emits features, audio, labels, and a codebook where designated
unit pairs sit geometrically close (so segment-level noise in the circular
loop swaps them) and decoy pairs sit even closer but never occur, so
distance-only merging is tempted away from the truly redundant pairs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .rng import SYNTH_STREAM, make_rng
from .types import (
    Codebook,
    DedupedSequence,
    FeatureMatrix,
    LabelAlignment,
    ValidationError,
    Waveform,
)


@dataclass(frozen=True)
class SwapPlant:
    """Directed flip: occurrences of `source` become `target` with
    probability `probability` in the second transcription."""

    source: int
    target: int
    probability: float


def planted_swap_units(
    k: int,
    plants: list[SwapPlant],
    n_utterances: int,
    runs_per_utterance: int,
    seed: int = 0,
) -> tuple[list[DedupedSequence], list[DedupedSequence]]:
    """Parallel pass-1/pass-2 deduped transcriptions with known swap rates.

    Adjacent runs are drawn so that no flip can ever produce two equal
    neighbors, which keeps every flip attributable as a clean substitution.
    """
    for p in plants:
        if not 0 <= p.source < k or not 0 <= p.target < k or p.source == p.target:
            raise ValidationError(f"bad swap plant {p}")
        if not 0.0 <= p.probability <= 1.0:
            raise ValidationError(f"swap probability outside [0, 1]: {p}")
    flip_to = {p.source: (p.target, p.probability) for p in plants}
    if len(flip_to) != len(plants):
        raise ValidationError("one plant per source unit")

    def reachable(u: int) -> frozenset[int]:
        return frozenset((u, flip_to[u][0])) if u in flip_to else frozenset((u,))

    rng = make_rng(seed, SYNTH_STREAM)
    pass1, pass2 = [], []
    for n in range(n_utterances):
        units = np.empty(runs_per_utterance, dtype=np.int64)
        prev: frozenset[int] = frozenset()
        for i in range(runs_per_utterance):
            while True:
                u = int(rng.integers(k))
                if not (reachable(u) & prev):
                    break
            units[i] = u
            prev = reachable(u)
        durations = rng.integers(1, 5, size=runs_per_utterance)
        flipped = units.copy()
        for i, u in enumerate(units):
            plant = flip_to.get(int(u))
            if plant is not None and rng.random() < plant[1]:
                flipped[i] = plant[0]
        uid = f"synth{n:05d}"
        pass1.append(DedupedSequence(uid, units, durations))
        pass2.append(DedupedSequence(uid, flipped, durations.copy()))
    return pass1, pass2


@dataclass
class BlobCorpus:
    """Self-contained corpus with planted geometric structure."""

    codebook: Codebook
    features: list[FeatureMatrix]
    waveforms: list[Waveform]
    phones: list[LabelAlignment]
    speakers: list[LabelAlignment]
    genders: list[LabelAlignment]
    pair_units: list[tuple[int, int]]
    decoy_units: list[tuple[int, int]]
    unit_phonemes: dict[int, str] = field(default_factory=dict)


def blob_corpus(
    k: int = 24,
    dim: int = 8,
    n_pairs: int = 2,
    n_decoys: int = 2,
    pair_distance: float = 1.0,
    decoy_distance: float = 0.8,
    anchor_min_distance: float = 20.0,
    n_utterances: int = 100,
    runs_per_utterance: int = 40,
    max_duration: int = 4,
    frame_rate_hz: float = 50.0,
    sample_rate_hz: int = 16000,
    n_speakers: int = 4,
    seed: int = 0,
) -> BlobCorpus:
    """Gaussian-free point-mass corpus: every frame sits exactly on its
    unit's centroid, so first-pass quantization is exact by construction.

    Units [0, 2*n_pairs) form redundant pairs `pair_distance` apart that
    share a phoneme. The next 2*n_decoys units form closer pairs that never
    occur in the corpus. Remaining units are isolated. Waveforms carry a
    fixed per-unit sample chunk per frame, already on the 16-bit PCM grid.
    """
    n_special = 2 * n_pairs + 2 * n_decoys
    if k <= n_special:
        raise ValidationError(f"k={k} leaves no room for {n_special} paired units")
    if sample_rate_hz % int(frame_rate_hz) != 0 or frame_rate_hz != int(frame_rate_hz):
        raise ValidationError("sample rate must be an integer multiple of the frame rate")

    rng = make_rng(seed, SYNTH_STREAM)
    pairs = [(2 * i, 2 * i + 1) for i in range(n_pairs)]
    decoys = [(2 * n_pairs + 2 * i, 2 * n_pairs + 2 * i + 1) for i in range(n_decoys)]
    normals = list(range(n_special, k))
    occurring = sorted([u for a, b in pairs for u in (a, b)] + normals)

    centers = _spread_centers(k, dim, pairs, decoys, pair_distance, decoy_distance,
                              anchor_min_distance, rng)
    counts = np.zeros(k, dtype=np.int64)

    # one phoneme per redundant pair, one per isolated unit
    unit_phonemes = {}
    for i, (a, b) in enumerate(pairs):
        unit_phonemes[a] = unit_phonemes[b] = f"P{i:02d}"
    for i, u in enumerate(normals):
        unit_phonemes[u] = f"N{i:02d}"
    for i, (a, b) in enumerate(decoys):
        unit_phonemes[a] = unit_phonemes[b] = f"D{i:02d}"

    pair_of = {}
    for a, b in pairs:
        pair_of[a] = pair_of[b] = (a, b)

    spf = sample_rate_hz // int(frame_rate_hz)
    chunk = (rng.integers(-32000, 32001, size=(k, spf)) / 32768.0)

    features, waveforms, phones, speakers, genders = [], [], [], [], []
    for n in range(n_utterances):
        uid = f"utt{n:05d}"
        units = np.empty(runs_per_utterance, dtype=np.int64)
        prev_slot = None
        for i in range(runs_per_utterance):
            while True:
                u = occurring[int(rng.integers(len(occurring)))]
                slot = pair_of.get(u, u)
                if slot != prev_slot:
                    break
            units[i] = u
            prev_slot = pair_of.get(u, u)
        durations = rng.integers(1, max_duration + 1, size=runs_per_utterance)
        frames = np.repeat(units, durations)
        counts += np.bincount(frames, minlength=k)

        features.append(FeatureMatrix(uid, float(frame_rate_hz), centers[frames]))
        waveforms.append(Waveform(uid, sample_rate_hz, chunk[frames].reshape(-1)))

        names = sorted({unit_phonemes[int(u)] for u in units})
        index = {p: i for i, p in enumerate(names)}
        phone_frames = np.array([index[unit_phonemes[int(u)]] for u in frames], dtype=np.int64)
        phones.append(LabelAlignment(uid, "phoneme", phone_frames, names))

        spk = f"spk{n % n_speakers}"
        speakers.append(
            LabelAlignment(uid, "speaker", np.zeros(len(frames), dtype=np.int64), [spk])
        )
        gen = f"g{(n % n_speakers) % 2}"
        genders.append(
            LabelAlignment(uid, "gender", np.zeros(len(frames), dtype=np.int64), [gen])
        )

    cb = Codebook(centers, counts, source_tag=f"synthetic(seed={seed})")
    return BlobCorpus(cb, features, waveforms, phones, speakers, genders,
                      pairs, decoys, unit_phonemes)


def _spread_centers(
    k: int,
    dim: int,
    pairs: list[tuple[int, int]],
    decoys: list[tuple[int, int]],
    pair_distance: float,
    decoy_distance: float,
    anchor_min_distance: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Anchors mutually >= anchor_min_distance apart; each pair's second
    unit sits at the pair's offset distance from the first."""
    n_anchors = len(pairs) + len(decoys) + (k - 2 * len(pairs) - 2 * len(decoys))
    side = anchor_min_distance * max(4.0, float(n_anchors))
    anchors = []
    while len(anchors) < n_anchors:
        cand = rng.uniform(0.0, side, size=dim)
        if all(np.linalg.norm(cand - a) >= anchor_min_distance for a in anchors):
            anchors.append(cand)
    anchors = list(anchors)

    centers = np.zeros((k, dim))
    cursor = 0
    for (a, b), dist in [(p, pair_distance) for p in pairs] + [(d, decoy_distance) for d in decoys]:
        direction = rng.standard_normal(dim)
        direction /= np.linalg.norm(direction)
        centers[a] = anchors[cursor]
        centers[b] = anchors[cursor] + dist * direction
        cursor += 1
    n_special = 2 * len(pairs) + 2 * len(decoys)
    for i, u in enumerate(range(n_special, k)):
        centers[u] = anchors[cursor + i]
    return centers


def three_blob_codebook(
    per_blob: int = 50,
    separation: float = 20.0,
    dim: int = 16,
    seed: int = 0,
) -> tuple[Codebook, np.ndarray]:
    """Centroids drawn from three unit-variance blobs whose centers are
    `separation` standard deviations apart; returns (codebook, blob labels)."""
    rng = make_rng(seed, SYNTH_STREAM)
    blob_centers = np.zeros((3, dim))
    blob_centers[1, 0] = separation
    blob_centers[2, 1] = separation
    points = []
    labels = []
    for b in range(3):
        points.append(blob_centers[b] + rng.standard_normal((per_blob, dim)))
        labels.extend([b] * per_blob)
    cents = np.concatenate(points)
    counts = np.ones(cents.shape[0], dtype=np.int64)
    return Codebook(cents, counts, source_tag=f"three-blobs(seed={seed})"), np.array(labels)
