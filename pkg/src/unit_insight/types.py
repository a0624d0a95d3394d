"""Core data types shared by every stage of the pipeline.

All matrices are float64 in memory; serialization narrows to float32
(see formats.py). Instances validate themselves on construction and are
treated as immutable afterwards, so they are safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SIL_LABEL = "SIL"
UNSEEN_LABEL = "UNSEEN"

LABEL_KINDS = ("phoneme", "speaker", "gender")


class ValidationError(ValueError):
    """An object violates one of its structural invariants."""


@dataclass
class FeatureMatrix:
    """Continuous frame representations for one utterance, shape (T, D)."""

    utterance_id: str
    frame_rate_hz: float
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2 or self.data.shape[0] < 1 or self.data.shape[1] < 1:
            raise ValidationError(
                f"feature matrix for {self.utterance_id!r} must be 2-D and non-empty, "
                f"got shape {self.data.shape}"
            )
        if not np.all(np.isfinite(self.data)):
            raise ValidationError(f"non-finite feature value in {self.utterance_id!r}")
        if not self.frame_rate_hz > 0:
            raise ValidationError(f"frame_rate_hz must be positive, got {self.frame_rate_hz}")
        _check_utterance_id(self.utterance_id)

    @property
    def num_frames(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


@dataclass
class Codebook:
    """Cluster centroids defining the unit vocabulary, shape (K, D)."""

    centroids: np.ndarray
    counts: np.ndarray
    source_tag: str = ""

    def __post_init__(self):
        self.centroids = np.asarray(self.centroids, dtype=np.float64)
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.centroids.ndim != 2 or self.centroids.shape[0] < 1:
            raise ValidationError(f"centroids must be a non-empty 2-D matrix, got shape {self.centroids.shape}")
        if not np.all(np.isfinite(self.centroids)):
            raise ValidationError("non-finite centroid value")
        if self.counts.shape != (self.centroids.shape[0],):
            raise ValidationError("counts length must equal number of centroids")
        if np.any(self.counts < 0):
            raise ValidationError("occupancy counts must be non-negative")
        uniq = np.unique(self.centroids, axis=0)
        if uniq.shape[0] != self.centroids.shape[0]:
            raise ValidationError("codebook contains duplicate centroid rows")

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    @property
    def dim(self) -> int:
        return self.centroids.shape[1]


@dataclass
class UnitSequence:
    """Per-frame unit IDs for one utterance, each in [0, K)."""

    utterance_id: str
    units: np.ndarray

    def __post_init__(self):
        self.units = np.asarray(self.units, dtype=np.int64)
        if self.units.ndim != 1:
            raise ValidationError("units must be a 1-D sequence")
        if self.units.size and self.units.min() < 0:
            raise ValidationError(f"negative unit id in {self.utterance_id!r}")
        _check_utterance_id(self.utterance_id)

    def __len__(self) -> int:
        return int(self.units.size)


@dataclass
class DedupedSequence:
    """Run-collapsed units with per-run frame durations.

    Adjacent units differ; sum(durations) recovers the frame count of the
    source UnitSequence.
    """

    utterance_id: str
    units: np.ndarray
    durations: np.ndarray

    def __post_init__(self):
        self.units = np.asarray(self.units, dtype=np.int64)
        self.durations = np.asarray(self.durations, dtype=np.int64)
        if self.units.shape != self.durations.shape or self.units.ndim != 1:
            raise ValidationError("units and durations must be 1-D and equal length")
        if self.units.size:
            if self.units.min() < 0:
                raise ValidationError(f"negative unit id in {self.utterance_id!r}")
            if self.durations.min() < 1:
                raise ValidationError(f"non-positive duration in {self.utterance_id!r}")
            if np.any(self.units[1:] == self.units[:-1]):
                raise ValidationError(f"adjacent equal units in deduped {self.utterance_id!r}")
        _check_utterance_id(self.utterance_id)

    def __len__(self) -> int:
        return int(self.units.size)

    @property
    def num_frames(self) -> int:
        return int(self.durations.sum())


@dataclass
class LabelAlignment:
    """Per-frame categorical labels (phoneme / speaker / gender)."""

    utterance_id: str
    label_kind: str
    frame_labels: np.ndarray
    category_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.frame_labels = np.asarray(self.frame_labels, dtype=np.int64)
        if self.label_kind not in LABEL_KINDS:
            raise ValidationError(f"unknown label kind {self.label_kind!r}")
        if self.frame_labels.ndim != 1 or self.frame_labels.size < 1:
            raise ValidationError("frame_labels must be a non-empty 1-D sequence")
        if self.frame_labels.min() < 0 or self.frame_labels.max() >= len(self.category_names):
            raise ValidationError(f"frame label id out of range in {self.utterance_id!r}")
        _check_utterance_id(self.utterance_id)

    def __len__(self) -> int:
        return int(self.frame_labels.size)

    def label_at(self, frame: int) -> str:
        return self.category_names[self.frame_labels[frame]]


@dataclass
class Waveform:
    """Mono audio samples normalized to [-1, 1]."""

    utterance_id: str
    sample_rate_hz: int
    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ValidationError("samples must be 1-D (mono)")
        if self.sample_rate_hz <= 0:
            raise ValidationError("sample_rate_hz must be positive")
        if self.samples.size and (self.samples.min() < -1.0 or self.samples.max() > 1.0):
            raise ValidationError(f"samples outside [-1, 1] in {self.utterance_id!r}")
        _check_utterance_id(self.utterance_id)

    def __len__(self) -> int:
        return int(self.samples.size)

    def samples_per_frame(self, num_frames: int) -> int:
        """Integral samples-per-frame against a frame count; error if ragged."""
        if num_frames < 1 or len(self) % num_frames != 0:
            raise ValidationError(
                f"{self.utterance_id!r}: {len(self)} samples do not divide into "
                f"{num_frames} whole frames"
            )
        return len(self) // num_frames


def _check_utterance_id(utterance_id: str) -> None:
    if not utterance_id:
        raise ValidationError("empty utterance_id")
    if any(c.isspace() for c in utterance_id):
        raise ValidationError(f"utterance_id {utterance_id!r} must not contain whitespace")
