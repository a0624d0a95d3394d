"""File formats for features, codebooks, unit sequences, alignments, audio.

Binary layouts (everything little-endian, independent of host platform):

    FEATS file:   "FEAT" | version u32=1 | T u64 | D u32 | frame_rate f32
                  | id_len u16 | id UTF-8 | T*D f32 frame-major
    Codebook:     "CBOK" | version u32=1 | K u64 | D u32 | K*D f32 | K u64 counts

Text formats:

    Alignment:    UTF-8 TSV, one segment per line:
                  utterance_id <TAB> start_frame <TAB> end_frame <TAB> label
                  end_frame exclusive; '#' lines ignored; gaps become "SIL".
    Unit files:   one utterance per line: id followed by space-separated units.
                  Deduped files add a parallel duration line prefixed "D ".
    Audio:        RIFF/WAVE, PCM 16-bit mono; samples map to [-1, 1) via /32768.

Values are stored as float32 and widened to float64 on read; writing the
same object twice yields byte-identical files.
"""

from __future__ import annotations

import struct
import wave
from pathlib import Path

import numpy as np

from .types import (
    SIL_LABEL,
    Codebook,
    DedupedSequence,
    FeatureMatrix,
    LabelAlignment,
    UnitSequence,
    ValidationError,
    Waveform,
)

FEATS_MAGIC = b"FEAT"
CBOK_MAGIC = b"CBOK"
FORMAT_VERSION = 1

_FEATS_HEAD = struct.Struct("<4sIQIfH")
_CBOK_HEAD = struct.Struct("<4sIQI")


class FormatError(ValueError):
    """A file does not conform to its declared format."""


# ---------------------------------------------------------------------------
# FEATS


def write_feats(m: FeatureMatrix, path: str | Path) -> None:
    """Serialize a FeatureMatrix; validates before any bytes are written."""
    payload = np.ascontiguousarray(m.data, dtype="<f4")
    if not np.all(np.isfinite(payload)):
        raise ValidationError(f"non-finite value after float32 narrowing in {m.utterance_id!r}")
    uid = m.utterance_id.encode("utf-8")
    if len(uid) > 0xFFFF:
        raise ValidationError("utterance_id longer than 65535 bytes")
    head = _FEATS_HEAD.pack(
        FEATS_MAGIC, FORMAT_VERSION, m.num_frames, m.dim, np.float32(m.frame_rate_hz), len(uid)
    )
    with open(path, "wb") as f:
        f.write(head)
        f.write(uid)
        f.write(payload.tobytes())


def read_feats(path: str | Path) -> FeatureMatrix:
    blob = Path(path).read_bytes()
    if len(blob) < _FEATS_HEAD.size:
        raise FormatError(f"{path}: truncated header at byte {len(blob)} (need {_FEATS_HEAD.size})")
    magic, version, n_frames, dim, rate, id_len = _FEATS_HEAD.unpack_from(blob, 0)
    if magic != FEATS_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r} at byte 0")
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported version {version} at byte 4")
    off = _FEATS_HEAD.size
    if len(blob) < off + id_len:
        raise FormatError(f"{path}: truncated utterance_id at byte {len(blob)}")
    uid = blob[off : off + id_len].decode("utf-8")
    off += id_len
    want = n_frames * dim * 4
    if len(blob) - off != want:
        raise FormatError(
            f"{path}: payload is {len(blob) - off} bytes at byte {off}, "
            f"expected {want} ({n_frames}x{dim} float32)"
        )
    data = np.frombuffer(blob, dtype="<f4", count=n_frames * dim, offset=off)
    bad = np.flatnonzero(~np.isfinite(data))
    if bad.size:
        raise FormatError(f"{path}: non-finite value at byte {off + int(bad[0]) * 4}")
    return FeatureMatrix(uid, float(rate), data.reshape(n_frames, dim).astype(np.float64))


# ---------------------------------------------------------------------------
# Codebook


def write_codebook(cb: Codebook, path: str | Path) -> None:
    payload = np.ascontiguousarray(cb.centroids, dtype="<f4")
    if not np.all(np.isfinite(payload)):
        raise ValidationError("non-finite centroid after float32 narrowing")
    if np.unique(payload, axis=0).shape[0] != cb.k:
        raise ValidationError("centroid rows collide after float32 narrowing")
    with open(path, "wb") as f:
        f.write(_CBOK_HEAD.pack(CBOK_MAGIC, FORMAT_VERSION, cb.k, cb.dim))
        f.write(payload.tobytes())
        f.write(np.ascontiguousarray(cb.counts, dtype="<u8").tobytes())


def read_codebook(path: str | Path) -> Codebook:
    blob = Path(path).read_bytes()
    if len(blob) < _CBOK_HEAD.size:
        raise FormatError(f"{path}: truncated header at byte {len(blob)} (need {_CBOK_HEAD.size})")
    magic, version, k, dim = _CBOK_HEAD.unpack_from(blob, 0)
    if magic != CBOK_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r} at byte 0")
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported version {version} at byte 4")
    off = _CBOK_HEAD.size
    want = k * dim * 4 + k * 8
    if len(blob) - off != want:
        raise FormatError(f"{path}: payload is {len(blob) - off} bytes at byte {off}, expected {want}")
    cents = np.frombuffer(blob, dtype="<f4", count=k * dim, offset=off)
    bad = np.flatnonzero(~np.isfinite(cents))
    if bad.size:
        raise FormatError(f"{path}: non-finite value at byte {off + int(bad[0]) * 4}")
    counts = np.frombuffer(blob, dtype="<u8", count=k, offset=off + k * dim * 4)
    return Codebook(cents.reshape(k, dim).astype(np.float64), counts.astype(np.int64))


# ---------------------------------------------------------------------------
# Alignments


def read_alignment(
    path: str | Path,
    kind: str,
    frame_counts: dict[str, int] | None = None,
) -> list[LabelAlignment]:
    """Expand a segment table into per-frame labels.

    Frames not covered by any segment become the reserved "SIL" category.
    When frame_counts is given it fixes each utterance's total frame count
    (and trailing gaps are SIL-filled); otherwise the count is the largest
    end_frame seen for the utterance.
    """
    segments: dict[str, list[tuple[int, int, str, int]]] = {}
    order: list[str] = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise FormatError(f"{path}:{lineno}: expected 4 tab-separated fields, got {len(parts)}")
            uid, start_s, end_s, label = parts
            try:
                start, end = int(start_s), int(end_s)
            except ValueError as e:
                raise FormatError(f"{path}:{lineno}: non-integer frame bound") from e
            if start < 0 or end <= start:
                raise FormatError(f"{path}:{lineno}: bad segment [{start}, {end})")
            if uid not in segments:
                segments[uid] = []
                order.append(uid)
            segments[uid].append((start, end, label, lineno))

    out = []
    for uid in order:
        rows = sorted(segments[uid], key=lambda r: (r[0], r[1]))
        for (s0, e0, _, l0), (s1, e1, _, l1) in zip(rows, rows[1:]):
            if s1 < e0:
                raise FormatError(
                    f"{path}: overlapping segments for {uid!r}: "
                    f"line {l0} covers [{s0}, {e0}) and line {l1} covers [{s1}, {e1})"
                )
        total = rows[-1][1]
        if frame_counts is not None:
            if uid not in frame_counts:
                raise FormatError(f"{path}: no frame count known for utterance {uid!r}")
            total = frame_counts[uid]
            if rows[-1][1] > total:
                raise FormatError(
                    f"{path}: segment line {rows[-1][3]} ends at frame {rows[-1][1]} "
                    f"but {uid!r} has only {total} frames"
                )
        names = sorted({label for _, _, label, _ in rows} | {SIL_LABEL})
        index = {name: i for i, name in enumerate(names)}
        frames = np.full(total, index[SIL_LABEL], dtype=np.int64)
        for start, end, label, _ in rows:
            frames[start:end] = index[label]
        out.append(LabelAlignment(uid, kind, frames, names))
    return out


def write_alignment(alignments: list[LabelAlignment], path: str | Path) -> None:
    """Inverse of read_alignment: one line per maximal same-label run."""
    lines = []
    for a in alignments:
        labels = a.frame_labels
        boundaries = np.flatnonzero(np.diff(labels)) + 1
        starts = np.concatenate(([0], boundaries))
        ends = np.concatenate((boundaries, [len(labels)]))
        for s, e in zip(starts, ends):
            name = a.category_names[labels[s]]
            if name == SIL_LABEL:
                continue
            lines.append(f"{a.utterance_id}\t{s}\t{e}\t{name}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Unit sequence text files


def write_units(seqs: list[UnitSequence], path: str | Path) -> None:
    lines = [f"{s.utterance_id} " + " ".join(map(str, s.units)) for s in seqs]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_units(path: str | Path) -> list[UnitSequence]:
    out = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if parts[0] == "D":
                raise FormatError(f"{path}:{lineno}: duration line in a frame-level unit file")
            try:
                units = [int(p) for p in parts[1:]]
            except ValueError as e:
                raise FormatError(f"{path}:{lineno}: non-integer unit") from e
            out.append(UnitSequence(parts[0], np.array(units, dtype=np.int64)))
    return out


def write_deduped(seqs: list[DedupedSequence], path: str | Path) -> None:
    lines = []
    for s in seqs:
        lines.append(f"{s.utterance_id} " + " ".join(map(str, s.units)))
        lines.append("D " + " ".join(map(str, s.durations)))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_deduped(path: str | Path) -> list[DedupedSequence]:
    out = []
    pending: tuple[str, list[int]] | None = None
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if parts[0] == "D":
                if pending is None:
                    raise FormatError(f"{path}:{lineno}: duration line without a unit line")
                uid, units = pending
                durations = [int(p) for p in parts[1:]]
                out.append(
                    DedupedSequence(
                        uid,
                        np.array(units, dtype=np.int64),
                        np.array(durations, dtype=np.int64),
                    )
                )
                pending = None
            else:
                if pending is not None:
                    raise FormatError(f"{path}:{lineno}: unit line for {pending[0]!r} lacks durations")
                pending = (parts[0], [int(p) for p in parts[1:]])
    if pending is not None:
        raise FormatError(f"{path}: unit line for {pending[0]!r} lacks durations")
    return out


# ---------------------------------------------------------------------------
# Audio

_PCM_SCALE = 32768.0


def write_wav(w: Waveform, path: str | Path) -> None:
    pcm = np.clip(np.rint(w.samples * _PCM_SCALE), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as f:
        f.setnchannels(1)
        f.setsampwidth(2)
        f.setframerate(w.sample_rate_hz)
        f.writeframes(pcm.tobytes())


def read_wav(path: str | Path, utterance_id: str | None = None) -> Waveform:
    with wave.open(str(path), "rb") as f:
        if f.getnchannels() != 1:
            raise FormatError(f"{path}: expected mono audio, got {f.getnchannels()} channels")
        if f.getsampwidth() != 2:
            raise FormatError(f"{path}: expected 16-bit PCM, got {8 * f.getsampwidth()}-bit")
        if f.getcomptype() != "NONE":
            raise FormatError(f"{path}: compressed WAV not supported")
        rate = f.getframerate()
        raw = f.readframes(f.getnframes())
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / _PCM_SCALE
    if utterance_id is None:
        utterance_id = Path(path).stem
    return Waveform(utterance_id, rate, samples)
