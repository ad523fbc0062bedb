"""Corpus ingestion: annotation parsing, clip segmentation, affect normalization, splits.

All affect values are carried internally on the unit interval per dimension;
source ranges (e.g. [-1, 1] for continuous music annotations, [1, 10] for
image VAD ratings) are declared by the caller and mapped affinely.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import random
import statistics
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import (
    DegenerateRange,
    DimensionMismatch,
    DuplicateId,
    EmptyInput,
    MalformedRow,
    NonMonotonicTime,
    OutOfRange,
    SchemaViolation,
)

log = logging.getLogger(__name__)

ANNOTATION_HEADER = ("track_id", "time_ms", "valence", "arousal")

SPLIT_NAMES = ("train", "validation", "test")

# The 26-label image emotion vocabulary (configurable; this is the shipped default).
IMAGE_EMOTION_CATEGORIES = frozenset({
    "Affection", "Anger", "Annoyance", "Anticipation", "Aversion", "Confidence",
    "Disapproval", "Disconnection", "Disquietment", "Doubt/Confusion",
    "Embarrassment", "Engagement", "Esteem", "Excitement", "Fatigue", "Fear",
    "Happiness", "Pain", "Peace", "Pleasure", "Sadness", "Sensitivity",
    "Suffering", "Surprise", "Sympathy", "Yearning",
})


@dataclass(frozen=True)
class VAPoint:
    """A (valence, arousal) pair normalized to the unit square."""

    valence: float
    arousal: float

    def __post_init__(self):
        for name, v in (("valence", self.valence), ("arousal", self.arousal)):
            if not math.isfinite(v) or not 0.0 <= v <= 1.0:
                raise OutOfRange(f"{name} {v!r} outside [0, 1]")

    def as_tuple(self) -> tuple[float, float]:
        return (self.valence, self.arousal)


@dataclass(frozen=True)
class AnnotationFrame:
    time_ms: int
    valence: float
    arousal: float

    def __post_init__(self):
        if self.time_ms < 0:
            raise OutOfRange(f"time_ms {self.time_ms} < 0")


@dataclass(frozen=True)
class AudioSegmentRecord:
    track_id: str
    segment_index: int
    start_ms: int
    end_ms: int
    va: VAPoint

    @property
    def clip_id(self) -> str:
        return f"{self.track_id}_s{self.segment_index:03d}"


@dataclass(frozen=True)
class ImageEmotionRecord:
    image_id: str
    categories: frozenset[str]
    vad: tuple[float, float, float]

    @property
    def va(self) -> VAPoint:
        return VAPoint(self.vad[0], self.vad[1])


@dataclass(frozen=True)
class CaptionRecord:
    clip_id: str
    caption: str
    va: VAPoint | None = None


@dataclass(frozen=True)
class EmbeddingVector:
    """Fixed-dimension real vector tagged with its modality and source id."""

    id: str
    modality: str
    vec: np.ndarray

    @property
    def dim(self) -> int:
        return int(self.vec.shape[0])


@dataclass(frozen=True)
class SplitAssignment:
    """A total, disjoint partition of clip ids into train/validation/test."""

    mapping: dict[str, str]

    def ids_for(self, split: str) -> list[str]:
        if split not in SPLIT_NAMES:
            raise ValueError(f"unknown split {split!r}")
        return sorted(cid for cid, s in self.mapping.items() if s == split)

    def sizes(self) -> dict[str, int]:
        out = {s: 0 for s in SPLIT_NAMES}
        for s in self.mapping.values():
            out[s] += 1
        return out


def _open_text(source) -> io.TextIOBase:
    """Accept a path, raw bytes, or a file-like object and yield text."""
    if isinstance(source, (str, Path)):
        return open(source, "r", encoding="utf-8", newline="")
    if isinstance(source, bytes):
        return io.StringIO(source.decode("utf-8"))
    if hasattr(source, "read"):
        data = source.read()
        if isinstance(data, bytes):
            data = data.decode("utf-8")
        return io.StringIO(data)
    raise TypeError(f"unsupported source type {type(source)!r}")


def parse_annotation_csv(source) -> list[tuple[str, list[AnnotationFrame]]]:
    """Parse the canonical annotation CSV into per-track frame lists.

    Header must be exactly ``track_id,time_ms,valence,arousal``. Rows for one
    track must appear in strictly increasing time order; violations raise
    NonMonotonicTime rather than being silently re-sorted. Tracks are returned
    in track_id-sorted order.
    """
    tracks: dict[str, list[AnnotationFrame]] = {}
    with _open_text(source) as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            return []
        if tuple(h.strip() for h in header) != ANNOTATION_HEADER:
            raise MalformedRow(1, f"expected header {','.join(ANNOTATION_HEADER)!r}")
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != 4:
                raise MalformedRow(line, f"expected 4 fields, got {len(row)}")
            track_id = row[0].strip()
            if not track_id:
                raise MalformedRow(line, "empty track_id")
            try:
                time_ms = int(row[1])
                valence = float(row[2])
                arousal = float(row[3])
            except ValueError as exc:
                raise MalformedRow(line, f"non-numeric field: {exc}") from None
            if time_ms < 0:
                raise MalformedRow(line, f"negative time_ms {time_ms}")
            if not (math.isfinite(valence) and math.isfinite(arousal)):
                raise MalformedRow(line, "non-finite valence/arousal")
            frames = tracks.setdefault(track_id, [])
            if frames and time_ms <= frames[-1].time_ms:
                raise NonMonotonicTime(track_id, line)
            frames.append(AnnotationFrame(time_ms, valence, arousal))
    return [(tid, tracks[tid]) for tid in sorted(tracks)]


def normalize_va(value: float, source_range: tuple[float, float]) -> float:
    """Map a raw annotation value affinely onto [0, 1], clamping outliers."""
    lo, hi = source_range
    if not lo < hi:
        raise DegenerateRange(f"source range ({lo}, {hi}) has lo >= hi")
    x = (value - lo) / (hi - lo)
    if x < 0.0 or x > 1.0:
        log.warning("value %s outside source range (%s, %s); clamping", value, lo, hi)
        x = min(1.0, max(0.0, x))
    return x


def segment_track(
    track_id: str,
    frames: Sequence[AnnotationFrame],
    clip_ms: int = 5000,
    source_range: tuple[float, float] = (-1.0, 1.0),
) -> list[AudioSegmentRecord]:
    """Cut one track's frames into fixed non-overlapping clips.

    Window k covers [k*clip_ms, (k+1)*clip_ms). The annotated duration is the
    last frame time plus the median inter-frame interval (each sample stamps
    the start of its annotation interval); the trailing partial window is
    dropped so every emitted segment has identical length. Each segment's VA
    is the arithmetic mean of its in-window frames, normalized to [0, 1].
    """
    if not frames:
        raise EmptyInput("no frames")
    if clip_ms <= 0:
        raise ValueError(f"clip_ms must be positive, got {clip_ms}")
    for a, b in zip(frames, frames[1:]):
        if b.time_ms <= a.time_ms:
            raise NonMonotonicTime(track_id)

    if len(frames) >= 2:
        period = statistics.median(b.time_ms - a.time_ms for a, b in zip(frames, frames[1:]))
    else:
        period = 0
    duration = frames[-1].time_ms + period
    n_windows = int(duration // clip_ms)

    segments: list[AudioSegmentRecord] = []
    i = 0
    for k in range(n_windows):
        start, end = k * clip_ms, (k + 1) * clip_ms
        while i < len(frames) and frames[i].time_ms < start:
            i += 1
        j = i
        v_sum = a_sum = 0.0
        while j < len(frames) and frames[j].time_ms < end:
            v_sum += frames[j].valence
            a_sum += frames[j].arousal
            j += 1
        count = j - i
        i = j
        if count == 0:
            continue  # annotation gap: window carries no evidence
        va = VAPoint(
            normalize_va(v_sum / count, source_range),
            normalize_va(a_sum / count, source_range),
        )
        segments.append(AudioSegmentRecord(track_id, k, start, end, va))
    return segments


def _largest_remainder_counts(n: int, ratios: Sequence[float]) -> list[int]:
    ideal = [r * n for r in ratios]
    counts = [int(math.floor(x)) for x in ideal]
    short = n - sum(counts)
    by_frac = sorted(range(len(ratios)), key=lambda i: (-(ideal[i] - counts[i]), i))
    for i in by_frac[:short]:
        counts[i] += 1
    return counts


def split_dataset(
    ids: Sequence[str],
    ratios: tuple[float, float, float] = (0.7, 0.15, 0.15),
    seed: int = 0,
    group_fn: Callable[[str], str] | None = None,
) -> SplitAssignment:
    """Deterministically partition ids into train/validation/test.

    When ``group_fn`` is given, all ids sharing a group key (e.g. the parent
    track of a segment) land in the same split, so no track straddles splits.
    Sizes follow the ratios within one unit at group granularity (exactly
    per-record when groups are singletons).
    """
    if not ids:
        raise EmptyInput("no ids to split")
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise ValueError(f"ratios must be three positive numbers, got {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got {sum(ratios)}")

    groups: dict[str, list[str]] = {}
    seen: set[str] = set()
    for cid in ids:
        if cid in seen:
            raise DuplicateId(cid)
        seen.add(cid)
        key = group_fn(cid) if group_fn is not None else cid
        groups.setdefault(key, []).append(cid)

    keys = sorted(groups)
    rng = random.Random(seed)
    rng.shuffle(keys)
    counts = _largest_remainder_counts(len(keys), ratios)

    mapping: dict[str, str] = {}
    pos = 0
    for split, count in zip(SPLIT_NAMES, counts):
        for key in keys[pos:pos + count]:
            for cid in groups[key]:
                mapping[cid] = split
        pos += count
    return SplitAssignment(mapping)


def _iter_jsonl(source) -> Iterable[tuple[int, dict]]:
    with _open_text(source) as fh:
        for line_no, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            try:
                obj = json.loads(stripped)
            except json.JSONDecodeError as exc:
                raise SchemaViolation(f"invalid JSON: {exc}", line=line_no) from None
            if not isinstance(obj, dict):
                raise SchemaViolation("expected a JSON object", line=line_no)
            yield line_no, obj


def _require(obj: dict, key: str, line: int):
    if key not in obj:
        raise SchemaViolation(f"missing key {key!r}", line=line)
    return obj[key]


def _as_number(value, key: str, line: int) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaViolation(f"key {key!r} must be a number", line=line)
    if not math.isfinite(float(value)):
        raise SchemaViolation(f"key {key!r} must be finite", line=line)
    return float(value)


def load_captions(
    source,
    source_range: tuple[float, float] = (0.0, 1.0),
) -> list[CaptionRecord]:
    """Load caption records from JSONL; VA keys, when present, are normalized."""
    records: list[CaptionRecord] = []
    seen: set[str] = set()
    for line_no, obj in _iter_jsonl(source):
        clip_id = _require(obj, "clip_id", line_no)
        caption = _require(obj, "caption", line_no)
        if not isinstance(clip_id, str) or not clip_id:
            raise SchemaViolation("clip_id must be a non-empty string", line=line_no)
        if not isinstance(caption, str) or not caption.strip():
            raise SchemaViolation("caption must be non-empty text", line=line_no)
        if clip_id in seen:
            raise DuplicateId(clip_id)
        seen.add(clip_id)
        has_v, has_a = "valence" in obj, "arousal" in obj
        if has_v != has_a:
            raise SchemaViolation("valence and arousal must appear together", line=line_no)
        va = None
        if has_v:
            va = VAPoint(
                normalize_va(_as_number(obj["valence"], "valence", line_no), source_range),
                normalize_va(_as_number(obj["arousal"], "arousal", line_no), source_range),
            )
        records.append(CaptionRecord(clip_id, caption.strip(), va))
    return records


def load_image_records(
    source,
    source_range: tuple[float, float] = (1.0, 10.0),
    vocabulary: frozenset[str] = IMAGE_EMOTION_CATEGORIES,
) -> list[ImageEmotionRecord]:
    """Load image emotion records from JSONL, validating categories and VAD."""
    records: list[ImageEmotionRecord] = []
    seen: set[str] = set()
    for line_no, obj in _iter_jsonl(source):
        image_id = _require(obj, "image_id", line_no)
        if not isinstance(image_id, str) or not image_id:
            raise SchemaViolation("image_id must be a non-empty string", line=line_no)
        if image_id in seen:
            raise DuplicateId(image_id)
        seen.add(image_id)
        cats = _require(obj, "categories", line_no)
        if not isinstance(cats, list) or not all(isinstance(c, str) for c in cats):
            raise SchemaViolation("categories must be an array of strings", line=line_no)
        unknown = set(cats) - vocabulary
        if unknown:
            raise SchemaViolation(f"unknown categories {sorted(unknown)}", line=line_no)
        vad = tuple(
            normalize_va(_as_number(_require(obj, key, line_no), key, line_no), source_range)
            for key in ("valence", "arousal", "dominance")
        )
        records.append(ImageEmotionRecord(image_id, frozenset(cats), vad))
    return records


def load_embeddings(source) -> dict[str, EmbeddingVector]:
    """Load an embedding file: one header line, then one JSON row per vector.

    Lines starting with ``#`` are run-metadata comments and are skipped.
    Every row's vector must match the header dimension.
    """
    result: dict[str, EmbeddingVector] = {}
    header: dict | None = None
    for line_no, obj in _iter_jsonl(source):
        if header is None:
            for key in ("dim", "modality", "count"):
                _require(obj, key, line_no)
            if not isinstance(obj["dim"], int) or obj["dim"] < 1:
                raise SchemaViolation("dim must be a positive integer", line=line_no)
            if not isinstance(obj["count"], int) or obj["count"] < 0:
                raise SchemaViolation("count must be a non-negative integer", line=line_no)
            header = obj
            continue
        row_id = _require(obj, "id", line_no)
        vec = _require(obj, "vec", line_no)
        if not isinstance(row_id, str) or not row_id:
            raise SchemaViolation("id must be a non-empty string", line=line_no)
        if row_id in result:
            raise DuplicateId(row_id)
        if not isinstance(vec, list):
            raise SchemaViolation("vec must be an array", line=line_no)
        if len(vec) != header["dim"]:
            raise DimensionMismatch(
                f"line {line_no}: vector of dim {len(vec)}, header says {header['dim']}"
            )
        arr = np.asarray(vec, dtype=np.float64)
        if not np.all(np.isfinite(arr)):
            raise SchemaViolation("vec must contain finite numbers", line=line_no)
        result[row_id] = EmbeddingVector(row_id, str(header["modality"]), arr)
    if header is None:
        raise SchemaViolation("missing header line")
    if len(result) != header["count"]:
        raise SchemaViolation(
            f"header count {header['count']} but {len(result)} rows present"
        )
    return result


def write_embeddings(
    path,
    dim: int,
    modality: str,
    rows: Iterable[tuple[str, Sequence[float]]],
    comments: Sequence[str] = (),
) -> int:
    """Write an embedding file in the canonical format; returns the row count."""
    rows = list(rows)
    with open(path, "w", encoding="utf-8") as fh:
        for comment in comments:
            fh.write(f"# {comment}\n")
        fh.write(json.dumps({"dim": dim, "modality": modality, "count": len(rows)}) + "\n")
        for row_id, vec in rows:
            if len(vec) != dim:
                raise DimensionMismatch(f"row {row_id!r} has dim {len(vec)}, expected {dim}")
            fh.write(json.dumps({"id": row_id, "vec": [float(x) for x in vec]}) + "\n")
    return len(rows)


# --- JSON views used by the CLI artifact writers ---

def segment_to_json(seg: AudioSegmentRecord) -> dict:
    return {
        "clip_id": seg.clip_id,
        "track_id": seg.track_id,
        "segment_index": seg.segment_index,
        "start_ms": seg.start_ms,
        "end_ms": seg.end_ms,
        "valence": seg.va.valence,
        "arousal": seg.va.arousal,
    }


def caption_to_json(rec: CaptionRecord) -> dict:
    obj: dict = {"clip_id": rec.clip_id, "caption": rec.caption}
    if rec.va is not None:
        obj["valence"] = rec.va.valence
        obj["arousal"] = rec.va.arousal
    return obj


def image_record_to_json(rec: ImageEmotionRecord) -> dict:
    return {
        "image_id": rec.image_id,
        "categories": sorted(rec.categories),
        "valence": rec.vad[0],
        "arousal": rec.vad[1],
        "dominance": rec.vad[2],
    }
