"""Frame-level segmentation utilities.

Segments are half-open frame spans [start, end). A BIO label sequence encodes
them per frame: B begins a segment, I continues it, O is non-speech. Adjoining
segments are legal (B directly after I or B), which is what lets an utterance
be tiled with no O frames in between.
"""

from __future__ import annotations

import math
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .errors import ContractError, FormatError, StructureError

BIO_LABELS = ("B", "I", "O")


@dataclass(frozen=True, order=True)
class Segment:
    start: int
    end: int

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise StructureError(f"invalid segment [{self.start}, {self.end})")

    @property
    def num_frames(self) -> int:
        return self.end - self.start

    @property
    def midpoint(self) -> float:
        return (self.start + self.end) / 2.0


@dataclass(frozen=True)
class WordAlignment:
    word: str
    start: int
    end: int

    def __post_init__(self):
        if not self.word or any(c.isspace() for c in self.word):
            raise StructureError(f"invalid aligned word {self.word!r}")
        if not (0 <= self.start < self.end):
            raise StructureError(f"invalid word span [{self.start}, {self.end})")

    @property
    def midpoint(self) -> float:
        return (self.start + self.end) / 2.0


@dataclass(frozen=True)
class FrameLabelSequence:
    labels: tuple[str, ...]
    confidences: Optional[tuple[float, ...]] = None
    frame_duration_ms: float = 30.0

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        for lab in self.labels:
            if lab not in BIO_LABELS:
                raise StructureError(f"unknown frame label {lab!r}")
        if self.confidences is not None:
            object.__setattr__(self, "confidences", tuple(self.confidences))
            if len(self.confidences) != len(self.labels):
                raise StructureError(
                    "confidences length %d != labels length %d"
                    % (len(self.confidences), len(self.labels))
                )
        if self.frame_duration_ms <= 0:
            raise StructureError("frame_duration_ms must be positive")

    def __len__(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class SegmenterConfig:
    """Knobs of the boundary heuristic and of the roll windows.

    post_roll must stay within the lookahead so rolling a segment never adds
    latency on top of what the segmenter already waits for.
    """

    lookahead_frames: int = 2
    pre_roll: int = 2
    post_roll: int = 2
    boundary_confidence_threshold: float = 0.5
    max_segment_words: int = 3
    max_segment_frames: int = 40

    def __post_init__(self):
        if self.pre_roll < 0 or self.post_roll < 0:
            raise StructureError("rolls must be non-negative")
        if self.post_roll > self.lookahead_frames:
            raise ContractError(
                f"post_roll {self.post_roll} exceeds lookahead {self.lookahead_frames}"
            )
        if not (0.0 <= self.boundary_confidence_threshold <= 1.0):
            raise StructureError("boundary_confidence_threshold must be in [0, 1]")
        if self.max_segment_words < 1 or self.max_segment_frames < 1:
            raise StructureError("segment caps must be at least 1")


@dataclass(frozen=True)
class PhaseOutSchedule:
    decay_steps: float

    def __post_init__(self):
        if self.decay_steps <= 0:
            raise StructureError("decay_steps must be positive")


def decode_bio(labels: FrameLabelSequence) -> list[Segment]:
    """Turn per-frame BIO labels into segments.

    Malformed inputs are repaired rather than rejected: an I with no open
    segment acts as B, and a B while a segment is open closes the previous
    segment at that frame (adjoining segments). No speech frame is dropped.
    """
    segments: list[Segment] = []
    open_start: Optional[int] = None
    for t, lab in enumerate(labels.labels):
        if lab == "O":
            if open_start is not None:
                segments.append(Segment(open_start, t))
                open_start = None
        elif lab == "B":
            if open_start is not None:
                segments.append(Segment(open_start, t))
            open_start = t
        else:  # I
            if open_start is None:
                open_start = t
    if open_start is not None:
        segments.append(Segment(open_start, len(labels.labels)))
    return segments


def encode_bio(segments: Sequence[Segment], num_frames: int) -> FrameLabelSequence:
    """Inverse of decode_bio for valid, non-overlapping segment lists."""
    labels = ["O"] * num_frames
    prev_end = 0
    for seg in sorted(segments):
        if seg.start < prev_end:
            raise StructureError(f"overlapping segment at frame {seg.start}")
        if seg.end > num_frames:
            raise StructureError(
                f"segment [{seg.start}, {seg.end}) exceeds {num_frames} frames"
            )
        labels[seg.start] = "B"
        for t in range(seg.start + 1, seg.end):
            labels[t] = "I"
        prev_end = seg.end
    return FrameLabelSequence(tuple(labels))


def word_boundaries_to_segments(
    word_ends: Sequence[tuple[int, float]], config: SegmenterConfig
) -> list[Segment]:
    """Pick segment boundaries among word-end boundaries, greedily left to right.

    A word end closes the current segment when its boundary confidence clears
    the threshold, or when the segment has hit the word cap, or once the frame
    cap is reached. If appending the next word would push the segment past the
    frame cap, the segment is closed early at the previous word end, so a
    produced segment only ever exceeds the frame cap when a single word does.
    The final word end always closes a segment. Segments tile [0, last end).
    """
    if not word_ends:
        return []
    prev = 0
    for frame, _conf in word_ends:
        if frame <= prev:
            raise StructureError("word ends must be strictly increasing and positive")
        prev = frame

    segments: list[Segment] = []
    seg_start = 0
    words_in_seg = 0
    last_end = seg_start
    for idx, (frame, conf) in enumerate(word_ends):
        if words_in_seg > 0 and frame - seg_start > config.max_segment_frames:
            segments.append(Segment(seg_start, last_end))
            seg_start = last_end
            words_in_seg = 0
        words_in_seg += 1
        last_end = frame
        close = (
            conf >= config.boundary_confidence_threshold
            or words_in_seg >= config.max_segment_words
            or frame - seg_start >= config.max_segment_frames
            or idx == len(word_ends) - 1
        )
        if close:
            segments.append(Segment(seg_start, frame))
            seg_start = frame
            words_in_seg = 0
    return segments


def teacher_segments(
    words: Sequence[WordAlignment], config: SegmenterConfig, rng_seed: int
) -> list[Segment]:
    """Segments derived from true word boundaries, for bootstrapping.

    Consecutive words are grouped with group sizes drawn uniformly from
    {1, 2, 3}; each segment spans [first word start, last word end).
    """
    if not words:
        return []
    rng = random.Random(rng_seed)
    segments = []
    i = 0
    while i < len(words):
        size = min(rng.randint(1, 3), len(words) - i)
        segments.append(Segment(words[i].start, words[i + size - 1].end))
        i += size
    return segments


def teacher_mix_probability(step: int, schedule: PhaseOutSchedule) -> float:
    """Probability of using the teacher segmentation at a given training step."""
    if step < 0:
        raise StructureError("step must be non-negative")
    return math.exp(-step / schedule.decay_steps)


def apply_rolls(segment: Segment, config: SegmenterConfig, num_frames: int) -> Segment:
    """Widen a segment by the pre/post-roll, clamped to the utterance."""
    if segment.end > num_frames:
        raise StructureError("segment exceeds utterance length")
    return Segment(
        max(0, segment.start - config.pre_roll),
        min(num_frames, segment.end + config.post_roll),
    )


def align_words_to_segments(
    words: Sequence[WordAlignment], segments: Sequence[Segment]
) -> list[list[str]]:
    """Assign every word to exactly one segment.

    A word goes to the segment it overlaps most; overlap ties and words with
    no overlap fall back to the nearest segment by midpoint distance, with the
    earlier segment winning remaining ties.
    """
    if not segments:
        if words:
            raise StructureError("cannot assign words: no segments")
        return []
    for a, b in zip(segments, segments[1:]):
        if b.start < a.end:
            raise StructureError("segments must be ordered and non-overlapping")
    out: list[list[str]] = [[] for _ in segments]
    for w in words:
        best = None
        for i, seg in enumerate(segments):
            overlap = min(w.end, seg.end) - max(w.start, seg.start)
            dist = abs(w.midpoint - seg.midpoint)
            key = (-max(0, overlap), dist, i)
            if best is None or key < best[0]:
                best = (key, i)
        out[best[1]].append(w.word)
    return out


@dataclass(frozen=True)
class BoundaryOffsetStats:
    """Signed frame offsets from predicted boundaries to the closest word
    boundary of the same kind. Negative means the prediction came early."""

    start_offsets: dict[int, int]
    end_offsets: dict[int, int]

    @staticmethod
    def _pct(counts: dict[int, int]) -> dict[int, float]:
        total = sum(counts.values())
        return {k: 100.0 * v / total for k, v in sorted(counts.items())}

    def start_percentages(self) -> dict[int, float]:
        return self._pct(self.start_offsets)

    def end_percentages(self) -> dict[int, float]:
        return self._pct(self.end_offsets)


def offset_label(offset: int) -> str:
    if offset < 0:
        return f"Early {-offset}"
    if offset > 0:
        return f"Late {offset}"
    return "Exact"


def _closest_offset(pos: int, references: Sequence[int]) -> int:
    # ties between an early and a late reference resolve to the early one
    best = None
    for r in references:
        off = pos - r
        key = (abs(off), off)
        if best is None or key < best:
            best = key
    return best[1]


def boundary_offset_stats(
    predicted: Sequence[Segment], words: Sequence[WordAlignment]
) -> BoundaryOffsetStats:
    if not words:
        raise StructureError("boundary offsets need at least one aligned word")
    word_starts = sorted({w.start for w in words})
    word_ends = sorted({w.end for w in words})
    starts: Counter[int] = Counter()
    ends: Counter[int] = Counter()
    for seg in predicted:
        starts[_closest_offset(seg.start, word_starts)] += 1
        ends[_closest_offset(seg.end, word_ends)] += 1
    return BoundaryOffsetStats(dict(starts), dict(ends))


@dataclass(frozen=True)
class LengthHistogram:
    bucket_edges: tuple[int, ...]
    counts: tuple[int, ...]
    wer: Optional[tuple[Optional[float], ...]] = None

    def bucket_labels(self) -> list[str]:
        edges = self.bucket_edges
        labels = [f"<{edges[0]}"]
        labels += [f"{a}-{b - 1}" for a, b in zip(edges, edges[1:])]
        labels.append(f">={edges[-1]}")
        return labels


def segment_length_histogram(
    segments: Sequence[Segment],
    per_segment_errors=None,
    bucket_edges: Sequence[int] = (16, 30),
) -> LengthHistogram:
    """Bucket segments by frame length; optionally pool a WER per bucket.

    bucket_edges (e1, ..., ek) produce k+1 buckets: [1, e1), [e1, e2), ...,
    [ek, inf). per_segment_errors, when given, is one EditStats per segment.
    """
    edges = tuple(bucket_edges)
    if any(b <= a for a, b in zip(edges, edges[1:])):
        raise StructureError("bucket_edges must be strictly increasing")
    if per_segment_errors is not None and len(per_segment_errors) != len(segments):
        raise StructureError("per_segment_errors must align with segments")
    counts = [0] * (len(edges) + 1)
    errs = [0] * (len(edges) + 1)
    refs = [0] * (len(edges) + 1)
    for i, seg in enumerate(segments):
        b = 0
        while b < len(edges) and seg.num_frames >= edges[b]:
            b += 1
        counts[b] += 1
        if per_segment_errors is not None:
            st = per_segment_errors[i]
            errs[b] += st.substitutions + st.insertions + st.deletions
            refs[b] += st.reference_length
    wer = None
    if per_segment_errors is not None:
        wer = tuple(e / r if r else None for e, r in zip(errs, refs))
    return LengthHistogram(edges, tuple(counts), wer)


# ---------------------------------------------------------------------------
# file formats

def read_bio_file(path: str) -> FrameLabelSequence:
    """TSV with one frame per line: frame_index, label, optional confidence."""
    labels: list[str] = []
    confs: list[float] = []
    have_conf = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) not in (2, 3):
                raise FormatError(f"{path}:{lineno}: expected 2 or 3 columns")
            try:
                idx = int(parts[0])
            except ValueError:
                raise FormatError(f"{path}:{lineno}: bad frame index {parts[0]!r}")
            if idx != len(labels):
                raise FormatError(
                    f"{path}:{lineno}: frame index {idx}, expected {len(labels)}"
                )
            if parts[1] not in BIO_LABELS:
                raise FormatError(f"{path}:{lineno}: bad label {parts[1]!r}")
            labels.append(parts[1])
            row_has_conf = len(parts) == 3
            if have_conf is None:
                have_conf = row_has_conf
            elif have_conf != row_has_conf:
                raise FormatError(f"{path}:{lineno}: inconsistent confidence column")
            if row_has_conf:
                try:
                    confs.append(float(parts[2]))
                except ValueError:
                    raise FormatError(f"{path}:{lineno}: bad confidence {parts[2]!r}")
    return FrameLabelSequence(tuple(labels), tuple(confs) if have_conf else None)


def write_bio_file(path: str, labels: FrameLabelSequence) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for i, lab in enumerate(labels.labels):
            if labels.confidences is not None:
                fh.write(f"{i}\t{lab}\t{labels.confidences[i]!r}\n")
            else:
                fh.write(f"{i}\t{lab}\n")


def read_alignment_file(path: str) -> list[WordAlignment]:
    """TSV with one word per line: word, start_frame, end_frame."""
    words: list[WordAlignment] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise FormatError(f"{path}:{lineno}: expected 3 columns")
            try:
                words.append(WordAlignment(parts[0], int(parts[1]), int(parts[2])))
            except (ValueError, StructureError) as exc:
                raise FormatError(f"{path}:{lineno}: {exc}")
    for a, b in zip(words, words[1:]):
        if b.start < a.end:
            raise StructureError(f"{path}: word alignments overlap at frame {b.start}")
    return words


def parse_librispeech_alignments(
    path: str, frame_duration_ms: float = 30.0
) -> dict[str, list[WordAlignment]]:
    """Adapter for the comma-separated alignment style.

    Each line is: utterance_id, a quoted comma-separated word list (empty
    entries mark silence), and a quoted comma-separated list of word END
    times in seconds. Times convert to frames by rounding t*1000/duration.
    """
    def to_frame(seconds: float) -> int:
        return int(round(seconds * 1000.0 / frame_duration_ms))

    out: dict[str, list[WordAlignment]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                utt_id, rest = line.split(" ", 1)
                first, second = rest.split('" "')
                word_field = first.strip().strip('"')
                time_field = second.strip().strip('"')
            except ValueError:
                raise FormatError(f"{path}:{lineno}: cannot split id/words/times")
            words = word_field.split(",")
            times = time_field.split(",")
            if len(words) != len(times):
                raise FormatError(
                    f"{path}:{lineno}: {len(words)} words vs {len(times)} times"
                )
            aligned: list[WordAlignment] = []
            prev = 0.0
            for w, t in zip(words, times):
                try:
                    end = float(t)
                except ValueError:
                    raise FormatError(f"{path}:{lineno}: bad time {t!r}")
                if w:
                    start_f, end_f = to_frame(prev), to_frame(end)
                    if end_f <= start_f:
                        end_f = start_f + 1
                    aligned.append(WordAlignment(w, start_f, end_f))
                prev = end
            out[utt_id] = aligned
    return out


def read_word_ends_file(path: str) -> list[tuple[int, float]]:
    """TSV feeding the boundary heuristic: word-end frame, boundary confidence."""
    out: list[tuple[int, float]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise FormatError(f"{path}:{lineno}: expected 2 columns")
            try:
                out.append((int(parts[0]), float(parts[1])))
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}")
    return out


def write_segments_file(path: str, per_utterance: dict[str, Sequence[Segment]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for utt_id, segs in per_utterance.items():
            for seg in segs:
                fh.write(f"{utt_id}\t{seg.start}\t{seg.end}\n")
