"""Confusion-network data model.

A ConfusionNetwork is an ordered list of bins; each bin holds alternative
multi-word hypotheses with ASR log-probabilities (natural log throughout).
Choosing one hypothesis per bin yields a path. All types are immutable
values; every operation returns a new value.

Canonical bin order after normalize_bin: descending asr_logp, ties broken by
token-sequence lexicographic order. The whole package relies on that order
for deterministic tie-breaking.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional, Sequence

from .errors import ContractError, FormatError, StructureError
from .segmentation import Segment

#: path_count saturates here instead of growing without bound
MAX_PATH_COUNT = 10**18

NORMALIZATION_TOLERANCE = 1e-6


def _check_token(text: str) -> str:
    if not text or any(c.isspace() for c in text):
        raise StructureError(f"invalid token {text!r}: empty or contains whitespace")
    return text


@dataclass(frozen=True)
class Hypothesis:
    """One alternative for a bin: a token sequence (possibly empty, encoding a
    deletion) and its ASR log-probability."""

    tokens: tuple[str, ...]
    asr_logp: float

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        for tok in self.tokens:
            _check_token(tok)
        if not math.isfinite(self.asr_logp):
            raise StructureError(f"asr_logp must be finite, got {self.asr_logp}")

    @property
    def text(self) -> str:
        return " ".join(self.tokens)

    @classmethod
    def from_text(cls, text: str, asr_logp: float) -> "Hypothesis":
        return cls(tuple(text.split(" ")) if text else (), asr_logp)


@dataclass(frozen=True)
class Bin:
    hypotheses: tuple[Hypothesis, ...]

    def __post_init__(self):
        object.__setattr__(self, "hypotheses", tuple(self.hypotheses))
        if not self.hypotheses:
            raise StructureError("bin must contain at least one hypothesis")

    def __len__(self) -> int:
        return len(self.hypotheses)

    def posteriors(self) -> list[float]:
        return [math.exp(h.asr_logp) for h in self.hypotheses]

    def is_normalized(self, tol: float = NORMALIZATION_TOLERANCE) -> bool:
        return abs(sum(self.posteriors()) - 1.0) <= tol


@dataclass(frozen=True)
class Path:
    """One hypothesis index per bin plus the summed ASR log-probability."""

    choices: tuple[int, ...]
    asr_logp: float

    def __post_init__(self):
        object.__setattr__(self, "choices", tuple(self.choices))


@dataclass(frozen=True)
class ConfusionNetwork:
    utterance_id: str
    bins: tuple[Bin, ...]
    segment_spans: Optional[tuple[Segment, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "bins", tuple(self.bins))
        if self.segment_spans is not None:
            spans = tuple(self.segment_spans)
            object.__setattr__(self, "segment_spans", spans)
            if len(spans) != len(self.bins):
                raise StructureError(
                    f"{len(spans)} segment spans for {len(self.bins)} bins"
                )
            for a, b in zip(spans, spans[1:]):
                if b.start < a.end:
                    raise StructureError("segment spans must be increasing")

    def __len__(self) -> int:
        return len(self.bins)


class PathCount(NamedTuple):
    count: int
    overflow: bool


def normalize_bin(b: Bin) -> Bin:
    """Rescale so posteriors sum to one and sort into canonical order."""
    logps = [h.asr_logp for h in b.hypotheses]
    m = max(logps)
    log_z = m + math.log(sum(math.exp(lp - m) for lp in logps))
    hyps = [Hypothesis(h.tokens, h.asr_logp - log_z) for h in b.hypotheses]
    hyps.sort(key=lambda h: (-h.asr_logp, h.tokens))
    return Bin(tuple(hyps))


def prune_bin(b: Bin, threshold: float) -> Bin:
    """Drop hypotheses whose posterior is below the threshold.

    The top-ranked hypothesis always survives, so the bin stays decodable.
    When anything is removed the survivors are renormalized; otherwise the
    bin is returned unchanged.
    """
    if not (0.0 <= threshold < 1.0):
        raise StructureError(f"threshold must be in [0, 1), got {threshold}")
    kept = [
        h
        for i, h in enumerate(b.hypotheses)
        if i == 0 or math.exp(h.asr_logp) >= threshold
    ]
    if len(kept) == len(b.hypotheses):
        return b
    return normalize_bin(Bin(tuple(kept)))


def bin_entropy(b: Bin) -> float:
    """Shannon entropy of the bin posterior, in nats."""
    if not b.is_normalized():
        raise ContractError(
            f"bin posteriors sum to {sum(b.posteriors()):.6f}, not 1; normalize first"
        )
    h = -sum(p * math.log(p) for p in b.posteriors() if p > 0.0)
    return h if h > 0.0 else 0.0


def path_count(cn: ConfusionNetwork) -> PathCount:
    """Number of distinct paths, saturating at MAX_PATH_COUNT."""
    n = 1
    for b in cn.bins:
        n *= len(b)
        if n > MAX_PATH_COUNT:
            return PathCount(MAX_PATH_COUNT, True)
    return PathCount(n, False)


def best_hypothesis_index(b: Bin) -> int:
    """Argmax by asr_logp; ties go to the lexicographically smaller tokens."""
    return min(
        range(len(b.hypotheses)),
        key=lambda i: (-b.hypotheses[i].asr_logp, b.hypotheses[i].tokens, i),
    )


def make_path(cn: ConfusionNetwork, choices: Sequence[int]) -> Path:
    """Build a Path for a choice vector, recomputing the summed ASR score."""
    choices = tuple(choices)
    if len(choices) != len(cn.bins):
        raise StructureError(
            f"{len(choices)} choices for {len(cn.bins)} bins in {cn.utterance_id!r}"
        )
    total = 0.0
    for b, c in zip(cn.bins, choices):
        if not (0 <= c < len(b)):
            raise StructureError(f"choice {c} out of range for bin of size {len(b)}")
        total += b.hypotheses[c].asr_logp
    return Path(choices, total)


def best_asr_path(cn: ConfusionNetwork) -> Path:
    return make_path(cn, [best_hypothesis_index(b) for b in cn.bins])


def flatten(cn: ConfusionNetwork, path: Path) -> tuple[str, ...]:
    """Concatenate the chosen hypotheses' tokens in bin order."""
    if len(path.choices) != len(cn.bins):
        raise StructureError(
            f"path has {len(path.choices)} choices for {len(cn.bins)} bins"
        )
    tokens: list[str] = []
    for b, c in zip(cn.bins, path.choices):
        if not (0 <= c < len(b)):
            raise StructureError(f"choice {c} out of range for bin of size {len(b)}")
        tokens.extend(b.hypotheses[c].tokens)
    return tuple(tokens)


# ---------------------------------------------------------------------------
# serialization: one utterance per JSON line

def cn_to_dict(cn: ConfusionNetwork) -> dict:
    d = {
        "utterance_id": cn.utterance_id,
        "bins": [
            [{"text": h.text, "logp": h.asr_logp} for h in b.hypotheses]
            for b in cn.bins
        ],
    }
    if cn.segment_spans is not None:
        d["segment_spans"] = [[s.start, s.end] for s in cn.segment_spans]
    return d


def cn_from_dict(d: dict) -> ConfusionNetwork:
    try:
        bins = tuple(
            Bin(tuple(Hypothesis.from_text(h["text"], float(h["logp"])) for h in raw))
            for raw in d["bins"]
        )
        spans = None
        if d.get("segment_spans") is not None:
            spans = tuple(Segment(int(s), int(e)) for s, e in d["segment_spans"])
        return ConfusionNetwork(str(d["utterance_id"]), bins, spans)
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed confusion network record: {exc}")


def dumps_cn(cn: ConfusionNetwork) -> str:
    return json.dumps(cn_to_dict(cn), ensure_ascii=False, separators=(",", ":"))


def loads_cn(line: str) -> ConfusionNetwork:
    try:
        d = json.loads(line)
    except json.JSONDecodeError as exc:
        raise FormatError(f"bad JSON: {exc}")
    return cn_from_dict(d)


def write_cn_file(path: str, cns: Iterable[ConfusionNetwork]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for cn in cns:
            fh.write(dumps_cn(cn))
            fh.write("\n")


def read_cn_file(path: str) -> list[ConfusionNetwork]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(loads_cn(line))
            except FormatError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}")
    return out
