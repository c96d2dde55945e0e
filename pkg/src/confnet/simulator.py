"""Synthetic confusion-network corpora with a known true path.

Reference transcripts are partitioned into 1-3 word groups, each group
becomes a bin holding the true string plus edit-perturbed confusables, and
bin posteriors are drawn from a symmetric Dirichlet whose concentration
controls peakiness. The true string takes rank 1 with a configurable
probability; otherwise it lands on rank 2 or 3, modelling a near-miss. The
true path is present in every network by construction, so the oracle WER of
an unpruned synthetic corpus is exactly zero and any gap measured later is
attributable to search or pruning, not to the data.

All randomness flows from rng_seed. Per-utterance streams are derived from
(seed, utterance index), so corpora are reproducible file-for-file.
"""

from __future__ import annotations

import math
import random
import string
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .cn import Bin, ConfusionNetwork, Hypothesis, Path, normalize_bin
from .errors import StructureError


@dataclass(frozen=True)
class EditNoise:
    """Per-token probabilities of the confusable edit operations."""

    substitution: float = 0.7
    split: float = 0.1
    merge: float = 0.1
    drop: float = 0.1

    def __post_init__(self):
        for name in ("substitution", "split", "merge", "drop"):
            p = getattr(self, name)
            if not (0.0 <= p <= 1.0):
                raise StructureError(f"{name} probability must be in [0, 1]")


@dataclass(frozen=True)
class CorruptionModel:
    mean_words_per_bin: float = 2.2
    confusables_per_bin: int = 4
    true_top1_probability: float = 0.8
    score_concentration: float = 0.4
    edit_noise: EditNoise = field(default_factory=EditNoise)
    rng_seed: int = 0

    def __post_init__(self):
        if not (1.0 <= self.mean_words_per_bin <= 3.0):
            raise StructureError("mean_words_per_bin must be in [1, 3]")
        if self.confusables_per_bin < 1:
            raise StructureError("confusables_per_bin must be at least 1")
        if not (0.0 <= self.true_top1_probability <= 1.0):
            raise StructureError("true_top1_probability must be in [0, 1]")
        if self.score_concentration <= 0:
            raise StructureError("score_concentration must be positive")


def _group_size_probs(mean: float) -> tuple[float, float, float]:
    # mean = 2 + (p3 - p1); leftover mass spreads evenly over the three sizes
    d = mean - 2.0
    q = (1.0 - abs(d)) / 3.0
    if d >= 0:
        return (q, q, q + d)
    return (q - d, q, q)


def segment_transcript(
    words: Sequence[str], model: CorruptionModel, rng: Optional[random.Random] = None
) -> list[tuple[str, ...]]:
    """Partition words into consecutive groups of one to three words whose
    expected size is mean_words_per_bin."""
    words = tuple(words)
    if not words:
        raise StructureError("cannot segment an empty transcript")
    if rng is None:
        rng = random.Random(model.rng_seed)
    p1, p2, p3 = _group_size_probs(model.mean_words_per_bin)
    groups: list[tuple[str, ...]] = []
    i = 0
    while i < len(words):
        r = rng.random()
        size = 1 if r < p1 else (2 if r < p1 + p2 else 3)
        size = min(size, len(words) - i)
        groups.append(words[i:i + size])
        i += size
    return groups


_ALPHABET = string.ascii_lowercase


def _perturb_token(token: str, rng: random.Random) -> str:
    ops = ["replace", "insert"]
    if len(token) > 1:
        ops.append("delete")
    op = rng.choice(ops)
    pos = rng.randrange(len(token))
    if op == "replace":
        old = token[pos]
        new = rng.choice([c for c in _ALPHABET if c != old.lower()] or ["x"])
        return token[:pos] + new + token[pos + 1:]
    if op == "insert":
        return token[:pos] + rng.choice(_ALPHABET) + token[pos:]
    return token[:pos] + token[pos + 1:]


def _corrupt_once(truth: tuple[str, ...], noise: EditNoise, rng: random.Random):
    out: list[str] = []
    i = 0
    changed = False
    while i < len(truth):
        tok = truth[i]
        r = rng.random()
        if r < noise.drop:
            changed = True
            i += 1
            continue
        r -= noise.drop
        if r < noise.merge and i + 1 < len(truth):
            out.append(tok + truth[i + 1])
            changed = True
            i += 2
            continue
        r -= noise.merge
        if r < noise.split and len(tok) > 1:
            cut = rng.randrange(1, len(tok))
            out.extend((tok[:cut], tok[cut:]))
            changed = True
            i += 1
            continue
        r -= noise.split
        if r < noise.substitution:
            out.append(_perturb_token(tok, rng))
            changed = True
            i += 1
            continue
        out.append(tok)
        i += 1
    if not changed and out:
        pos = rng.randrange(len(out))
        out[pos] = _perturb_token(out[pos], rng)
    return tuple(out)


def generate_confusables(
    truth: Sequence[str],
    k: int,
    model: CorruptionModel,
    rng: Optional[random.Random] = None,
) -> list[tuple[str, ...]]:
    """k distinct perturbations of the truth, none equal to it.

    When the edit space is too small (very short truths) fewer are returned,
    with a warning.
    """
    truth = tuple(truth)
    if k < 1:
        raise StructureError("k must be at least 1")
    if rng is None:
        rng = random.Random(model.rng_seed)
    found: list[tuple[str, ...]] = []
    seen = {truth}
    attempts = 0
    budget = 60 * k + 60
    while len(found) < k and attempts < budget:
        attempts += 1
        cand = _corrupt_once(truth, model.edit_noise, rng)
        if cand not in seen:
            seen.add(cand)
            found.append(cand)
    if len(found) < k:
        warnings.warn(
            f"only {len(found)} of {k} distinct confusables for {' '.join(truth)!r}",
            stacklevel=2,
        )
    return found


def _dirichlet(k: int, concentration: float, rng: random.Random) -> list[float]:
    draws = [rng.gammavariate(concentration, 1.0) for _ in range(k)]
    total = sum(draws)
    if total <= 0.0:  # gammavariate can underflow for tiny concentrations
        return [1.0 / k] * k
    return [d / total for d in draws]


def synthesize_cn(
    ref: Sequence[str],
    model: CorruptionModel,
    rng: Optional[random.Random] = None,
    utterance_id: str = "utt-000000",
) -> tuple[ConfusionNetwork, Path]:
    """Build one confusion network around a reference, returning the network
    and the path that spells the reference exactly."""
    ref = tuple(ref)
    if not ref:
        raise StructureError("reference must be non-empty")
    if rng is None:
        rng = random.Random(model.rng_seed)
    bins: list[Bin] = []
    true_choices: list[int] = []
    for group in segment_transcript(ref, model, rng):
        confusables = generate_confusables(group, model.confusables_per_bin, model, rng)
        masses = sorted(
            _dirichlet(1 + len(confusables), model.score_concentration, rng),
            reverse=True,
        )
        if rng.random() < model.true_top1_probability:
            true_rank = 0
        else:
            true_rank = rng.randint(1, min(2, len(confusables)))
        ranked: list[tuple[str, ...]] = [None] * (1 + len(confusables))
        ranked[true_rank] = group
        others = iter(confusables)
        for pos in range(len(ranked)):
            if ranked[pos] is None:
                ranked[pos] = next(others)
        floor = 1e-12  # keep log-probabilities finite
        raw = Bin(
            tuple(
                Hypothesis(toks, math.log(max(m, floor)))
                for toks, m in zip(ranked, masses)
            )
        )
        canonical = normalize_bin(raw)
        bins.append(canonical)
        true_choices.append(
            next(i for i, h in enumerate(canonical.hypotheses) if h.tokens == group)
        )
    cn = ConfusionNetwork(utterance_id, tuple(bins))
    total = sum(
        b.hypotheses[c].asr_logp for b, c in zip(cn.bins, true_choices)
    )
    return cn, Path(tuple(true_choices), total)


def derive_seed(base_seed: int, index: int) -> int:
    return (base_seed * 1_000_003 + index) & 0x7FFFFFFFFFFFFFFF


def synthesize_corpus(
    refs: Sequence[Sequence[str]],
    model: CorruptionModel,
    ids: Optional[Sequence[str]] = None,
) -> list[tuple[ConfusionNetwork, Path]]:
    """One network per reference; utterance i uses a stream derived from
    (rng_seed, i), so any prefix of the corpus is reproducible on its own."""
    if not refs:
        raise StructureError("no references to synthesize from")
    if ids is None:
        ids = [f"utt-{i:06d}" for i in range(len(refs))]
    if len(ids) != len(refs):
        raise StructureError("ids and refs must have equal length")
    out = []
    for i, (utt_id, ref) in enumerate(zip(ids, refs)):
        rng = random.Random(derive_seed(model.rng_seed, i))
        out.append(synthesize_cn(ref, model, rng, utt_id))
    return out


def write_truth_file(path: str, items: Sequence[tuple[str, Sequence[str]]]) -> None:
    """Sidecar with one line per utterance: id, tab, reference tokens."""
    with open(path, "w", encoding="utf-8") as fh:
        for utt_id, tokens in items:
            fh.write(f"{utt_id}\t{' '.join(tokens)}\n")


# ---------------------------------------------------------------------------
# deterministic text generator for experiments: a seeded first-order chain
# over pronounceable pseudo-words, so a trained n-gram model has structure
# to exploit

def _pseudo_word(rng: random.Random) -> str:
    consonants = "bdfgklmnprstvz"
    vowels = "aeiou"
    n_syll = rng.randint(2, 3)
    return "".join(
        rng.choice(consonants) + rng.choice(vowels) for _ in range(n_syll)
    )


def sample_sentences(
    n_sentences: int,
    rng_seed: int,
    vocab_size: int = 60,
    min_len: int = 5,
    max_len: int = 10,
) -> list[tuple[str, ...]]:
    rng = random.Random(rng_seed)
    vocab: list[str] = []
    seen = set()
    while len(vocab) < vocab_size:
        w = _pseudo_word(rng)
        if w not in seen:
            seen.add(w)
            vocab.append(w)
    successors = {
        w: rng.sample(vocab, k=min(6, vocab_size)) for w in vocab
    }
    sentences = []
    for _ in range(n_sentences):
        length = rng.randint(min_len, max_len)
        w = rng.choice(vocab)
        sent = [w]
        for _ in range(length - 1):
            w = rng.choice(successors[w])
            sent.append(w)
        sentences.append(tuple(sent))
    return sentences
