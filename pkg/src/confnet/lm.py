"""Backoff n-gram language model with streaming continuation scoring.

Smoothing is fixed-weight interpolation: at each order, lam of the mass goes
to the maximum-likelihood estimate and (1 - lam) backs off to the next lower
order, bottoming out at a uniform distribution over every predictable symbol
(the corpus vocabulary, the unknown symbol, and sentence-end). Contexts never
seen in training back off with weight one. This keeps every conditional a
proper distribution at any context, which the tests verify directly.

Any object exposing initial_state / score_continuation / finalize /
score_sequence can stand in for NGramLm in the rescoring code.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import ContractError, FormatError, StructureError

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"
RESERVED = (BOS, EOS, UNK)

NEG_INF = float("-inf")


@dataclass(frozen=True)
class Vocabulary:
    """Corpus tokens, sorted and deduplicated; reserved symbols live outside.

    Predictable events are the tokens plus UNK plus EOS. BOS only ever appears
    in contexts.
    """

    tokens: tuple[str, ...]

    def __post_init__(self):
        toks = tuple(sorted(set(self.tokens)))
        object.__setattr__(self, "tokens", toks)
        if not toks:
            raise StructureError("vocabulary is empty")
        for t in toks:
            if t in RESERVED:
                raise StructureError(f"token {t!r} collides with a reserved symbol")
            if not t or any(c.isspace() for c in t):
                raise StructureError(f"invalid vocabulary token {t!r}")
        object.__setattr__(self, "_token_set", frozenset(toks))

    @property
    def prediction_events(self) -> tuple[str, ...]:
        return self.tokens + (UNK, EOS)

    def map_token(self, token: str) -> str:
        if token in self._token_set or token in (UNK, EOS):
            return token
        return UNK


@dataclass(frozen=True)
class LmState:
    context: tuple[str, ...]


Context = tuple[str, ...]


class NGramLm:
    """Immutable once built; share freely across workers."""

    def __init__(
        self,
        order: int,
        vocab: Vocabulary,
        logp: dict[Context, dict[str, float]],
        backoff: dict[Context, float],
        smoothing: float,
    ):
        if order < 1:
            raise StructureError("order must be at least 1")
        self.order = order
        self.vocab = vocab
        self.logp = logp
        self.backoff = backoff
        self.smoothing = smoothing
        self._floor_logp = -math.log(len(vocab.prediction_events))

    # -- conditional scoring ------------------------------------------------

    def cond_logp(self, context: Context, token: str) -> float:
        """log p(token | context); context longer than order-1 is truncated."""
        if token != EOS:
            token = self.vocab.map_token(token)
        ctx = tuple(context)[max(0, len(context) - (self.order - 1)):]
        acc = 0.0
        while True:
            table = self.logp.get(ctx)
            if table is not None:
                lp = table.get(token)
                if lp is not None:
                    return acc + lp
                acc += self.backoff.get(ctx, 0.0)
            if not ctx:
                return acc + self._floor_logp
            ctx = ctx[1:]

    # -- sequence and streaming scoring --------------------------------------

    def initial_state(self) -> LmState:
        return LmState((BOS,) * (self.order - 1))

    def _advance(self, context: Context, token: str) -> Context:
        if self.order == 1:
            return ()
        return (context + (token,))[-(self.order - 1):]

    def score_continuation(
        self, state: LmState, tokens: Sequence[str]
    ) -> tuple[float, LmState]:
        total = 0.0
        ctx = state.context
        for tok in tokens:
            mapped = self.vocab.map_token(tok)
            total += self.cond_logp(ctx, mapped)
            ctx = self._advance(ctx, mapped)
        return total, LmState(ctx)

    def finalize(self, state: LmState) -> float:
        """Score the sentence-end event; apply exactly once per utterance."""
        return self.cond_logp(state.context, EOS)

    def score_sequence(self, tokens: Sequence[str]) -> float:
        total, state = self.score_continuation(self.initial_state(), tokens)
        return total + self.finalize(state)


def train_ngram(
    corpus: Sequence[Sequence[str]], order: int, smoothing: float = 0.9
) -> NGramLm:
    """Interpolated maximum-likelihood n-gram estimation.

    smoothing is the weight lam given to the MLE at each order; (1 - lam)
    backs off. lam = 1 is pure MLE (unseen events then score -inf).
    """
    corpus = [tuple(sent) for sent in corpus]
    if not corpus or all(not s for s in corpus):
        raise StructureError("training corpus is empty")
    if order < 1:
        raise StructureError("order must be at least 1")
    if not (0.0 < smoothing <= 1.0):
        raise StructureError(f"smoothing must be in (0, 1], got {smoothing}")

    vocab = Vocabulary(tuple(t for sent in corpus for t in sent))
    lam = smoothing

    # counts[k][ctx][tok] with ctx of length k; events are tokens plus EOS
    counts: list[dict[Context, dict[str, int]]] = [dict() for _ in range(order)]
    for sent in corpus:
        padded = (BOS,) * (order - 1) + sent + (EOS,)
        for i in range(order - 1, len(padded)):
            tok = padded[i]
            for k in range(order):
                ctx = padded[i - k:i]
                by_tok = counts[k].setdefault(ctx, {})
                by_tok[tok] = by_tok.get(tok, 0) + 1

    events = vocab.prediction_events
    uniform = 1.0 / len(events)
    logp: dict[Context, dict[str, float]] = {}
    backoff: dict[Context, float] = {}
    log_backoff_weight = math.log1p(-lam) if lam < 1.0 else NEG_INF

    probs_prev: dict[Context, dict[str, float]] = {}
    for k in range(order):
        probs_here: dict[Context, dict[str, float]] = {}
        for ctx, by_tok in counts[k].items():
            total = sum(by_tok.values())
            table = {}
            for tok, c in by_tok.items():
                mle = c / total
                if k == 0:
                    lower = uniform
                else:
                    lower = _eval_prob(probs_prev, ctx[1:], tok, uniform, lam, k - 1)
                table[tok] = lam * mle + (1.0 - lam) * lower
            probs_here[ctx] = table
            logp[ctx] = {tok: _safe_log(p) for tok, p in sorted(table.items())}
            backoff[ctx] = log_backoff_weight
        probs_prev = dict(probs_prev)
        probs_prev.update(probs_here)

    return NGramLm(order, vocab, logp, backoff, lam)


def _safe_log(p: float) -> float:
    return math.log(p) if p > 0.0 else NEG_INF


def _eval_prob(
    probs: dict[Context, dict[str, float]],
    ctx: Context,
    tok: str,
    uniform: float,
    lam: float,
    level: int,
) -> float:
    """Probability under the already-built lower orders (linear domain)."""
    weight = 1.0
    while True:
        table = probs.get(ctx)
        if table is not None:
            p = table.get(tok)
            if p is not None:
                return weight * p
            weight *= 1.0 - lam
        if not ctx:
            return weight * uniform
        ctx = ctx[1:]


def uniform_lm(vocab: Vocabulary) -> NGramLm:
    """Order-1 model assigning every predictable event the same probability."""
    u = -math.log(len(vocab.prediction_events))
    table = {tok: u for tok in sorted(vocab.prediction_events)}
    return NGramLm(1, vocab, {(): table}, {(): NEG_INF}, 1.0)


def read_corpus(path: str) -> list[tuple[str, ...]]:
    """Training text: one utterance per line, tokens space-separated."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            tokens = tuple(line.split())
            if tokens:
                out.append(tokens)
    return out


def perplexity(lm: NGramLm, corpus: Sequence[Sequence[str]]) -> float:
    total_logp = 0.0
    total_events = 0
    for sent in corpus:
        total_logp += lm.score_sequence(sent)
        total_events += len(sent) + 1  # EOS counts as an event
    if total_events == 0:
        raise ContractError("perplexity over an empty corpus")
    return math.exp(-total_logp / total_events)


# ---------------------------------------------------------------------------
# model file: versioned plain text, tab-separated records. Contexts are
# space-joined token strings (empty for the unigram context). Floats use
# repr, so loading reproduces the exact model. Lines are emitted in sorted
# order, which makes retraining byte-reproducible.

_MAGIC = "ngramlm"
_VERSION = "1"


def write_lm(lm: NGramLm, fh) -> None:
    fh.write(f"{_MAGIC}\t{_VERSION}\n")
    fh.write(f"order\t{lm.order}\n")
    fh.write(f"smoothing\t{lm.smoothing!r}\n")
    fh.write("vocab\t" + " ".join(lm.vocab.tokens) + "\n")
    for ctx in sorted(lm.backoff):
        fh.write(f"backoff\t{' '.join(ctx)}\t{lm.backoff[ctx]!r}\n")
    for ctx in sorted(lm.logp):
        joined = " ".join(ctx)
        for tok in sorted(lm.logp[ctx]):
            fh.write(f"ngram\t{joined}\t{tok}\t{lm.logp[ctx][tok]!r}\n")


def dumps_lm(lm: NGramLm) -> str:
    buf = io.StringIO()
    write_lm(lm, buf)
    return buf.getvalue()


def save_lm(lm: NGramLm, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        write_lm(lm, fh)


def load_lm(path: str) -> NGramLm:
    order: Optional[int] = None
    smoothing: Optional[float] = None
    vocab: Optional[Vocabulary] = None
    logp: dict[Context, dict[str, float]] = {}
    backoff: dict[Context, float] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            tag = parts[0]
            try:
                if lineno == 1:
                    if parts != [_MAGIC, _VERSION]:
                        raise FormatError(f"{path}: not a {_MAGIC} v{_VERSION} file")
                elif tag == "order":
                    order = int(parts[1])
                elif tag == "smoothing":
                    smoothing = float(parts[1])
                elif tag == "vocab":
                    vocab = Vocabulary(tuple(parts[1].split(" ")))
                elif tag == "backoff":
                    ctx = tuple(parts[1].split(" ")) if parts[1] else ()
                    backoff[ctx] = float(parts[2])
                elif tag == "ngram":
                    ctx = tuple(parts[1].split(" ")) if parts[1] else ()
                    logp.setdefault(ctx, {})[parts[2]] = float(parts[3])
                else:
                    raise FormatError(f"unknown record {tag!r}")
            except (IndexError, ValueError) as exc:
                raise FormatError(f"{path}:{lineno}: {exc}")
    if order is None or smoothing is None or vocab is None:
        raise FormatError(f"{path}: missing order, smoothing, or vocab record")
    return NGramLm(order, vocab, logp, backoff, smoothing)
