"""Second-pass rescoring of confusion networks.

The objective for a path W1..Wk is

    combined = log p_lm(W1..Wk) + alpha * sum_i log p_asr(Wi)

maximized exactly (exhaustive enumeration), by a streaming bin-by-bin beam,
or by coordinate ascent over bins (greedy conditional argmax, optionally
stochastic sampling). Every method applies the sentence-end event exactly
once, so their scores are directly comparable.

hypotheses_scored counts candidate evaluations: n-best reranking scores the
list it reranks, the beam counts (partial x bin hypothesis) expansions, and
coordinate ascent counts every conditional candidate, i.e. passes times the
total bin size. That is the efficiency number corpus evaluation averages.
"""

from __future__ import annotations

import heapq
import itertools
import math
import random
from dataclasses import dataclass
from typing import Optional, Sequence

from . import metrics
from .cn import (
    Bin,
    ConfusionNetwork,
    Path,
    best_asr_path,
    bin_entropy,
    flatten,
    make_path,
    normalize_bin,
    path_count,
    prune_bin,
)
from .errors import ContractError, StructureError

TRAVERSALS = ("L2R", "H2L")
MODES = ("greedy", "stochastic")
METHODS = ("onebest", "nbest", "streaming", "gibbs", "exhaustive")


@dataclass(frozen=True)
class RescoringConfig:
    alpha: float = 0.3
    beam_width: int = 8
    nbest_size: int = 100
    prune_threshold: float = 0.005
    traversal: str = "L2R"
    passes: int = 1
    mode: str = "greedy"
    temperature: float = 1.0
    rng_seed: int = 0
    max_paths: int = 1_000_000

    def __post_init__(self):
        if self.alpha < 0:
            raise StructureError("alpha must be non-negative")
        if self.beam_width < 1 or self.nbest_size < 1:
            raise StructureError("beam_width and nbest_size must be at least 1")
        if not (0.0 <= self.prune_threshold < 1.0):
            raise StructureError("prune_threshold must be in [0, 1)")
        if self.traversal not in TRAVERSALS:
            raise StructureError(f"traversal must be one of {TRAVERSALS}")
        if self.passes < 1:
            raise StructureError("passes must be at least 1")
        if self.mode not in MODES:
            raise StructureError(f"mode must be one of {MODES}")
        if self.temperature <= 0:
            raise StructureError("temperature must be positive")


@dataclass(frozen=True)
class ScoredPath:
    path: Path
    asr_logp: float
    lm_logp: float
    combined: float


@dataclass(frozen=True)
class RescoreResult:
    best: ScoredPath
    hypotheses_scored: int


def combined_score(cn: ConfusionNetwork, path: Path, lm, alpha: float) -> ScoredPath:
    path = make_path(cn, path.choices)  # recompute the ASR sum from choices
    lm_logp = lm.score_sequence(flatten(cn, path))
    return ScoredPath(path, path.asr_logp, lm_logp, lm_logp + alpha * path.asr_logp)


def extract_nbest(cn: ConfusionNetwork, n: int) -> list[Path]:
    """Top-n paths by ASR score via lazy best-first search of the product
    space; bins must be in canonical (sorted) order. Ties break by choice
    vector. Asking for more paths than exist returns them all."""
    if n < 1:
        raise StructureError("n must be at least 1")
    if not cn.bins:
        return [Path((), 0.0)]
    sizes = [len(b) for b in cn.bins]

    def score(choices: tuple[int, ...]) -> float:
        return sum(b.hypotheses[c].asr_logp for b, c in zip(cn.bins, choices))

    root = (0,) * len(sizes)
    heap = [(-score(root), root)]
    seen = {root}
    out: list[Path] = []
    while heap and len(out) < n:
        neg, choices = heapq.heappop(heap)
        out.append(Path(choices, -neg))
        for i, c in enumerate(choices):
            if c + 1 < sizes[i]:
                nxt = choices[:i] + (c + 1,) + choices[i + 1:]
                if nxt not in seen:
                    seen.add(nxt)
                    heapq.heappush(heap, (-score(nxt), nxt))
    return out


def rerank_nbest(
    paths: Sequence[Path], cn: ConfusionNetwork, lm, alpha: float
) -> list[ScoredPath]:
    """Attach LM and combined scores, then stable-sort by combined score."""
    if not paths:
        raise StructureError("nothing to rerank: empty path list")
    scored = [combined_score(cn, p, lm, alpha) for p in paths]
    return sorted(scored, key=lambda sp: -sp.combined)


def onebest_rescore(cn: ConfusionNetwork, lm, alpha: float) -> RescoreResult:
    """Score the first-pass 1-best; the single hypothesis the LM sees."""
    return RescoreResult(combined_score(cn, best_asr_path(cn), lm, alpha), 1)


def nbest_rescore(cn: ConfusionNetwork, lm, config: RescoringConfig) -> RescoreResult:
    paths = extract_nbest(cn, config.nbest_size)
    ranked = rerank_nbest(paths, cn, lm, config.alpha)
    return RescoreResult(ranked[0], len(paths))


@dataclass(frozen=True)
class _Partial:
    choices: tuple[int, ...]
    asr_logp: float
    lm_logp: float
    state: object


def streaming_rescore(cn: ConfusionNetwork, lm, config: RescoringConfig) -> RescoreResult:
    """Bin-by-bin beam search; suitable for decoding while bins arrive.

    Partials carry an LM state so continuations are scored incrementally;
    after each bin only the top beam_width by partial combined score survive.
    The sentence-end event is added before the final argmax.
    """
    alpha = config.alpha
    partials = [_Partial((), 0.0, 0.0, lm.initial_state())]
    scored = 0
    for b in cn.bins:
        expanded = []
        for p in partials:
            for h, hyp in enumerate(b.hypotheses):
                lp, state = lm.score_continuation(p.state, hyp.tokens)
                expanded.append(
                    _Partial(
                        p.choices + (h,),
                        p.asr_logp + hyp.asr_logp,
                        p.lm_logp + lp,
                        state,
                    )
                )
        scored += len(expanded)
        expanded.sort(key=lambda q: (-(q.lm_logp + alpha * q.asr_logp), q.choices))
        partials = expanded[: config.beam_width]
    best = None
    for p in partials:
        lm_total = p.lm_logp + lm.finalize(p.state)
        sp = ScoredPath(
            Path(p.choices, p.asr_logp), p.asr_logp, lm_total,
            lm_total + alpha * p.asr_logp,
        )
        key = (-sp.combined, sp.path.choices)
        if best is None or key < best[0]:
            best = (key, sp)
    return RescoreResult(best[1], scored)


def bin_visit_order(cn: ConfusionNetwork, traversal: str) -> list[int]:
    """L2R: identity. H2L: bins sorted by entropy, highest first; ties keep
    the lower index first."""
    if traversal not in TRAVERSALS:
        raise StructureError(f"traversal must be one of {TRAVERSALS}")
    idx = list(range(len(cn.bins)))
    if traversal == "L2R":
        return idx
    entropies = [bin_entropy(b) for b in cn.bins]
    return sorted(idx, key=lambda i: (-entropies[i], i))


def gibbs_rescore(cn: ConfusionNetwork, lm, config: RescoringConfig) -> RescoreResult:
    """Coordinate search over bins, one bin at a time, all others held fixed.

    Starts from the first-pass best path. Greedy mode takes the conditional
    argmax at every visit (iterated conditional modes); stochastic mode
    samples proportional to exp(combined / temperature). Either way the best
    path ever scored is returned. Every candidate is rescored as a full
    sequence, so hypotheses_scored is exactly passes times the total bin
    size; there is no early exit.
    """
    if not cn.bins:
        return RescoreResult(combined_score(cn, Path((), 0.0), lm, config.alpha), 0)
    order = bin_visit_order(cn, config.traversal)
    rng = random.Random(config.rng_seed)
    current = list(best_asr_path(cn).choices)
    best: Optional[ScoredPath] = None
    scored = 0
    for _ in range(config.passes):
        for b in order:
            candidates = []
            for h in range(len(cn.bins[b])):
                trial = current.copy()
                trial[b] = h
                candidates.append(combined_score(cn, make_path(cn, trial), lm, config.alpha))
            scored += len(candidates)
            for sp in candidates:
                if best is None or (-sp.combined, sp.path.choices) < (
                    -best.combined,
                    best.path.choices,
                ):
                    best = sp
            if config.mode == "greedy":
                pick = min(
                    range(len(candidates)),
                    key=lambda h: (-candidates[h].combined, h),
                )
            else:
                pick = _sample_index(
                    [sp.combined for sp in candidates], config.temperature, rng,
                    fallback=current[b],
                )
            current[b] = pick
    return RescoreResult(best, scored)


def _sample_index(
    scores: Sequence[float], temperature: float, rng: random.Random, fallback: int
) -> int:
    top = max(scores)
    if top == float("-inf"):
        return fallback
    weights = [math.exp((s - top) / temperature) for s in scores]
    total = sum(weights)
    r = rng.random() * total
    acc = 0.0
    for i, w in enumerate(weights):
        acc += w
        if r < acc:
            return i
    return len(scores) - 1


def exhaustive_argmax(
    cn: ConfusionNetwork, lm, alpha: float, max_paths: int
) -> ScoredPath:
    """Global argmax of the combined score by enumerating every path.

    Refuses to run when the path count exceeds max_paths. Ties resolve to the
    lexicographically smallest choice vector because enumeration is in choice
    order and only strict improvements replace the incumbent.
    """
    pc = path_count(cn)
    if pc.overflow or pc.count > max_paths:
        raise ContractError(
            f"{cn.utterance_id!r} has {'>' if pc.overflow else ''}{pc.count} paths, "
            f"over the limit of {max_paths}"
        )
    best: Optional[ScoredPath] = None
    for choices in itertools.product(*(range(len(b)) for b in cn.bins)):
        sp = combined_score(cn, Path(choices, 0.0), lm, alpha)
        if best is None or sp.combined > best.combined:
            best = sp
    return best


# ---------------------------------------------------------------------------
# corpus-level evaluation

@dataclass(frozen=True)
class UtteranceEval:
    utterance_id: str
    result: RescoreResult
    tokens: tuple[str, ...]
    edit: Optional[metrics.EditStats]


@dataclass(frozen=True)
class CorpusEval:
    wer: Optional[float]
    mean_hypotheses_scored: float
    per_utterance: tuple[UtteranceEval, ...]


def prepare_cn(cn: ConfusionNetwork, prune_threshold: float) -> ConfusionNetwork:
    """Normalize every bin, then prune at the threshold."""
    bins = tuple(prune_bin(normalize_bin(b), prune_threshold) for b in cn.bins)
    return ConfusionNetwork(cn.utterance_id, bins, cn.segment_spans)


def _run_method(
    prepared: ConfusionNetwork, lm, config: RescoringConfig, method: str
) -> RescoreResult:
    if method == "onebest":
        return onebest_rescore(prepared, lm, config.alpha)
    if method == "nbest":
        return nbest_rescore(prepared, lm, config)
    if method == "streaming":
        return streaming_rescore(prepared, lm, config)
    if method == "gibbs":
        return gibbs_rescore(prepared, lm, config)
    pc = path_count(prepared)
    sp = exhaustive_argmax(prepared, lm, config.alpha, config.max_paths)
    return RescoreResult(sp, pc.count)


def rescore_one(
    cn: ConfusionNetwork, lm, config: RescoringConfig, method: str
) -> tuple[RescoreResult, tuple[str, ...]]:
    """Normalize and prune a network, run one method, and return the result
    together with the winning token sequence."""
    if method not in METHODS:
        raise StructureError(f"unknown method {method!r}; expected one of {METHODS}")
    prepared = prepare_cn(cn, config.prune_threshold)
    res = _run_method(prepared, lm, config, method)
    return res, flatten(prepared, res.best.path)


def evaluate_corpus(
    cns: Sequence[ConfusionNetwork],
    refs: dict[str, Sequence[str]],
    lm,
    config: RescoringConfig,
    method: str,
) -> CorpusEval:
    missing = [cn.utterance_id for cn in cns if cn.utterance_id not in refs]
    if missing:
        raise StructureError(
            "no reference for utterance ids: " + ", ".join(sorted(missing))
        )
    per_utt = []
    for cn in cns:
        res, tokens = rescore_one(cn, lm, config, method)
        edit = metrics.edit_distance(tokens, tuple(refs[cn.utterance_id]))
        per_utt.append(UtteranceEval(cn.utterance_id, res, tokens, edit))
    pooled = metrics.wer([u.edit for u in per_utt])
    mean_scored = sum(u.result.hypotheses_scored for u in per_utt) / len(per_utt)
    return CorpusEval(pooled, mean_scored, tuple(per_utt))
