"""Word error rate and oracle error rates.

Unit edit costs everywhere. Among minimal-cost alignments the backtrace
prefers more hits and then fewer insertions, which pins down the reported
substitution/insertion/deletion split deterministically.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

from .cn import Bin, ConfusionNetwork, Path, make_path
from .errors import ContractError, FormatError, StructureError

Tokens = Sequence[str]


@dataclass(frozen=True)
class EditStats:
    substitutions: int
    insertions: int
    deletions: int
    hits: int
    reference_length: int

    def __post_init__(self):
        if self.hits + self.substitutions + self.deletions != self.reference_length:
            raise StructureError(
                "inconsistent edit stats: hits+subs+dels != reference length"
            )

    @property
    def errors(self) -> int:
        return self.substitutions + self.insertions + self.deletions

    def __add__(self, other: "EditStats") -> "EditStats":
        return EditStats(
            self.substitutions + other.substitutions,
            self.insertions + other.insertions,
            self.deletions + other.deletions,
            self.hits + other.hits,
            self.reference_length + other.reference_length,
        )


def edit_distance(hyp: Tokens, ref: Tokens) -> EditStats:
    """Minimal-cost token alignment between a hypothesis and a reference.

    The DP state is the tuple (cost, -hits, insertions); minimizing it
    lexicographically realizes the declared tie-break. Tokens compare by
    exact equality; normalize the corpus beforehand if needed.
    """
    hyp = tuple(hyp)
    ref = tuple(ref)
    m, n = len(hyp), len(ref)
    # prev[j] aligns hyp[:i] against ref[:j]
    prev = [(j, 0, 0) for j in range(n + 1)]
    for i in range(1, m + 1):
        cur = [(prev[0][0] + 1, 0, i)]
        for j in range(1, n + 1):
            if hyp[i - 1] == ref[j - 1]:
                diag = (prev[j - 1][0], prev[j - 1][1] - 1, prev[j - 1][2])
            else:
                diag = (prev[j - 1][0] + 1, prev[j - 1][1], prev[j - 1][2])
            up = (prev[j][0] + 1, prev[j][1], prev[j][2] + 1)  # insertion
            left = (cur[j - 1][0] + 1, cur[j - 1][1], cur[j - 1][2])  # deletion
            cur.append(min(diag, up, left))
        prev = cur
    cost, neg_hits, ins = prev[n]
    hits = -neg_hits
    subs = m - hits - ins
    dels = n - hits - subs
    return EditStats(subs, ins, dels, hits, n)


def wer(stats: Union[EditStats, Iterable[EditStats]]) -> float:
    """Pooled word error rate: total errors over total reference length."""
    if isinstance(stats, EditStats):
        stats = [stats]
    total = EditStats(0, 0, 0, 0, 0)
    for st in stats:
        total = total + st
    if total.reference_length == 0:
        raise ContractError("total reference length is zero")
    return total.errors / total.reference_length


def oracle_wer_nbest(nbest: Sequence[Tokens], ref: Tokens) -> tuple[float, int]:
    """Lowest WER over an n-best list; ties go to the lowest index."""
    if not nbest:
        raise StructureError("n-best list is empty")
    ref = tuple(ref)
    if not ref:
        raise ContractError("reference is empty")
    best_errors, best_idx = None, None
    for i, hyp in enumerate(nbest):
        e = edit_distance(hyp, ref).errors
        if best_errors is None or e < best_errors:
            best_errors, best_idx = e, i
    return best_errors / len(ref), best_idx


def _window_costs(hyp: Tokens, ref: Tokens, j0: int) -> list[int]:
    """Edit cost of hyp against ref[j0:j] for every j >= j0."""
    a = len(hyp)
    col = list(range(a + 1))  # against the empty window
    out = [col[a]]
    for j in range(j0 + 1, len(ref) + 1):
        tok = ref[j - 1]
        nxt = [j - j0]
        for i in range(1, a + 1):
            best = col[i - 1] if hyp[i - 1] == tok else col[i - 1] + 1
            if col[i] + 1 < best:
                best = col[i] + 1
            if nxt[i - 1] + 1 < best:
                best = nxt[i - 1] + 1
            nxt.append(best)
        col = nxt
        out.append(col[a])
    return out


def oracle_wer_cn(cn: ConfusionNetwork, ref: Tokens) -> tuple[float, Path]:
    """Minimum WER over every path through the network.

    Dynamic program over (bin index, reference position): each bin consumes a
    contiguous (possibly empty) reference window, paying the edit cost of the
    chosen hypothesis against that window. Empty hypotheses can skip a window
    for free. Cost ties resolve to the lexicographically smallest choice
    vector, recovered by a greedy forward sweep against the backward table.
    """
    ref = tuple(ref)
    n = len(ref)
    if n == 0:
        raise ContractError("reference is empty")
    bins = cn.bins
    if not bins:
        return 1.0, Path((), 0.0)  # everything deleted

    # rows[b][h][j0][j - j0] = cost of hypothesis h of bin b vs ref[j0:j]
    rows = [
        [[_window_costs(h.tokens, ref, j0) for j0 in range(n + 1)] for h in b.hypotheses]
        for b in bins
    ]

    INF = 1 << 60
    back = [[INF] * (n + 1) for _ in range(len(bins) + 1)]
    back[len(bins)][n] = 0
    for b in range(len(bins) - 1, -1, -1):
        nxt = back[b + 1]
        for j0 in range(n + 1):
            best = INF
            for hrows in rows[b]:
                row = hrows[j0]
                for j in range(j0, n + 1):
                    c = row[j - j0] + nxt[j]
                    if c < best:
                        best = c
            back[b][j0] = best
    total = back[0][0]

    # forward greedy: smallest hypothesis index whose choice still allows an
    # optimal completion, tracked via exact prefix-cost tables
    fwd = {0: 0}
    choices: list[int] = []
    for b in range(len(bins)):
        nxt = back[b + 1]
        for h in range(len(bins[b].hypotheses)):
            cand: dict[int, int] = {}
            for j0, c0 in fwd.items():
                row = rows[b][h][j0]
                for j in range(j0, n + 1):
                    c = c0 + row[j - j0]
                    if c < cand.get(j, INF):
                        cand[j] = c
            if min((c + nxt[j] for j, c in cand.items()), default=INF) == total:
                choices.append(h)
                fwd = cand
                break
        else:  # pragma: no cover - the backward table guarantees feasibility
            raise AssertionError("no feasible hypothesis during reconstruction")
    return total / n, make_path(cn, choices)


# ---------------------------------------------------------------------------
# reference transcripts: one utterance per line, tokens space-separated,
# optionally prefixed by "utterance_id<TAB>"

def read_transcripts(path: str) -> list[tuple[Optional[str], tuple[str, ...]]]:
    out: list[tuple[Optional[str], tuple[str, ...]]] = []
    tabbed = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            if "\t" in line:
                utt_id, text = line.split("\t", 1)
                out.append((utt_id, tuple(text.split())))
                tabbed += 1
            else:
                out.append((None, tuple(line.split())))
    if tabbed and tabbed != len(out):
        raise FormatError(f"{path}: mix of id-prefixed and bare transcript lines")
    return out


def transcripts_by_id(path: str) -> dict[str, tuple[str, ...]]:
    entries = read_transcripts(path)
    if any(utt_id is None for utt_id, _ in entries):
        raise FormatError(f"{path}: utterance ids required but missing")
    return {utt_id: tokens for utt_id, tokens in entries}
