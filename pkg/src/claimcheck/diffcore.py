"""Word-level diffing: LCS edit scripts, per-word error tags, span extraction.

The diff is LCS-optimal (maximal keeps) with deterministic tie-breaking:
whenever several optimal scripts exist, claim words match the earliest
possible occurrence in the revision, and within a changed block deletions
precede insertions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import NoDivergence
from .textmodel import WordSequence, tokenize_words

KEEP = "keep"
DELETE = "delete"
INSERT = "insert"


@dataclass(frozen=True)
class DiffOp:
    kind: str  # keep | delete | insert
    word: str


DiffScript = tuple[DiffOp, ...]


@dataclass(frozen=True)
class ErrorTags:
    """Per-claim-word incorrectness labels derived from a revision diff."""

    words: WordSequence
    incorrect: tuple[bool, ...]

    def __post_init__(self):
        if len(self.incorrect) != len(self.words):
            raise ValueError("one tag per claim word")

    @property
    def incorrect_indices(self) -> frozenset[int]:
        return frozenset(i for i, bad in enumerate(self.incorrect) if bad)

    def to_json(self) -> dict:
        return {"words": list(self.words.words), "incorrect": list(self.incorrect)}


@dataclass(frozen=True)
class SpanDiff:
    """First contiguous change between two token sequences diverging at ``pos``.

    Replacing ``n_del`` tokens of the original at ``pos`` (0-based) with
    ``repl`` reproduces the alternative sequence through the change region.
    """

    pos: int
    n_del: int
    n_add: int
    repl: tuple[str, ...]

    def __post_init__(self):
        if len(self.repl) != self.n_add:
            raise ValueError("n_add must equal len(repl)")


def _as_words(seq: WordSequence | Sequence[str]) -> list[str]:
    return list(seq.words) if isinstance(seq, WordSequence) else list(seq)


def word_diff(a: WordSequence | Sequence[str], b: WordSequence | Sequence[str]) -> DiffScript:
    """LCS-optimal edit script turning word sequence ``a`` into ``b``."""
    aw, bw = _as_words(a), _as_words(b)

    # Trim the common prefix/suffix before the quadratic DP.
    lo = 0
    while lo < len(aw) and lo < len(bw) and aw[lo] == bw[lo]:
        lo += 1
    hi = 0
    while (hi < len(aw) - lo and hi < len(bw) - lo
           and aw[len(aw) - 1 - hi] == bw[len(bw) - 1 - hi]):
        hi += 1
    mid_a = aw[lo:len(aw) - hi]
    mid_b = bw[lo:len(bw) - hi]

    n, m = len(mid_a), len(mid_b)
    # L[i][j] = LCS length of mid_a[i:] vs mid_b[j:]
    L = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        row, nxt = L[i], L[i + 1]
        for j in range(m - 1, -1, -1):
            if mid_a[i] == mid_b[j]:
                row[j] = nxt[j + 1] + 1
            else:
                row[j] = nxt[j] if nxt[j] >= row[j + 1] else row[j + 1]

    ops: list[DiffOp] = [DiffOp(KEEP, w) for w in aw[:lo]]
    i = j = 0
    while i < n or j < m:
        if i < n and j < m and mid_a[i] == mid_b[j] and L[i][j] == L[i + 1][j + 1] + 1:
            ops.append(DiffOp(KEEP, mid_a[i]))
            i += 1
            j += 1
        elif i < n and L[i][j] == L[i + 1][j]:
            ops.append(DiffOp(DELETE, mid_a[i]))
            i += 1
        else:
            ops.append(DiffOp(INSERT, mid_b[j]))
            j += 1
    ops.extend(DiffOp(KEEP, w) for w in aw[len(aw) - hi:])
    return tuple(ops)


def replay_a(script: DiffScript) -> list[str]:
    """Reconstruct the first input (keeps + deletes)."""
    return [op.word for op in script if op.kind != INSERT]


def replay_b(script: DiffScript) -> list[str]:
    """Reconstruct the second input (keeps + inserts)."""
    return [op.word for op in script if op.kind != DELETE]


def keep_count(script: DiffScript) -> int:
    return sum(1 for op in script if op.kind == KEEP)


def tag_errors(claim: str, revision: str) -> ErrorTags:
    """Tag each claim word incorrect iff the revision removed or replaced it."""
    claim_ws = tokenize_words(claim)
    revision_ws = tokenize_words(revision)
    script = word_diff(claim_ws, revision_ws)
    tags = []
    for op in script:
        if op.kind == KEEP:
            tags.append(False)
        elif op.kind == DELETE:
            tags.append(True)
    return ErrorTags(claim_ws, tuple(tags))


def diff_at_pos(r: Sequence[str], r_prime: Sequence[str], pos: int) -> SpanDiff:
    """Extract the minimal contiguous change where ``r_prime`` departs from ``r``.

    Both sequences must agree on ``r[:pos]`` and differ at ``pos`` (0-based).
    Changes past the first divergence region are ignored: the result covers
    ops up to the first common token the suffix diff re-aligns on.
    """
    r, r_prime = list(r), list(r_prime)
    if pos < 0 or pos >= len(r):
        raise ValueError(f"pos {pos} outside sequence of length {len(r)}")
    if r[:pos] != r_prime[:pos]:
        raise ValueError("sequences must share the prefix before pos")
    if pos < len(r_prime) and r_prime[pos] == r[pos]:
        raise NoDivergence(f"sequences agree at position {pos}")

    script = word_diff(r[pos:], r_prime[pos:])
    n_del = 0
    repl: list[str] = []
    for op in script:
        if op.kind == KEEP:
            break
        if op.kind == DELETE:
            n_del += 1
        else:
            repl.append(op.word)
    return SpanDiff(pos, n_del, len(repl), tuple(repl))
