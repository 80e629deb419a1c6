"""Fact-checking orchestration over a generation backend.

One sentence at a time: render the prompt, decode evidence + revision, then
optionally push error recall up by re-decoding low-confidence spans
(thresholded editing) or by flagging low-probability tokens outright.
Word-level edits and tags come from diffing the revision against the claim.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .diffcore import (
    DELETE, INSERT, KEEP, DiffScript, ErrorTags, diff_at_pos, word_diff,
)
from .errors import (
    BudgetUnreachable, IterationCapExceeded, LengthMismatch, MalformedOutput,
)
from .genbackend import (
    Backend, BackendQuery, TERMINAL, greedy_complete, run_fact_check_pass,
)
from .promptio import (
    DEFAULT_OUTPUT_BUDGET, PromptTemplate, build_input,
    count_units, parse_output, render_document_section, render_summary_section,
    truncate_document,
)
from .textmodel import ClaimContext, Document, WordSequence, tokenize_words

PLAIN = "plain"
THRESHOLDED = "thresholded"
LOW_PROB_FLAG = "low_prob_flag"

_MODES = (PLAIN, THRESHOLDED, LOW_PROB_FLAG)

_REVISION_MARKER = "REVISION:"


@dataclass(frozen=True)
class DecodingConfig:
    """How a revision is decoded and post-processed.

    ``tau`` is the intervention threshold in thresholded mode and the flag
    threshold in low_prob_flag mode; plain mode ignores it.
    """

    tau: float = 0.0
    mode: str = PLAIN
    max_iterations: int | None = None
    terminal: str = TERMINAL

    def __post_init__(self):
        if not 0.0 <= self.tau < 1.0:
            raise ValueError("tau must lie in [0, 1); 1 would reject every token")
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")


@dataclass(frozen=True)
class EditSpan:
    """One suggested change: claim words [start, end) become ``replacement``.

    ``start == end`` is a pure insertion; an empty replacement is a deletion.
    """

    start: int
    end: int
    replacement: tuple[str, ...]
    status: str = "suggested"

    def __post_init__(self):
        if self.start < 0 or self.end < self.start:
            raise ValueError("span bounds must satisfy 0 <= start <= end")
        if self.status not in ("suggested", "accepted", "rejected"):
            raise ValueError(f"unknown edit status {self.status!r}")

    def to_payload(self) -> dict:
        return {
            "start": self.start,
            "end": self.end,
            "replacement": list(self.replacement),
            "status": self.status,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "EditSpan":
        return cls(
            start=payload["start"],
            end=payload["end"],
            replacement=tuple(payload["replacement"]),
            status=payload.get("status", "suggested"),
        )


@dataclass(frozen=True)
class FactCheckResult:
    """Outcome of checking one claim against the document."""

    claim: str
    evidence_ids: frozenset[int]
    revision: str
    edits: tuple[EditSpan, ...]
    tags: ErrorTags
    per_token_probs: tuple[float, ...] | None = None
    # claim word indices flagged by the low-probability baseline (flag mode only)
    flagged_words: frozenset[int] | None = None

    def __post_init__(self):
        n = len(self.tags.words)
        for span in self.edits:
            if span.end > n:
                raise ValueError("edit span exceeds claim length")

    def to_payload(self) -> dict:
        return {
            "claim": self.claim,
            "evidence": sorted(self.evidence_ids),
            "revision": self.revision,
            "edits": [e.to_payload() for e in self.edits],
            "tags": self.tags.to_json(),
            "per_token_probs": (
                list(self.per_token_probs) if self.per_token_probs is not None else None
            ),
            "flagged_words": (
                sorted(self.flagged_words) if self.flagged_words is not None else None
            ),
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "FactCheckResult":
        tags = payload["tags"]
        probs = payload.get("per_token_probs")
        flagged = payload.get("flagged_words")
        return cls(
            claim=payload["claim"],
            evidence_ids=frozenset(payload["evidence"]),
            revision=payload["revision"],
            edits=tuple(EditSpan.from_payload(e) for e in payload["edits"]),
            tags=ErrorTags(
                WordSequence(tuple(tags["words"])), tuple(tags["incorrect"])
            ),
            per_token_probs=tuple(probs) if probs is not None else None,
            flagged_words=frozenset(flagged) if flagged is not None else None,
        )


@dataclass(frozen=True)
class AuditReport:
    """Per-sentence results for a whole passage plus the any-edit verdict."""

    sentences: tuple[FactCheckResult, ...]
    overall_consistent: bool

    def __post_init__(self):
        derived = all(not r.edits for r in self.sentences)
        if self.overall_consistent != derived:
            raise ValueError("overall_consistent must match the any-edit rule")

    @classmethod
    def from_results(cls, results: Sequence[FactCheckResult]) -> "AuditReport":
        results = tuple(results)
        return cls(results, all(not r.edits for r in results))

    def to_json(self) -> dict:
        return {
            "sentences": [
                {
                    "claim": r.claim,
                    "evidence": sorted(r.evidence_ids),
                    "revision": r.revision,
                    "edits": [e.to_payload() for e in r.edits],
                }
                for r in self.sentences
            ],
            "consistent": self.overall_consistent,
        }


@dataclass(frozen=True)
class DecodeStats:
    """Instrumentation from one thresholded-edit run."""

    iterations: int
    interventions: int
    # parallel to the output tokens: True where an intervention wrote the token
    edited_mask: tuple[bool, ...]


def _tags_from(claim_words: WordSequence, script: DiffScript) -> ErrorTags:
    tags = [op.kind == DELETE for op in script if op.kind != INSERT]
    return ErrorTags(claim_words, tuple(tags))


def edit_spans(script: DiffScript) -> tuple[EditSpan, ...]:
    """Collapse a diff script into claim-anchored replacement spans."""
    spans: list[EditSpan] = []
    claim_at = 0
    start: int | None = None
    deleted = 0
    inserted: list[str] = []

    def flush():
        nonlocal start, deleted, inserted
        if start is not None:
            spans.append(EditSpan(start, start + deleted, tuple(inserted)))
            start, deleted, inserted = None, 0, []

    for op in script:
        if op.kind == KEEP:
            flush()
            claim_at += 1
        elif op.kind == DELETE:
            if start is None:
                start = claim_at
            deleted += 1
            claim_at += 1
        else:
            if start is None:
                start = claim_at
            inserted.append(op.word)
    flush()
    return tuple(spans)


def thresholded_edit(
    query: BackendQuery,
    r: Sequence[str],
    cfg: DecodingConfig,
    backend: Backend,
    *,
    context: Sequence[str] = (),
) -> list[str]:
    tokens, _ = thresholded_edit_with_stats(query, r, cfg, backend, context=context)
    return tokens


def thresholded_edit_with_stats(
    query: BackendQuery,
    r: Sequence[str],
    cfg: DecodingConfig,
    backend: Backend,
    *,
    context: Sequence[str] = (),
) -> tuple[list[str], DecodeStats]:
    """Re-decode low-confidence spans of a greedy revision.

    Scans the revision left to right. Wherever the backend's probability for
    the current token is at or below tau, the runner-up token is substituted,
    the rest is re-completed greedily, and only the first divergent span is
    committed; the scan resumes after the inserted tokens. ``context`` holds
    the decoded tokens preceding the revision (the evidence section), which
    are part of every backend prefix but never edited.

    A runner-up equal to the terminal marker truncates the revision at the
    current position. Positions with no runner-up at all are left alone.
    """
    r = list(r)
    edited = [False] * len(r)
    context = tuple(context)
    cap = cfg.max_iterations or 4 * (len(r) + query.max_new_tokens)
    pos = 0
    iterations = 0
    interventions = 0
    while pos < len(r):
        iterations += 1
        if iterations > cap:
            raise IterationCapExceeded(
                f"{iterations} iterations on a revision of {len(r)} tokens"
            )
        dist = backend.next_token_probs(query, context + tuple(r[:pos]))
        if dist.prob_of(r[pos]) <= cfg.tau:
            alternative = dist.runner_up(excluding=r[pos])
            if alternative is not None:
                alt_token, _ = alternative
                if alt_token == cfg.terminal:
                    r_prime = r[:pos]
                else:
                    completion = greedy_complete(
                        backend, query, context + tuple(r[:pos]) + (alt_token,)
                    )
                    r_prime = r[:pos] + [alt_token] + completion
                span = diff_at_pos(r, r_prime, pos)
                r[pos:pos + span.n_del] = list(span.repl)
                edited[pos:pos + span.n_del] = [True] * span.n_add
                interventions += 1
                pos += span.n_add
        pos += 1
    return r, DecodeStats(iterations, interventions, tuple(edited))


def low_prob_flag(
    r: Sequence[str],
    probs: Sequence[float],
    threshold: float,
    *,
    edited: Sequence[int] = (),
) -> frozenset[int]:
    """Token indices flagged as suspect: already-edited ones plus low-probability ones."""
    if len(r) != len(probs):
        raise LengthMismatch(f"{len(r)} tokens but {len(probs)} probabilities")
    flags = set(edited)
    flags.update(i for i, p in enumerate(probs) if p < threshold)
    return frozenset(flags)


def revision_token_split(tokens: Sequence[str]) -> int:
    """Smallest k such that the revision marker lies within the first k tokens."""
    acc = ""
    for k, token in enumerate(tokens, start=1):
        acc += token
        if _REVISION_MARKER in acc:
            return k
    raise MalformedOutput("backend output has no revision marker")


def _kept_pairs(script: DiffScript) -> list[tuple[int, int]]:
    pairs = []
    ci = ri = 0
    for op in script:
        if op.kind == KEEP:
            pairs.append((ci, ri))
            ci += 1
            ri += 1
        elif op.kind == DELETE:
            ci += 1
        else:
            ri += 1
    return pairs


def flagged_claim_words(
    claim: str,
    revision: str,
    r_tokens: Sequence[str],
    flagged_tokens: frozenset[int],
) -> frozenset[int]:
    """Map flagged revision-token indices back onto claim word indices.

    A claim word is flagged when it survives into the revision and its
    revision counterpart overlaps a flagged token's character range.
    """
    concat = "".join(r_tokens)
    lead = concat.find(revision)
    if lead < 0:
        lead = len(concat) - len(concat.lstrip())

    spans = []
    at = 0
    for token in r_tokens:
        spans.append((at - lead, at + len(token) - lead))
        at += len(token)

    revision_words = tokenize_words(revision)
    flagged_rev_words = set()
    for i in flagged_tokens:
        a, b = spans[i]
        for wi, (ws, we) in enumerate(revision_words.offsets):
            if ws < b and a < we:
                flagged_rev_words.add(wi)

    claim_words = tokenize_words(claim)
    script = word_diff(claim_words, revision_words)
    return frozenset(
        ci for ci, ri in _kept_pairs(script) if ri in flagged_rev_words
    )


def inserted_token_indices(
    claim: str, revision: str, r_tokens: Sequence[str]
) -> frozenset[int]:
    """Revision-token indices covering words the revision added to the claim."""
    concat = "".join(r_tokens)
    lead = concat.find(revision)
    if lead < 0:
        lead = len(concat) - len(concat.lstrip())

    revision_words = tokenize_words(revision)
    script = word_diff(tokenize_words(claim), revision_words)
    inserted_words = set()
    ri = 0
    for op in script:
        if op.kind == INSERT:
            inserted_words.add(ri)
            ri += 1
        elif op.kind == KEEP:
            ri += 1

    out = set()
    at = 0
    for i, token in enumerate(r_tokens):
        a, b = at - lead, at + len(token) - lead
        at += len(token)
        for wi in inserted_words:
            ws, we = revision_words.offsets[wi]
            if ws < b and a < we:
                out.add(i)
                break
    return frozenset(out)


def lexical_overlap_scores(doc: Document, ctx: ClaimContext) -> list[float]:
    """Fraction of claim words each section contains (crude relevance proxy)."""
    claim_words = {w.lower() for w in tokenize_words(ctx.claim).words if len(w) > 1}
    if not claim_words:
        return [0.0] * len(doc.sections)
    scores = []
    for section in doc.sections:
        section_words = set()
        for sentence in section.sentences:
            section_words.update(w.lower() for w in tokenize_words(sentence.text).words)
        scores.append(len(claim_words & section_words) / len(claim_words))
    return scores


def fit_document(
    doc: Document,
    ctx: ClaimContext,
    template: PromptTemplate,
    budget: int,
    measure=count_units,
    *,
    hard_truncate: bool = False,
) -> Document:
    """Shrink the document so the whole rendered prompt fits the input budget.

    Sections are ranked by lexical overlap with the claim; the best-scoring
    sections that fit are protected, the rest become droppable.
    """
    overhead = (
        measure(template.instruction)
        + measure(render_summary_section(ctx.preceding_summary))
        + measure(f"CLAIM: {ctx.claim}")
    )
    doc_budget = budget - overhead
    if doc_budget <= 0:
        raise BudgetUnreachable(
            f"prompt overhead {overhead} alone exceeds the budget {budget}"
        )
    if measure(render_document_section(doc)) <= doc_budget:
        return doc

    scores = lexical_overlap_scores(doc, ctx)
    ranked = sorted(range(len(doc.sections)), key=lambda i: (-scores[i], i))
    protected: list[int] = []
    for idx in ranked:
        trial = set(protected) | {idx}
        trial_doc = doc.drop_sections(set(range(len(doc.sections))) - trial)
        if measure(render_document_section(trial_doc)) <= doc_budget:
            protected.append(idx)
    if not protected:
        protected = [ranked[0]]
    return truncate_document(
        doc, set(protected), doc_budget, measure, hard_truncate=hard_truncate
    )


def fact_check_sentence(
    doc: Document,
    ctx: ClaimContext,
    cfg: DecodingConfig,
    backend: Backend,
    *,
    template: PromptTemplate | None = None,
    input_budget: int | None = None,
    max_new_tokens: int = DEFAULT_OUTPUT_BUDGET,
    hard_truncate: bool = False,
    lenient: bool = True,
    measure=count_units,
) -> FactCheckResult:
    """Check one claim: evidence ids plus a revision, diffed into edits and tags.

    Pass ``input_budget`` to enable document truncation; by default the
    document is sent whole. In thresholded mode the evidence set is the one
    from the initial pass; interventions only reshape the revision.
    """
    template = template or PromptTemplate()
    if input_budget is not None:
        doc = fit_document(
            doc, ctx, template, input_budget, measure, hard_truncate=hard_truncate
        )
    rendered = build_input(doc, ctx, template, measure=measure)
    query = BackendQuery(rendered.text, max_new_tokens=max_new_tokens)

    decoded = run_fact_check_pass(backend, query)
    parsed = parse_output(decoded.text, doc, lenient=lenient)
    k = revision_token_split(decoded.tokens)
    head = decoded.tokens[:k]
    r_tokens = list(decoded.tokens[k:])
    r_probs = list(decoded.probs[k:])

    revision = parsed.revision
    per_token_probs: tuple[float, ...] | None = tuple(r_probs)
    flagged: frozenset[int] | None = None

    if cfg.mode == THRESHOLDED:
        r_final = thresholded_edit(query, r_tokens, cfg, backend, context=head)
        reparsed = parse_output("".join(head) + "".join(r_final), doc, lenient=True)
        revision = reparsed.revision
        per_token_probs = None
    elif cfg.mode == LOW_PROB_FLAG:
        edited = inserted_token_indices(ctx.claim, revision, r_tokens)
        flagged_tokens = low_prob_flag(r_tokens, r_probs, cfg.tau, edited=edited)
        flagged = flagged_claim_words(ctx.claim, revision, r_tokens, flagged_tokens)

    claim_words = tokenize_words(ctx.claim)
    script = word_diff(claim_words, tokenize_words(revision))
    tags = _tags_from(claim_words, script)
    if flagged is not None:
        flagged = flagged | tags.incorrect_indices

    return FactCheckResult(
        claim=ctx.claim,
        evidence_ids=parsed.evidence_ids,
        revision=revision,
        edits=edit_spans(script),
        tags=tags,
        per_token_probs=per_token_probs,
        flagged_words=flagged,
    )


def classify_factuality(
    doc: Document,
    passage: Sequence[str],
    cfg: DecodingConfig,
    backend: Backend,
    **kwargs,
) -> AuditReport:
    """Check every passage sentence (with its predecessors as context).

    The passage is factually consistent exactly when no sentence attracts
    any edit.
    """
    results = []
    for i, sentence in enumerate(passage):
        ctx = ClaimContext(sentence, tuple(passage[:i]))
        try:
            results.append(fact_check_sentence(doc, ctx, cfg, backend, **kwargs))
        except MalformedOutput as exc:
            raise MalformedOutput(f"sentence {i}: {exc}") from exc
    return AuditReport.from_results(results)
