"""Backend prompt construction, output parsing, and budget-driven truncation.

The wire layout is fixed: instruction line, then a DOCUMENT line with
SENT-prefixed sentences, a SUMMARY line with the sentences preceding the
claim, and a CLAIM line. Backends answer with an EVIDENCE line naming
sentence ids and a REVISION line carrying the corrected claim.
"""

from __future__ import annotations

import json
import re
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable

from .errors import BudgetUnreachable, MalformedOutput, UnknownSentenceId
from .textmodel import ClaimContext, Document

# Instruction used when fine-tuning; chat-style models get the wordier variants.
DEFAULT_INSTRUCTION = (
    "You are provided a document and its summary. The summary may potentially "
    "contain factual errors. The last sentence of the summary is marked as a "
    "claim. Find all sentences in the document providing evidence for the "
    "claim, and then revise the claim to remove or replace unsupported facts."
)

INSTRUCTION_VARIANTS = {
    "default": DEFAULT_INSTRUCTION,
    "zero_shot_verbose": (
        "You are provided a document and its summary. The summary may "
        "potentially contain facts which contradict with the document or are "
        "not supported by any evidence in the document. The last sentence of "
        "the summary is marked as a claim. Find and list sufficient sentences "
        "in the document to provide evidence for the claim. Make sure to "
        "provide evidence for all the supported facts in the claim. Then, "
        "revise the claim to remove or replace facts which are not supported "
        "by the document or are contradicted by it. Only make changes to the "
        "text of the claim when necessary. When you add new information to "
        "the claim, it must be only to fix a contradictory fact in the claim, "
        "and not for changing the style of the text."
    ),
    "zero_shot": (
        "You are provided a document and its summary. The summary may "
        "potentially contain facts which contradict with the document or are "
        "not supported by any evidence in the document. The last sentence of "
        "the summary is marked as a claim. Find and list sufficient sentences "
        "in the document to provide evidence for the claim, and then revise "
        "the claim to remove or replace facts which are not supported by the "
        "document or are contradicted by it. When you add new information to "
        "the claim, it must be only to fix a contradictory fact in the claim, "
        "and not for changing the style of the text."
    ),
}

# Length budgets the reference backend was trained with, in backend tokens.
DEFAULT_INPUT_BUDGET = 3050
DEFAULT_OUTPUT_BUDGET = 150

_EVIDENCE_MARKER = "EVIDENCE:"
_REVISION_MARKER = "REVISION:"
_SENT_ID = re.compile(r"SENT(\d+)")


def count_units(text: str) -> int:
    """Whitespace-word proxy for backend token counts."""
    return len(text.split())


@dataclass(frozen=True)
class PromptTemplate:
    instruction: str = DEFAULT_INSTRUCTION

    def __post_init__(self):
        if not self.instruction.strip():
            raise ValueError("instruction must be non-empty")
        if "\n" in self.instruction:
            raise ValueError("instruction must be a single line")

    @classmethod
    def from_file(cls, path) -> "PromptTemplate":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        return cls(instruction=payload["instruction"])

    def to_payload(self) -> dict:
        return {"instruction": self.instruction}


@dataclass(frozen=True)
class ModelInput:
    text: str
    length_estimate: int

    def __post_init__(self):
        if self.text.count("\nDOCUMENT:") != 1:
            raise ValueError("input must contain exactly one DOCUMENT section")
        if self.text.count("\nCLAIM:") != 1:
            raise ValueError("input must contain exactly one CLAIM section")
        if self.text.count("\nSUMMARY:") > 1:
            raise ValueError("input must contain at most one SUMMARY section")


@dataclass(frozen=True)
class ModelOutput:
    evidence_ids: frozenset[int]
    revision: str
    # ids the backend named but the document does not contain (lenient parses)
    unknown_ids: tuple[int, ...] = field(default=())


def render_document_section(doc: Document) -> str:
    return "DOCUMENT: " + " ".join(
        f"SENT{s.id} {s.text}" for s in doc.sentences
    )


def render_summary_section(preceding: Iterable[str]) -> str:
    joined = " ".join(preceding)
    return f"SUMMARY: {joined}" if joined else "SUMMARY:"


def build_input(
    doc: Document,
    ctx: ClaimContext,
    template: PromptTemplate | None = None,
    *,
    measure: Callable[[str], int] = count_units,
) -> ModelInput:
    """Render the fact-checking prompt for one claim."""
    template = template or PromptTemplate()
    text = "\n".join([
        template.instruction,
        render_document_section(doc),
        render_summary_section(ctx.preceding_summary),
        f"CLAIM: {ctx.claim}",
    ])
    return ModelInput(text=text, length_estimate=measure(text))


def render_output(evidence_ids: Iterable[int], revision: str) -> str:
    """Serialize (ids, revision) in the backend's output grammar."""
    ids = sorted(set(evidence_ids))
    head = "EVIDENCE: " + " ".join(f"SENT{i}" for i in ids) if ids else "EVIDENCE:"
    return f"{head}\n{_REVISION_MARKER} {revision}"


def parse_output(raw: str, doc: Document, *, lenient: bool = True) -> ModelOutput:
    """Extract evidence ids and the revision from raw backend output.

    Ids may be separated by spaces or commas and are deduplicated. Ids not
    present in the document are dropped and recorded when ``lenient``,
    otherwise they raise UnknownSentenceId. An empty revision is legal and
    means the claim was deleted outright.
    """
    ev_at = raw.find(_EVIDENCE_MARKER)
    rev_at = raw.find(_REVISION_MARKER)
    if ev_at < 0 or rev_at < 0 or rev_at < ev_at:
        raise MalformedOutput(
            f"expected '{_EVIDENCE_MARKER} ... {_REVISION_MARKER} ...', got {raw[:80]!r}"
        )
    evidence_text = raw[ev_at + len(_EVIDENCE_MARKER):rev_at]
    revision = raw[rev_at + len(_REVISION_MARKER):].strip()

    known: set[int] = set()
    unknown: list[int] = []
    for m in _SENT_ID.finditer(evidence_text):
        sid = int(m.group(1))
        if sid in doc.sentence_ids:
            known.add(sid)
        elif lenient:
            if sid not in unknown:
                unknown.append(sid)
        else:
            raise UnknownSentenceId(sid)
    return ModelOutput(frozenset(known), revision, tuple(unknown))


def truncate_document(
    doc: Document,
    relevant_sections: set[int],
    budget: int,
    measure: Callable[[str], int] = count_units,
    *,
    hard_truncate: bool = False,
) -> Document:
    """Shrink a document until its rendered DOCUMENT section fits the budget.

    Sections not named in ``relevant_sections`` are dropped largest-first
    (ties dropping the later section). If that is not enough, hard
    truncation removes sentences from the tail, never emptying the document.
    The budget covers only the DOCUMENT section; callers fitting a whole
    prompt should subtract the other sections' cost first.
    """
    if budget <= 0:
        raise ValueError("budget must be positive")

    current = doc
    kept = list(range(len(doc.sections)))  # original indices of surviving sections
    while measure(render_document_section(current)) > budget:
        droppable = [
            (pos, orig) for pos, orig in enumerate(kept)
            if orig not in relevant_sections
        ]
        if not droppable:
            break
        sizes = {
            pos: measure(render_document_section(
                Document(current.doc_id, (current.sections[pos],))
            ))
            for pos, _ in droppable
        }
        pos, orig = max(droppable, key=lambda d: (sizes[d[0]], d[1]))
        current = current.drop_sections({pos})
        kept.pop(pos)

    if measure(render_document_section(current)) <= budget:
        return current
    if not hard_truncate:
        raise BudgetUnreachable(
            f"document still measures {measure(render_document_section(current))} "
            f"against budget {budget} with all irrelevant sections dropped"
        )
    while len(current.sentences) > 1:
        shorter = current.drop_last_sentence()
        current = shorter
        if measure(render_document_section(current)) <= budget:
            break
    if measure(render_document_section(current)) > budget:
        warnings.warn(
            "document truncated to a single sentence but still exceeds the budget",
            stacklevel=2,
        )
    else:
        warnings.warn(
            "relevant sections exceed the budget; tail sentences dropped",
            stacklevel=2,
        )
    return current
