"""Canonical text representation: documents, sections, sentences, and word tokenization.

Every other module works in terms of these types. Sentences carry stable
integer ids (SENT0, SENT1, ...) assigned in reading order; word tokenization
is deterministic and offset-faithful so diffs can be mapped back onto the
original string.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

from .errors import EmptyDocument

# Characters peeled off word edges into their own tokens. ASCII punctuation
# plus the common unicode quotes/dashes/ellipsis.
_PUNCT = set("!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~" + "“”‘’«»–—…")

# Tokens (sans trailing periods) that do not end a sentence.
_ABBREVIATIONS = {
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "vs", "etc",
    "e.g", "i.e", "cf", "fig", "figs", "no", "nos", "inc", "ltd", "co",
    "corp", "dept", "est", "approx", "jan", "feb", "mar", "apr", "jun",
    "jul", "aug", "sep", "sept", "oct", "nov", "dec", "u.s", "u.k",
    "a.m", "p.m",
}

_BOUNDARY = re.compile(r"([.!?]+)([\"'”’)\]]*)(\s+)")


@dataclass(frozen=True)
class Sentence:
    """One reference sentence, addressed by its document-wide id."""

    id: int
    text: str


@dataclass(frozen=True)
class Section:
    """A titled run of consecutive sentences; the unit dropped by truncation."""

    title: str | None
    sentences: tuple[Sentence, ...]

    @property
    def sentence_ids(self) -> range:
        if not self.sentences:
            return range(0)
        return range(self.sentences[0].id, self.sentences[-1].id + 1)


@dataclass(frozen=True)
class Document:
    """Sentence-indexed, section-structured reference text.

    Ids strictly increase in reading order. Freshly segmented documents have
    consecutive ids starting at 0; documents produced by truncation keep the
    original ids, so gaps are allowed there.
    """

    doc_id: str
    sections: tuple[Section, ...]

    def __post_init__(self):
        ids = [s.id for s in self.sentences]
        if not ids:
            raise EmptyDocument(f"document {self.doc_id!r} has no sentences")
        if any(b <= a for a, b in zip(ids, ids[1:])):
            raise ValueError("sentence ids must strictly increase in reading order")
        if any(not s.text.strip() for s in self.sentences):
            raise ValueError("sentences must be non-empty after whitespace normalization")
        for sec in self.sections:
            sec_ids = [s.id for s in sec.sentences]
            if sec_ids and sec_ids != list(range(sec_ids[0], sec_ids[-1] + 1)):
                raise ValueError("section sentence ids must be contiguous")

    @cached_property
    def sentences(self) -> tuple[Sentence, ...]:
        return tuple(s for sec in self.sections for s in sec.sentences)

    @cached_property
    def sentence_ids(self) -> frozenset[int]:
        return frozenset(s.id for s in self.sentences)

    def sentence(self, sentence_id: int) -> Sentence:
        try:
            return self._by_id[sentence_id]
        except KeyError:
            raise KeyError(f"no sentence with id {sentence_id}") from None

    @cached_property
    def _by_id(self) -> dict[int, Sentence]:
        return {s.id: s for s in self.sentences}

    def drop_sections(self, indices: Iterable[int]) -> "Document":
        """Document without the given section positions; sentence ids are kept."""
        drop = set(indices)
        kept = tuple(sec for i, sec in enumerate(self.sections) if i not in drop)
        return Document(self.doc_id, kept)

    def drop_last_sentence(self) -> "Document":
        """Document without its final sentence (hard-truncation step)."""
        sections = list(self.sections)
        last = sections[-1]
        if len(last.sentences) == 1:
            sections.pop()
        else:
            sections[-1] = Section(last.title, last.sentences[:-1])
        return Document(self.doc_id, tuple(sections))

    @classmethod
    def from_payload(cls, payload: dict) -> "Document":
        """Build from an ingestion record.

        Accepts ``{"doc_id", "sections": [{"title", "sentences": [str]}]}``
        (pre-segmented) or ``{"doc_id", "text": str}`` (triggers segmentation).
        """
        doc_id = payload.get("doc_id", "doc")
        if "sections" in payload:
            sections = []
            next_id = 0
            for sec in payload["sections"]:
                sents = []
                for text in sec.get("sentences", []):
                    text = text.strip()
                    if not text:
                        continue
                    sents.append(Sentence(next_id, text))
                    next_id += 1
                if sents:
                    sections.append(Section(sec.get("title"), tuple(sents)))
            if not sections:
                raise EmptyDocument(f"document {doc_id!r} has no sentences")
            return cls(doc_id, tuple(sections))
        if "text" in payload:
            return segment_document(payload["text"], doc_id=doc_id)
        raise ValueError("document payload needs a 'sections' or 'text' field")

    def to_payload(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "sections": [
                {"title": sec.title, "sentences": [s.text for s in sec.sentences]}
                for sec in self.sections
            ],
        }


@dataclass(frozen=True)
class ClaimContext:
    """The sentence being checked plus the generated sentences preceding it."""

    claim: str
    preceding_summary: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.claim.strip():
            raise ValueError("claim must be non-empty")
        object.__setattr__(self, "preceding_summary", tuple(self.preceding_summary))


@dataclass(frozen=True)
class WordSequence:
    """Words of a string plus their character offsets into it.

    Offsets partition the non-whitespace spans of the source: the source text
    at ``offsets[i]`` is exactly ``words[i]``.
    """

    words: tuple[str, ...]
    offsets: tuple[tuple[int, int], ...] = field(default=())

    def __post_init__(self):
        if self.offsets and len(self.offsets) != len(self.words):
            raise ValueError("one offset range per word")

    def __len__(self) -> int:
        return len(self.words)


def tokenize_words(text: str) -> WordSequence:
    """Split text into words for diffing.

    Whitespace separates chunks; leading and trailing punctuation characters
    of each chunk become their own single-character tokens, so quotes and
    parentheses do not glue to the content word they touch. Interior
    punctuation (hyphens, apostrophes) stays inside the word.
    """
    words: list[str] = []
    offsets: list[tuple[int, int]] = []
    for m in re.finditer(r"\S+", text):
        chunk, base = m.group(), m.start()
        lead = 0
        while lead < len(chunk) and chunk[lead] in _PUNCT:
            lead += 1
        trail = len(chunk)
        while trail > lead and chunk[trail - 1] in _PUNCT:
            trail -= 1
        for i in range(lead):
            words.append(chunk[i])
            offsets.append((base + i, base + i + 1))
        if trail > lead:
            words.append(chunk[lead:trail])
            offsets.append((base + lead, base + trail))
        for i in range(trail, len(chunk)):
            words.append(chunk[i])
            offsets.append((base + i, base + i + 1))
    return WordSequence(tuple(words), tuple(offsets))


def _split_segment(segment: str) -> list[str]:
    """Rule-based sentence split of one newline-free segment."""
    sentences = []
    start = 0
    for m in _BOUNDARY.finditer(segment):
        prefix = segment[start:m.end(2)]
        word = prefix.rsplit(None, 1)[-1] if prefix.split() else ""
        word = word.rstrip(".!?\"'”’)]").lstrip("\"'“‘([").lower()
        if word in _ABBREVIATIONS:
            continue
        rest = segment[m.end():]
        if rest and not (rest[0].isupper() or rest[0].isdigit() or rest[0] in "\"'“‘(["):
            continue
        sentences.append(segment[start:m.end(2)].strip())
        start = m.end()
    tail = segment[start:].strip()
    if tail:
        sentences.append(tail)
    return [s for s in sentences if s]


def split_sentences(text: str) -> list[str]:
    """Split raw text into sentences; newlines are hard boundaries."""
    out: list[str] = []
    for line in text.splitlines():
        out.extend(_split_segment(line))
    return out


def segment_document(
    raw: str | Sequence[str],
    *,
    doc_id: str = "doc",
    section_markers: str | None = None,
) -> Document:
    """Build a Document from raw text or a pre-split sentence list.

    Pre-split sentences are taken verbatim (modulo outer whitespace). For raw
    text, ``section_markers`` may give a regex; lines fully matching it start
    a new section and become its title. Ids are assigned 0..n-1 in reading
    order.
    """
    if isinstance(raw, str):
        if section_markers is None:
            texts = split_sentences(raw)
            section_plan = [(None, texts)] if texts else []
        else:
            marker = re.compile(section_markers)
            section_plan = []
            title: str | None = None
            body: list[str] = []
            for line in raw.splitlines():
                if marker.fullmatch(line.strip()):
                    if body or title is not None:
                        section_plan.append((title, body))
                    title, body = line.strip(), []
                else:
                    body.extend(_split_segment(line))
            section_plan.append((title, body))
    else:
        texts = [t.strip() for t in raw if t and t.strip()]
        section_plan = [(None, texts)] if texts else []

    sections = []
    next_id = 0
    for title, texts in section_plan:
        sents = tuple(Sentence(next_id + i, t) for i, t in enumerate(texts))
        next_id += len(texts)
        if sents:
            sections.append(Section(title, sents))
    if not sections:
        raise EmptyDocument(f"document {doc_id!r} has no non-whitespace content")
    return Document(doc_id, tuple(sections))
