"""Measurement harness: word- and sentence-level P/R/F1, human-eval
aggregates, threshold sweeps, agreement statistics, and the random-flipping
precision baseline in closed form.

Positive class conventions: "incorrect" for word tags, "is evidence" for
document sentences. Precision (and F1) are defined 0 when their denominator
is 0, which keeps sweeps total.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Iterable, Sequence

from .auditor import (
    DecodingConfig, LOW_PROB_FLAG, THRESHOLDED, fact_check_sentence,
)
from .diffcore import INSERT, ErrorTags, tag_errors, word_diff
from .errors import (
    AlignmentError, DegenerateMarginals, DomainError, LengthMismatch,
    MissingClass, OutOfRangeId, SequenceMismatch,
)
from .textmodel import ClaimContext, Document, tokenize_words


@dataclass(frozen=True)
class PRF:
    recall: float
    precision: float
    f1: float
    tp: int
    fp: int
    fn: int

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int) -> "PRF":
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = (
            2 * precision * recall / (precision + recall)
            if precision + recall else 0.0
        )
        return cls(recall, precision, f1, tp, fp, fn)


@dataclass(frozen=True)
class BaselineParams:
    """Inputs to the random-flipping precision formula.

    alpha/beta are the model's error recall and precision, gamma the
    fraction of words that are truly incorrect, alpha_prime the recall the
    baseline is inflated to by flipping random unflagged words.
    """

    alpha: float
    beta: float
    gamma: float
    alpha_prime: float

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "alpha_prime"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if self.alpha_prime < self.alpha:
            raise ValueError("alpha_prime must be at least alpha")
        if self.alpha >= 1.0:
            raise ValueError("alpha must be below 1 (no headroom to flip otherwise)")


def baseline_expected_precision(p: BaselineParams) -> float:
    """Expected precision after inflating recall from alpha to alpha_prime
    by flipping uniformly random unflagged words to "incorrect"."""
    if p.beta == 0.0:
        raise DomainError("beta = 0: the formula divides by model precision")
    flagged = p.alpha * p.gamma / p.beta
    flip_share = (p.alpha_prime - p.alpha) / (1.0 - p.alpha)
    denominator = flagged + flip_share * (1.0 - flagged)
    if denominator == 0.0:
        raise DomainError("no words flagged and none flipped")
    return p.alpha_prime * p.gamma / denominator


@dataclass(frozen=True)
class AnnotationRecord:
    """One reviewer's verdicts for one checked sentence.

    Edit verdicts align with the suggested edit list, evidence verdicts with
    the sorted suggested evidence ids. Invalid sentences carry nothing else.
    """

    edit_verdicts: tuple[str, ...] = ()
    evidence_verdicts: tuple[str, ...] = ()
    corrected_revision: str | None = None
    new_evidence: frozenset[int] = frozenset()
    sufficient: bool | None = None
    invalid: bool = False

    def __post_init__(self):
        for v in self.edit_verdicts:
            if v not in ("accepted", "rejected"):
                raise ValueError(f"edit verdict must be accepted/rejected, got {v!r}")
        for v in self.evidence_verdicts:
            if v not in ("relevant", "not_relevant"):
                raise ValueError(
                    f"evidence verdict must be relevant/not_relevant, got {v!r}"
                )
        if self.invalid and (
            self.edit_verdicts or self.evidence_verdicts
            or self.corrected_revision is not None or self.new_evidence
            or self.sufficient is not None
        ):
            raise ValueError("invalid sentences carry no other verdicts")

    def to_payload(self) -> dict:
        return {
            "edit_verdicts": list(self.edit_verdicts),
            "evidence_verdicts": list(self.evidence_verdicts),
            "corrected_revision": self.corrected_revision,
            "new_evidence": sorted(self.new_evidence),
            "sufficient": self.sufficient,
            "invalid": self.invalid,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "AnnotationRecord":
        return cls(
            edit_verdicts=tuple(payload.get("edit_verdicts", ())),
            evidence_verdicts=tuple(payload.get("evidence_verdicts", ())),
            corrected_revision=payload.get("corrected_revision"),
            new_evidence=frozenset(payload.get("new_evidence", ())),
            sufficient=payload.get("sufficient"),
            invalid=payload.get("invalid", False),
        )


@dataclass(frozen=True)
class GroundTruthRecord:
    """One gold example: document, claim in context, reference evidence + revision."""

    doc: Document
    claim: str
    summary_prefix: tuple[str, ...] = ()
    gt_evidence: frozenset[int] = frozenset()
    gt_revision: str = ""
    annotation: AnnotationRecord | None = None

    def __post_init__(self):
        stray = self.gt_evidence - self.doc.sentence_ids
        if stray:
            raise ValueError(f"gt evidence ids {sorted(stray)} not in document")

    @property
    def context(self) -> ClaimContext:
        return ClaimContext(self.claim, self.summary_prefix)

    @classmethod
    def from_payload(cls, payload: dict) -> "GroundTruthRecord":
        annotation = payload.get("annotation")
        return cls(
            doc=Document.from_payload(payload["doc"]),
            claim=payload["claim"],
            summary_prefix=tuple(payload.get("summary_prefix", ())),
            gt_evidence=frozenset(payload.get("gt_evidence", ())),
            gt_revision=payload.get("gt_revision", ""),
            annotation=AnnotationRecord.from_payload(annotation) if annotation else None,
        )

    def to_payload(self) -> dict:
        out = {
            "doc": self.doc.to_payload(),
            "summary_prefix": list(self.summary_prefix),
            "claim": self.claim,
            "gt_evidence": sorted(self.gt_evidence),
            "gt_revision": self.gt_revision,
        }
        if self.annotation is not None:
            out["annotation"] = self.annotation.to_payload()
        return out


@dataclass(frozen=True)
class Prediction:
    """A system's answer for one record."""

    evidence_ids: frozenset[int]
    revision: str
    flagged_words: frozenset[int] | None = None

    @classmethod
    def from_payload(cls, payload: dict) -> "Prediction":
        flagged = payload.get("flagged_words")
        return cls(
            evidence_ids=frozenset(payload.get("evidence", ())),
            revision=payload.get("revision", ""),
            flagged_words=frozenset(flagged) if flagged is not None else None,
        )

    def to_payload(self) -> dict:
        out = {"evidence": sorted(self.evidence_ids), "revision": self.revision}
        if self.flagged_words is not None:
            out["flagged_words"] = sorted(self.flagged_words)
        return out


@dataclass(frozen=True)
class MetricsReport:
    error: PRF
    evidence: PRF
    base_rate: float
    pct_del: float
    pct_add: float
    accepted_pct: float | None = None
    sufficient_pct: float | None = None
    kappa: float | None = None
    balanced_accuracy: float | None = None

    def to_json(self) -> dict:
        def prf(m: PRF) -> dict:
            return {
                "recall": m.recall, "precision": m.precision, "f1": m.f1,
                "tp": m.tp, "fp": m.fp, "fn": m.fn,
            }

        return {
            "error": prf(self.error),
            "evidence": prf(self.evidence),
            "base_rate": self.base_rate,
            "pct_del": self.pct_del,
            "pct_add": self.pct_add,
            "accepted_pct": self.accepted_pct,
            "sufficient_pct": self.sufficient_pct,
            "kappa": self.kappa,
            "balanced_accuracy": self.balanced_accuracy,
        }


def error_id_metrics(gt: ErrorTags, pred: ErrorTags) -> PRF:
    """Word-level P/R/F1 with "incorrect" as the positive class."""
    if gt.words.words != pred.words.words:
        raise SequenceMismatch("tags must be over the same claim words")
    tp = fp = fn = 0
    for g, p in zip(gt.incorrect, pred.incorrect):
        if p and g:
            tp += 1
        elif p:
            fp += 1
        elif g:
            fn += 1
    return PRF.from_counts(tp, fp, fn)


def evidence_metrics(gt: Iterable[int], pred: Iterable[int], doc_size: int) -> PRF:
    """Sentence-level P/R/F1 with "is evidence" as the positive class."""
    gt, pred = set(gt), set(pred)
    stray = [i for i in gt | pred if not 0 <= i < doc_size]
    if stray:
        raise OutOfRangeId(f"ids {sorted(stray)} outside 0..{doc_size - 1}")
    tp = len(gt & pred)
    return PRF.from_counts(tp, len(pred - gt), len(gt - pred))


def cohens_kappa(a: Sequence[bool], b: Sequence[bool]) -> float:
    """Agreement between two binary raters, chance-corrected."""
    if len(a) != len(b):
        raise LengthMismatch(f"rater lists differ: {len(a)} vs {len(b)}")
    n = len(a)
    if n == 0:
        raise ValueError("kappa needs at least one rated item")
    a = [bool(x) for x in a]
    b = [bool(x) for x in b]
    agree = sum(1 for x, y in zip(a, b) if x == y)
    a1, b1 = sum(a), sum(b)
    # integer form of p_e == 1 avoids float equality
    expected_num = a1 * b1 + (n - a1) * (n - b1)
    if expected_num == n * n:
        if agree == n:
            return 1.0
        raise DegenerateMarginals("chance agreement is 1 but observed is not")
    p_o = agree / n
    p_e = expected_num / (n * n)
    return (p_o - p_e) / (1.0 - p_e)


def balanced_accuracy(gt: Sequence[bool], pred: Sequence[bool]) -> float:
    """Mean of true-positive and true-negative rates."""
    if len(gt) != len(pred):
        raise LengthMismatch(f"label lists differ: {len(gt)} vs {len(pred)}")
    pos = [(g, p) for g, p in zip(gt, pred) if g]
    neg = [(g, p) for g, p in zip(gt, pred) if not g]
    if not pos or not neg:
        raise MissingClass("balanced accuracy needs both classes in the ground truth")
    tpr = sum(1 for _, p in pos if p) / len(pos)
    tnr = sum(1 for _, p in neg if not p) / len(neg)
    return (tpr + tnr) / 2.0


def _pooled_error_counts(
    rows: Sequence[tuple[GroundTruthRecord, Prediction]],
) -> tuple[int, int, int, int, int, int, int]:
    """(tp, fp, fn, gt_incorrect, total_words, deleted, added) over all rows."""
    tp = fp = fn = 0
    gt_incorrect = total = deleted = added = 0
    for record, pred in rows:
        gt_tags = tag_errors(record.claim, record.gt_revision)
        pred_tags = tag_errors(record.claim, pred.revision)
        pred_set = set(pred_tags.incorrect_indices)
        if pred.flagged_words is not None:
            pred_set |= pred.flagged_words
        for i, g in enumerate(gt_tags.incorrect):
            p = i in pred_set
            if p and g:
                tp += 1
            elif p:
                fp += 1
            elif g:
                fn += 1
        gt_incorrect += sum(gt_tags.incorrect)
        total += len(gt_tags.words)
        deleted += sum(pred_tags.incorrect)
        added += _added_words(record.claim, pred.revision)
    return tp, fp, fn, gt_incorrect, total, deleted, added


def _added_words(claim: str, revision: str) -> int:
    script = word_diff(tokenize_words(claim), tokenize_words(revision))
    return sum(1 for op in script if op.kind == INSERT)


def aggregate_report(
    rows: Sequence[tuple[GroundTruthRecord, Prediction]],
    annotations: Sequence[AnnotationRecord | None] | None = None,
) -> MetricsReport:
    """Pool per-word and per-sentence counts across records into one report.

    With annotations, error metrics score against each reviewer's corrected
    revision when present, evidence recall counts reviewer-added evidence as
    misses, and invalid sentences drop out of every denominator.
    """
    if annotations is None:
        annotations = [r.annotation for r, _ in rows]
    if len(annotations) != len(rows):
        raise AlignmentError(
            f"{len(rows)} records but {len(annotations)} annotations"
        )

    kept: list[tuple[GroundTruthRecord, Prediction]] = []
    kept_notes: list[AnnotationRecord | None] = []
    for (record, pred), note in zip(rows, annotations):
        if note is not None and note.invalid:
            continue
        if note is not None and note.corrected_revision is not None:
            record = GroundTruthRecord(
                doc=record.doc,
                claim=record.claim,
                summary_prefix=record.summary_prefix,
                gt_evidence=record.gt_evidence,
                gt_revision=note.corrected_revision,
            )
        kept.append((record, pred))
        kept_notes.append(note)

    tp, fp, fn, gt_incorrect, total, deleted, added = _pooled_error_counts(kept)
    error = PRF.from_counts(tp, fp, fn)

    etp = efp = efn = 0
    for (record, pred), note in zip(kept, kept_notes):
        if note is not None and (note.evidence_verdicts or note.new_evidence):
            suggested = sorted(pred.evidence_ids)
            if note.evidence_verdicts and len(note.evidence_verdicts) != len(suggested):
                raise AlignmentError(
                    f"{len(suggested)} suggested evidence ids but "
                    f"{len(note.evidence_verdicts)} verdicts"
                )
            relevant = sum(1 for v in note.evidence_verdicts if v == "relevant")
            etp += relevant
            efp += len(suggested) - relevant
            efn += len(note.new_evidence - pred.evidence_ids)
        else:
            m = evidence_metrics(
                record.gt_evidence, pred.evidence_ids, _doc_size(record.doc)
            )
            etp += m.tp
            efp += m.fp
            efn += m.fn
    evidence = PRF.from_counts(etp, efp, efn)

    base_rate = 100.0 * gt_incorrect / total if total else 0.0
    pct_del = 100.0 * deleted / total if total else 0.0
    pct_add = 100.0 * added / total if total else 0.0

    accepted_pct = sufficient_pct = None
    verdicts = [v for note in kept_notes if note for v in note.edit_verdicts]
    if verdicts:
        accepted_pct = 100.0 * sum(
            1 for v in verdicts if v == "accepted"
        ) / len(verdicts)
    judged = [note.sufficient for note in kept_notes if note and note.sufficient is not None]
    if judged:
        sufficient_pct = 100.0 * sum(judged) / len(judged)

    return MetricsReport(
        error=error,
        evidence=evidence,
        base_rate=base_rate,
        pct_del=pct_del,
        pct_add=pct_add,
        accepted_pct=accepted_pct,
        sufficient_pct=sufficient_pct,
    )


def _doc_size(doc: Document) -> int:
    return max(doc.sentence_ids) + 1


@dataclass(frozen=True)
class SweepPoint:
    tau: float
    edit: PRF
    flag: PRF
    random_precision: float | None


def pr_sweep(
    dataset: Sequence[GroundTruthRecord],
    taus: Sequence[float],
    cfg: DecodingConfig,
    backend,
    **check_kwargs,
) -> list[SweepPoint]:
    """Error-ID metrics per threshold, for thresholded editing and for the
    low-probability flagging baseline, plus the matched random-flip precision.

    The random baseline is anchored at the plain pass's pooled (recall,
    precision, base rate) and evaluated at each point's achieved flag recall.
    """
    if list(taus) != sorted(taus):
        raise ValueError("taus must be sorted ascending")

    def run(mode: str, tau: float) -> PRF:
        rows = []
        for record in dataset:
            result = fact_check_sentence(
                record.doc, record.context,
                DecodingConfig(
                    tau=tau, mode=mode,
                    max_iterations=cfg.max_iterations, terminal=cfg.terminal,
                ),
                backend, **check_kwargs,
            )
            rows.append((record, Prediction(
                evidence_ids=result.evidence_ids,
                revision=result.revision,
                flagged_words=result.flagged_words,
            )))
        tp, fp, fn, *_ = _pooled_error_counts(rows)
        return PRF.from_counts(tp, fp, fn)

    plain = run("plain", 0.0)
    gt_incorrect = plain.tp + plain.fn
    total_words = sum(
        len(tag_errors(r.claim, r.gt_revision).words) for r in dataset
    )
    gamma = gt_incorrect / total_words if total_words else 0.0

    points = []
    for tau in taus:
        edit_prf = run(THRESHOLDED, tau)
        flag_prf = run(LOW_PROB_FLAG, tau)
        random_precision = None
        if plain.precision > 0.0 and plain.recall < 1.0:
            params = BaselineParams(
                alpha=plain.recall,
                beta=plain.precision,
                gamma=gamma,
                alpha_prime=max(flag_prf.recall, plain.recall),
            )
            random_precision = baseline_expected_precision(params)
        points.append(SweepPoint(tau, edit_prf, flag_prf, random_precision))
    return points


def sweep_to_csv(points: Sequence[SweepPoint], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([
            "tau", "recall", "precision", "f1",
            "flag_recall", "flag_precision", "flag_f1", "random_precision",
        ])
        for p in points:
            writer.writerow([
                p.tau, p.edit.recall, p.edit.precision, p.edit.f1,
                p.flag.recall, p.flag.precision, p.flag.f1,
                "" if p.random_precision is None else p.random_precision,
            ])


def load_gold(path) -> list[GroundTruthRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(GroundTruthRecord.from_payload(json.loads(line)))
    return records


def load_predictions(path) -> list[Prediction]:
    preds = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                preds.append(Prediction.from_payload(json.loads(line)))
    return preds


def load_annotations(path) -> list[AnnotationRecord]:
    notes = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                notes.append(AnnotationRecord.from_payload(json.loads(line)))
    return notes
