"""Exception types shared across the audit engine."""


class ClaimcheckError(Exception):
    """Base class for all errors raised by this package."""


class EmptyDocument(ClaimcheckError):
    """Document has no non-whitespace content."""


class MalformedOutput(ClaimcheckError):
    """Backend output is missing the evidence or revision marker."""


class UnknownSentenceId(ClaimcheckError):
    """Backend referenced a sentence id outside the document."""

    def __init__(self, sentence_id: int):
        super().__init__(f"unknown sentence id SENT{sentence_id}")
        self.sentence_id = sentence_id


class BudgetUnreachable(ClaimcheckError):
    """Document cannot be shrunk to the length budget by dropping irrelevant sections."""


class BackendUnavailable(ClaimcheckError):
    """Generation backend could not be reached (after retries)."""


class ContextOverflow(ClaimcheckError):
    """Prompt or prefix exceeds the backend's context limit."""


class NoDivergence(ClaimcheckError):
    """diff_at_pos called at a position where the two sequences agree."""


class IterationCapExceeded(ClaimcheckError):
    """Thresholded-edit loop exceeded its defensive iteration cap."""


class LengthMismatch(ClaimcheckError):
    """Paired sequences have different lengths."""


class SequenceMismatch(ClaimcheckError):
    """Metric inputs were computed over different claim word sequences."""


class OutOfRangeId(ClaimcheckError):
    """Evidence id outside the document's sentence range."""


class DomainError(ClaimcheckError):
    """Baseline parameters outside the closed form's domain."""


class DegenerateMarginals(ClaimcheckError):
    """Cohen's kappa undefined: chance agreement is 1 with imperfect agreement."""


class MissingClass(ClaimcheckError):
    """Balanced accuracy needs both classes present in the ground truth."""


class AlignmentError(ClaimcheckError):
    """Annotation verdicts do not align with the suggested edits or evidence."""


class SessionNotFound(ClaimcheckError):
    """No session with the requested id."""


class StaleEdit(ClaimcheckError):
    """Verdict refers to a suggestion computed for an older sentence text."""


class PayloadTooLarge(ClaimcheckError):
    """Ingested document or summary exceeds the configured size limit."""
