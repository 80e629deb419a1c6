"""Fact-check LLM-generated text against a reference document.

Per-sentence evidence extraction and minimal revisions from a generation
backend, word-level error tags, recall/precision tooling, and an HTTP
review service for accepting or rejecting the suggested edits.
"""

from .auditor import (
    AuditReport,
    DecodingConfig,
    EditSpan,
    FactCheckResult,
    classify_factuality,
    fact_check_sentence,
    low_prob_flag,
    thresholded_edit,
)
from .diffcore import ErrorTags, SpanDiff, diff_at_pos, tag_errors, word_diff
from .evalkit import (
    AnnotationRecord,
    BaselineParams,
    GroundTruthRecord,
    MetricsReport,
    PRF,
    Prediction,
    aggregate_report,
    balanced_accuracy,
    baseline_expected_precision,
    cohens_kappa,
    error_id_metrics,
    evidence_metrics,
    pr_sweep,
)
from .genbackend import (
    BackendQuery,
    DecodedOutput,
    EchoBackend,
    HttpBackend,
    MockScript,
    ScriptBundle,
    ScriptedBackend,
    TokenDistribution,
    build_backend,
    greedy_complete,
    run_fact_check_pass,
)
from .promptio import (
    ModelInput,
    ModelOutput,
    PromptTemplate,
    build_input,
    parse_output,
    render_output,
    truncate_document,
)
from .service import ServiceConfig, SessionStore, create_app
from .textmodel import (
    ClaimContext,
    Document,
    Section,
    Sentence,
    WordSequence,
    segment_document,
    split_sentences,
    tokenize_words,
)

__version__ = "0.1.0"

__all__ = [
    "AuditReport",
    "AnnotationRecord",
    "BackendQuery",
    "BaselineParams",
    "ClaimContext",
    "DecodedOutput",
    "DecodingConfig",
    "Document",
    "EchoBackend",
    "EditSpan",
    "ErrorTags",
    "FactCheckResult",
    "GroundTruthRecord",
    "HttpBackend",
    "MetricsReport",
    "MockScript",
    "ModelInput",
    "ModelOutput",
    "PRF",
    "Prediction",
    "PromptTemplate",
    "ScriptBundle",
    "ScriptedBackend",
    "Section",
    "Sentence",
    "ServiceConfig",
    "SessionStore",
    "SpanDiff",
    "TokenDistribution",
    "WordSequence",
    "aggregate_report",
    "balanced_accuracy",
    "baseline_expected_precision",
    "build_backend",
    "build_input",
    "classify_factuality",
    "cohens_kappa",
    "create_app",
    "diff_at_pos",
    "error_id_metrics",
    "evidence_metrics",
    "fact_check_sentence",
    "greedy_complete",
    "low_prob_flag",
    "parse_output",
    "pr_sweep",
    "render_output",
    "run_fact_check_pass",
    "segment_document",
    "split_sentences",
    "tag_errors",
    "thresholded_edit",
    "tokenize_words",
    "truncate_document",
    "word_diff",
]
