"""Published JSON Schemas for the service's response bodies.

These are the stable wire contract: every response the service emits
validates against the schema named for its endpoint. Tests enforce this,
so schema changes are deliberate API changes.
"""

_EDIT = {
    "type": "object",
    "required": ["start", "end", "replacement", "status"],
    "properties": {
        "start": {"type": "integer", "minimum": 0},
        "end": {"type": "integer", "minimum": 0},
        "replacement": {"type": "array", "items": {"type": "string"}},
        "status": {"enum": ["suggested", "accepted", "rejected"]},
    },
    "additionalProperties": False,
}

_TAGS = {
    "type": "object",
    "required": ["words", "incorrect"],
    "properties": {
        "words": {"type": "array", "items": {"type": "string"}},
        "incorrect": {"type": "array", "items": {"type": "boolean"}},
    },
    "additionalProperties": False,
}

RESULT = {
    "type": "object",
    "required": ["claim", "evidence", "revision", "edits", "tags"],
    "properties": {
        "claim": {"type": "string"},
        "evidence": {"type": "array", "items": {"type": "integer"}},
        "revision": {"type": "string"},
        "edits": {"type": "array", "items": _EDIT},
        "tags": _TAGS,
        "per_token_probs": {
            "type": ["array", "null"], "items": {"type": "number"},
        },
        "flagged_words": {
            "type": ["array", "null"], "items": {"type": "integer"},
        },
    },
    "additionalProperties": False,
}

_SENTENCE = {
    "type": "object",
    "required": [
        "index", "text", "checked_claim", "result", "accepted_edits",
        "edit_verdicts", "evidence_verdicts", "new_evidence",
        "sufficient", "invalid",
    ],
    "properties": {
        "index": {"type": "integer", "minimum": 0},
        "text": {"type": "string"},
        "checked_claim": {"type": ["string", "null"]},
        "result": {"anyOf": [RESULT, {"type": "null"}]},
        "accepted_edits": {"type": "array", "items": {"type": "integer"}},
        "edit_verdicts": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["edit", "verdict"],
                "properties": {
                    "edit": {"type": "integer"},
                    "verdict": {"enum": ["accepted", "rejected"]},
                },
                "additionalProperties": False,
            },
        },
        "evidence_verdicts": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "verdict"],
                "properties": {
                    "id": {"type": "integer"},
                    "verdict": {"enum": ["relevant", "not_relevant"]},
                },
                "additionalProperties": False,
            },
        },
        "new_evidence": {"type": "array", "items": {"type": "integer"}},
        "sufficient": {"type": ["boolean", "null"]},
        "invalid": {"type": "boolean"},
    },
    "additionalProperties": False,
}

_DOC = {
    "type": "object",
    "required": ["doc_id", "sections"],
    "properties": {
        "doc_id": {"type": "string"},
        "sections": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["title", "sentences"],
                "properties": {
                    "title": {"type": ["string", "null"]},
                    "sentences": {"type": "array", "items": {"type": "string"}},
                },
                "additionalProperties": False,
            },
        },
    },
    "additionalProperties": False,
}

SESSION = {
    "type": "object",
    "required": ["session_id", "doc", "sentences", "created_at", "updated_at"],
    "properties": {
        "session_id": {"type": "string"},
        "doc": _DOC,
        "sentences": {"type": "array", "items": _SENTENCE},
        "created_at": {"type": "number"},
        "updated_at": {"type": "number"},
    },
    "additionalProperties": False,
}

CHECK = {
    "type": "object",
    "required": ["index", "cached", "result"],
    "properties": {
        "index": {"type": "integer", "minimum": 0},
        "cached": {"type": "boolean"},
        "result": RESULT,
    },
    "additionalProperties": False,
}

AUDIT_REPORT = {
    "type": "object",
    "required": ["sentences", "consistent"],
    "properties": {
        "sentences": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["claim", "evidence", "revision", "edits"],
                "properties": {
                    "claim": {"type": "string"},
                    "evidence": {"type": "array", "items": {"type": "integer"}},
                    "revision": {"type": "string"},
                    "edits": {"type": "array", "items": _EDIT},
                },
                "additionalProperties": False,
            },
        },
        "consistent": {"type": "boolean"},
    },
    "additionalProperties": False,
}

CHECK_ALL = {
    "type": "object",
    "required": ["results", "cached", "failed", "consistent", "report"],
    "properties": {
        "results": {
            "type": "array", "items": {"anyOf": [RESULT, {"type": "null"}]},
        },
        "cached": {"type": "array", "items": {"type": "boolean"}},
        "failed": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["index", "error"],
                "properties": {
                    "index": {"type": "integer"},
                    "error": {"type": "string"},
                },
                "additionalProperties": False,
            },
        },
        "consistent": {"type": ["boolean", "null"]},
        "report": {"anyOf": [AUDIT_REPORT, {"type": "null"}]},
    },
    "additionalProperties": False,
}

VERDICT = {
    "type": "object",
    "required": ["sentence"],
    "properties": {"sentence": _SENTENCE},
    "additionalProperties": False,
}

SENTENCE_EDIT = VERDICT

ANNOTATION_LINE = {
    "type": "object",
    "required": [
        "session_id", "index", "claim", "edit_verdicts", "evidence_verdicts",
        "corrected_revision", "new_evidence", "sufficient", "invalid",
    ],
    "properties": {
        "session_id": {"type": "string"},
        "index": {"type": "integer", "minimum": 0},
        "claim": {"type": "string"},
        "edit_verdicts": {
            "type": "array", "items": {"enum": ["accepted", "rejected"]},
        },
        "evidence_verdicts": {
            "type": "array", "items": {"enum": ["relevant", "not_relevant"]},
        },
        "corrected_revision": {"type": ["string", "null"]},
        "new_evidence": {"type": "array", "items": {"type": "integer"}},
        "sufficient": {"type": ["boolean", "null"]},
        "invalid": {"type": "boolean"},
    },
    "additionalProperties": False,
}

ERROR = {
    "type": "object",
    "required": ["error", "code"],
    "properties": {
        "error": {"type": "string"},
        "code": {"type": "string"},
        "retriable": {"type": "boolean"},
    },
    "additionalProperties": False,
}

SESSION_LIST = {
    "type": "object",
    "required": ["sessions"],
    "properties": {
        "sessions": {"type": "array", "items": {"type": "string"}},
    },
    "additionalProperties": False,
}

SCHEMAS = {
    "session": SESSION,
    "check": CHECK,
    "check_all": CHECK_ALL,
    "verdict": VERDICT,
    "sentence_edit": SENTENCE_EDIT,
    "annotation_line": ANNOTATION_LINE,
    "audit_report": AUDIT_REPORT,
    "result": RESULT,
    "error": ERROR,
    "session_list": SESSION_LIST,
}
