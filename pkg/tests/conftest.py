"""Shared fixtures: the film-biography worked example and script builders.

The worked example is an actor biography whose summary claim overstates his
filmography; the reference revision keeps one film title and drops the rest.
Several suites pin their goldens to it, so everything about it is frozen
here: sentence list, claim, revision, evidence id, and the word-level
incorrect set.
"""

from claimcheck.genbackend import (
    TERMINAL, MockScript, ScriptBundle, ScriptedBackend, TokenDistribution,
)
from claimcheck.textmodel import Document, Section, Sentence

FILM_DOC_SENTENCES = [
    "Micheal Ward",
    "Early life.",
    "Micheal Ward was born in Spanish Town, Jamaica on 18 November 1997.",
    "His mother was 18 years old when he was born.",
    "He has three sisters.",
    "He was raised in Romford after his family moved to England when he was four.",
    "Career.",
    "Ward began modelling in his late teens.",
    "He appeared in commercials before turning to acting.",
    "His first screen role was a small part in a short film.",
    "He studied performing arts at a college in London.",
    "In 2019 he was cast in a television drama series.",
    "Critics praised his screen presence.",
    "He continued to audition for film roles.",
    "Personal life.",
    "Ward lives in London.",
    "He has spoken about his Jamaican heritage in interviews.",
    "Ward's breakout year came in 2019, when he starred as Jamie in Netflix's "
    "revival and third series of \"Top Boy\".",
    "He also appeared in a leading role in the film \"Blue Story\" in the same year.",
    "The film received critical acclaim, and Ward won the BAFTA Rising Star "
    "Award for his performance.",
]

FILM_SUMMARY_PREFIX = (
    "Micheal Ward (born 18 November 1997) is a Jamaican-British actor and "
    "former model.",
)

FILM_CLAIM = 'His films include "Blue Story" (2018) and "The Old Guard" (2020).'
FILM_REVISION = 'His films include "Blue Story".'
FILM_EVIDENCE = frozenset({18})

# Frozen golden for the claim's word-level tags. The claim tokenizes into 20
# words (quotes and parentheses split off); the revision keeps words 0..6
# ('His' through the closing quote) and word 19 (the period), so the
# incorrect set is exactly the film/date words in between.
FILM_CLAIM_WORDS = [
    "His", "films", "include", '"', "Blue", "Story", '"',
    "(", "2018", ")", "and", '"', "The", "Old", "Guard", '"',
    "(", "2020", ")", ".",
]
FILM_INCORRECT_INDICES = frozenset(range(7, 19))


def film_document() -> Document:
    return Document(
        "film-bio",
        (Section(None, tuple(
            Sentence(i, t) for i, t in enumerate(FILM_DOC_SENTENCES)
        )),),
    )


def dist(entries) -> TokenDistribution:
    return TokenDistribution(tuple(entries))


def script(nodes, terminal: str = TERMINAL) -> MockScript:
    """MockScript from {prefix tuple: [(token, prob), ...]}."""
    return MockScript(
        nodes={tuple(k): dist(v) for k, v in nodes.items()},
        terminal=terminal,
    )


def space_tokens(text: str) -> list[str]:
    """Output text as backend tokens: split on spaces, later chunks keep
    their leading space so plain concatenation reproduces the text."""
    chunks = text.split(" ")
    return [c if i == 0 else " " + c for i, c in enumerate(chunks)]


def emission_tokens(evidence_ids, revision: str) -> list[str]:
    """Token stream for a scripted 'EVIDENCE: ... REVISION: ...' output."""
    ids = " ".join(f"SENT{i}" for i in sorted(set(evidence_ids)))
    head = f"EVIDENCE: {ids}" if ids else "EVIDENCE:"
    return space_tokens(f"{head}\nREVISION: {revision}")


def emission_script(evidence_ids, revision: str, probs=None,
                    extra_nodes=None) -> MockScript:
    """Linear MockScript that greedily emits one fact-check output.

    ``probs`` aligns with the emitted token list (default 0.9 everywhere);
    ``extra_nodes`` adds or overrides node rows, e.g. to plant runner-up
    branches for thresholded decoding.
    """
    tokens = emission_tokens(evidence_ids, revision)
    if probs is None:
        probs = [0.9] * len(tokens)
    if len(probs) != len(tokens):
        raise ValueError(f"{len(tokens)} tokens need {len(probs)} probs")
    nodes = {}
    prefix = ()
    for token, p in zip(tokens, probs):
        nodes[prefix] = [(token, p)]
        prefix += (token,)
    for key, entries in (extra_nodes or {}).items():
        nodes[tuple(key)] = entries
    return script(nodes)


def routed_backend(routes, fallback=None) -> ScriptedBackend:
    """Backend answering each claim with its own script."""
    return ScriptedBackend(ScriptBundle(routes=dict(routes), fallback=fallback))


def film_backend() -> ScriptedBackend:
    """Backend scripted with the film example's reference answer."""
    return routed_backend({
        FILM_CLAIM: emission_script(FILM_EVIDENCE, FILM_REVISION),
    })


# --- threshold-sweep fixture -------------------------------------------------
#
# Two records with fully hand-computed pooled counts. Claim words:
#   A: The(0) rocket(1) launched(2) in(3) March(4) from(5) Texas(6)
#      carrying(7) twelve(8) satellites(9) .(10)          gt incorrect {5,6,8}
#   B: The(0) mission(1) lasted(2) nine(3) days(4) and(5) cost(6) two(7)
#      billion(8) dollars(9) .(10)                        gt incorrect {5..9}
#
# The scripted plain pass drops "from Texas" on A but keeps "twelve", and
# nails B exactly, so pooled plain counts are tp=7, fp=0, fn=1. The node
# behind " twelve" carries a runner-up that skips straight to " satellites.",
# so thresholded decoding at tau >= 0.15 deletes the word; every other token
# sits on a runner-up-less node and can only be flagged, never rewritten.
# Flag-mode false positives arrive in two steps (" carrying" at .7, then
# " March" at .8), which makes flag precision strictly non-increasing:
# 1.0, 1.0, 8/11, 8/12 across SWEEP_TAUS.

SWEEP_TAUS = (0.0, 0.2, 0.75, 0.85)

SWEEP_CLAIM_A = "The rocket launched in March from Texas carrying twelve satellites."
SWEEP_GT_REVISION_A = "The rocket launched in March carrying satellites."
SWEEP_PLAIN_REVISION_A = "The rocket launched in March carrying twelve satellites."

SWEEP_CLAIM_B = "The mission lasted nine days and cost two billion dollars."
SWEEP_GT_REVISION_B = "The mission lasted nine days."


def sweep_records():
    from claimcheck.evalkit import GroundTruthRecord

    doc_a = Document("sweep-a", (Section(None, (
        Sentence(0, "A rocket lifted off in March."),
        Sentence(1, "It carried a batch of satellites to orbit."),
    )),))
    doc_b = Document("sweep-b", (Section(None, (
        Sentence(0, "The crew returned safely."),
        Sentence(1, "The mission lasted nine days."),
    )),))
    return [
        GroundTruthRecord(
            doc=doc_a, claim=SWEEP_CLAIM_A,
            gt_evidence=frozenset({0}), gt_revision=SWEEP_GT_REVISION_A,
        ),
        GroundTruthRecord(
            doc=doc_b, claim=SWEEP_CLAIM_B,
            gt_evidence=frozenset({1}), gt_revision=SWEEP_GT_REVISION_B,
        ),
    ]


def sweep_routes() -> dict:
    tokens_a = emission_tokens({0}, SWEEP_PLAIN_REVISION_A)
    probs_a = [0.9] * len(tokens_a)
    probs_a[tokens_a.index(" March")] = 0.8
    probs_a[tokens_a.index(" carrying")] = 0.7
    twelve = tokens_a.index(" twelve")
    probs_a[twelve] = 0.15
    script_a = emission_script(
        {0}, SWEEP_PLAIN_REVISION_A, probs=probs_a,
        extra_nodes={
            tuple(tokens_a[:twelve]): [(" twelve", 0.15), (" satellites.", 0.10)],
        },
    )

    tokens_b = emission_tokens({1}, SWEEP_GT_REVISION_B)
    probs_b = [0.9] * len(tokens_b)
    probs_b[-1] = 0.7   # ' days.'
    script_b = emission_script({1}, SWEEP_GT_REVISION_B, probs=probs_b)

    return {SWEEP_CLAIM_A: script_a, SWEEP_CLAIM_B: script_b}


def sweep_backend() -> ScriptedBackend:
    return routed_backend(sweep_routes())
