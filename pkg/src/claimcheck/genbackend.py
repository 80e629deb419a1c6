"""Generation backends: next-token distributions and greedy completion.

Three interchangeable implementations: a deterministic scripted mock for
tests, an echo backend that parrots the claim back (useful as a live demo
without a model), and an HTTP client for a real model server. Tokens are
opaque strings owned by the backend; the engine never re-tokenizes them,
it only concatenates.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from typing import Mapping, Protocol, Sequence

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .errors import BackendUnavailable, ContextOverflow
from .promptio import DEFAULT_OUTPUT_BUDGET

TERMINAL = "</s>"

# Joins prefix tokens into MockScript node keys; U+241F (symbol for unit
# separator) so arbitrary token text cannot collide with the join.
_KEY_SEP = "␟"

_PROB_EPS = 1e-6


@dataclass(frozen=True)
class BackendQuery:
    """One fact-checking request: the rendered prompt plus decode limits."""

    input_text: str
    max_new_tokens: int = DEFAULT_OUTPUT_BUDGET
    greedy: bool = True

    def __post_init__(self):
        if self.max_new_tokens < 1:
            raise ValueError("max_new_tokens must be at least 1")


@dataclass(frozen=True)
class TokenDistribution:
    """Top-k candidate tokens with probabilities, sorted most likely first."""

    entries: tuple[tuple[str, float], ...]

    def __post_init__(self):
        for token, prob in self.entries:
            if not 0.0 <= prob <= 1.0:
                raise ValueError(f"probability {prob} for {token!r} outside [0, 1]")
        tokens = [t for t, _ in self.entries]
        if len(set(tokens)) != len(tokens):
            raise ValueError("duplicate token in distribution")
        ordered = tuple(sorted(self.entries, key=lambda e: -e[1]))
        object.__setattr__(self, "entries", ordered)
        if self.coverage > 1.0 + _PROB_EPS:
            raise ValueError(f"probabilities sum to {self.coverage}, above 1")

    @property
    def coverage(self) -> float:
        return sum(p for _, p in self.entries)

    def prob_of(self, token: str) -> float:
        for t, p in self.entries:
            if t == token:
                return p
        return 0.0

    def top(self) -> tuple[str, float]:
        if not self.entries:
            raise ValueError("empty distribution has no top token")
        return self.entries[0]

    def runner_up(self, excluding: str) -> tuple[str, float] | None:
        """Most likely token that is not ``excluding``; None if there is none."""
        for t, p in self.entries:
            if t != excluding:
                return (t, p)
        return None


@dataclass(frozen=True)
class DecodedOutput:
    """A completed decode: emitted tokens plus each token's probability."""

    tokens: tuple[str, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        if len(self.tokens) != len(self.probs):
            raise ValueError("one probability per token")

    @property
    def text(self) -> str:
        return "".join(self.tokens)


@dataclass(frozen=True)
class MockScript:
    """Deterministic token trie: prefix -> next-token distribution.

    Prefixes with no entry fall through to a terminal-only distribution, so
    every scripted path ends cleanly without spelling out each leaf.
    """

    nodes: Mapping[tuple[str, ...], TokenDistribution]
    terminal: str = TERMINAL

    def distribution(self, prefix: Sequence[str]) -> TokenDistribution:
        node = self.nodes.get(tuple(prefix))
        if node is None:
            return TokenDistribution(((self.terminal, 1.0),))
        return node

    @classmethod
    def from_payload(cls, payload: dict) -> "MockScript":
        nodes = {}
        for key, entries in payload["nodes"].items():
            prefix = tuple(key.split(_KEY_SEP)) if key else ()
            nodes[prefix] = TokenDistribution(
                tuple((e["token"], float(e["prob"])) for e in entries)
            )
        return cls(nodes=nodes, terminal=payload.get("terminal", TERMINAL))

    def to_payload(self) -> dict:
        return {
            "nodes": {
                _KEY_SEP.join(prefix): [
                    {"token": t, "prob": p} for t, p in dist.entries
                ]
                for prefix, dist in self.nodes.items()
            },
            "terminal": self.terminal,
        }

    @classmethod
    def from_file(cls, path) -> "MockScript":
        with open(path, encoding="utf-8") as fh:
            return cls.from_payload(json.load(fh))


@dataclass(frozen=True)
class ScriptBundle:
    """Routes queries to per-claim scripts (mock plumbing for multi-sentence runs).

    The routing key is the text after the final "CLAIM: " marker of the
    input, so one bundle can serve a whole session.
    """

    routes: Mapping[str, MockScript]
    fallback: MockScript | None = None

    def script_for(self, input_text: str) -> MockScript:
        claim = claim_of(input_text)
        script = self.routes.get(claim, self.fallback)
        if script is None:
            raise BackendUnavailable(f"no script routed for claim {claim!r}")
        return script

    @classmethod
    def from_payload(cls, payload: dict) -> "ScriptBundle":
        routes = {
            claim: MockScript.from_payload(sub)
            for claim, sub in payload.get("claims", {}).items()
        }
        fallback = payload.get("default")
        return cls(
            routes=routes,
            fallback=MockScript.from_payload(fallback) if fallback else None,
        )

    @classmethod
    def from_file(cls, path) -> "ScriptBundle":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        if "nodes" in payload:  # plain single-script file
            return cls(routes={}, fallback=MockScript.from_payload(payload))
        return cls.from_payload(payload)


def claim_of(input_text: str) -> str:
    """The claim line of a rendered prompt (routing key for mocks)."""
    marker = "\nCLAIM: "
    at = input_text.rfind(marker)
    return input_text[at + len(marker):] if at >= 0 else input_text


class Backend(Protocol):
    def next_token_probs(self, query: BackendQuery, prefix: Sequence[str]) -> TokenDistribution:
        ...

    def generate(self, query: BackendQuery, prefix: Sequence[str],
                 max_new_tokens: int | None = None) -> DecodedOutput:
        ...


class ScriptedBackend:
    """Replays a MockScript (or per-claim bundle) deterministically."""

    def __init__(self, source: MockScript | ScriptBundle,
                 context_limit: int | None = None):
        self._source = source
        self._context_limit = context_limit

    def _script(self, query: BackendQuery) -> MockScript:
        if isinstance(self._source, ScriptBundle):
            return self._source.script_for(query.input_text)
        return self._source

    def next_token_probs(self, query: BackendQuery, prefix: Sequence[str]) -> TokenDistribution:
        if self._context_limit is not None and len(prefix) >= self._context_limit:
            raise ContextOverflow(
                f"prefix of {len(prefix)} tokens exceeds context limit {self._context_limit}"
            )
        return self._script(query).distribution(prefix)

    def generate(self, query: BackendQuery, prefix: Sequence[str],
                 max_new_tokens: int | None = None) -> DecodedOutput:
        limit = query.max_new_tokens if max_new_tokens is None else max_new_tokens
        terminal = self._script(query).terminal
        out_tokens: list[str] = []
        out_probs: list[float] = []
        current = list(prefix)
        while len(out_tokens) < limit:
            token, prob = self.next_token_probs(query, current).top()
            if token == terminal:
                break
            out_tokens.append(token)
            out_probs.append(prob)
            current.append(token)
        return DecodedOutput(tuple(out_tokens), tuple(out_probs))


class EchoBackend:
    """Backend that finds no errors: echoes the claim as the revision.

    Handy for exercising the service and UI without a model or script. The
    emitted token stream is the output grammar split on spaces, all at
    probability 1.0.
    """

    def _target(self, query: BackendQuery) -> list[str]:
        claim = claim_of(query.input_text)
        raw = f"EVIDENCE:\nREVISION: {claim}"
        chunks = raw.split(" ")
        tokens = []
        for i, chunk in enumerate(chunks):
            tokens.append(chunk if i == 0 else " " + chunk)
        return tokens

    def next_token_probs(self, query: BackendQuery, prefix: Sequence[str]) -> TokenDistribution:
        target = self._target(query)
        at = len(prefix)
        if list(prefix) != target[:at] or at >= len(target):
            return TokenDistribution(((TERMINAL, 1.0),))
        return TokenDistribution(((target[at], 1.0),))

    def generate(self, query: BackendQuery, prefix: Sequence[str],
                 max_new_tokens: int | None = None) -> DecodedOutput:
        limit = query.max_new_tokens if max_new_tokens is None else max_new_tokens
        target = self._target(query)
        at = len(prefix)
        if list(prefix) != target[:at]:
            return DecodedOutput((), ())
        rest = tuple(target[at:at + limit])
        return DecodedOutput(rest, (1.0,) * len(rest))


class HttpBackend:
    """Client for a model server speaking the /v1/next_token|generate protocol."""

    def __init__(self, base_url: str, *, timeout: float = 30.0,
                 retries: int = 2, backoff: float = 0.25, client=None):
        import httpx

        self._base = base_url.rstrip("/")
        self._retries = retries
        self._backoff = backoff
        self._client = client or httpx.Client(timeout=timeout)

    def _post(self, path: str, payload: dict) -> dict:
        import httpx

        last_error: Exception | None = None
        for attempt in range(self._retries + 1):
            try:
                resp = self._client.post(self._base + path, json=payload)
            except httpx.HTTPError as exc:
                last_error = exc
            else:
                if resp.status_code == 413:
                    raise ContextOverflow(resp.text)
                if resp.status_code < 500:
                    resp.raise_for_status()
                    return resp.json()
                last_error = RuntimeError(f"{resp.status_code}: {resp.text[:200]}")
            if attempt < self._retries:
                time.sleep(self._backoff * (2 ** attempt))
        raise BackendUnavailable(str(last_error))

    def next_token_probs(self, query: BackendQuery, prefix: Sequence[str]) -> TokenDistribution:
        data = self._post("/v1/next_token", {
            "input": query.input_text,
            "prefix": list(prefix),
        })
        return TokenDistribution(
            tuple((e["token"], float(e["prob"])) for e in data["top"])
        )

    def generate(self, query: BackendQuery, prefix: Sequence[str],
                 max_new_tokens: int | None = None) -> DecodedOutput:
        limit = query.max_new_tokens if max_new_tokens is None else max_new_tokens
        data = self._post("/v1/generate", {
            "input": query.input_text,
            "prefix": list(prefix),
            "max_new_tokens": limit,
        })
        return DecodedOutput(tuple(data["tokens"]), tuple(data["probs"]))


def greedy_complete(backend: Backend, query: BackendQuery,
                    prefix: Sequence[str],
                    max_new_tokens: int | None = None) -> list[str]:
    """Greedy completion of ``prefix``; returns only the new tokens."""
    return list(backend.generate(query, prefix, max_new_tokens).tokens)


def run_fact_check_pass(backend: Backend, query: BackendQuery) -> DecodedOutput:
    """Full greedy decode from an empty prefix, keeping per-token probabilities."""
    return backend.generate(query, ())


def build_backend(spec: str) -> Backend:
    """Backend from a URL-ish spec: http(s)://..., mock:<script.json>, echo:."""
    if spec.startswith(("http://", "https://")):
        return HttpBackend(spec)
    if spec.startswith("mock:"):
        return ScriptedBackend(ScriptBundle.from_file(spec[len("mock:"):]))
    if spec in ("echo", "echo:"):
        return EchoBackend()
    raise ValueError(f"unrecognized backend spec {spec!r}")


def mock_backend_app(source: MockScript | ScriptBundle | ScriptedBackend | EchoBackend):
    """ASGI app exposing a scripted backend over the wire protocol."""
    if isinstance(source, (EchoBackend, ScriptedBackend)):
        backend = source
    else:
        backend = ScriptedBackend(source)
    app = FastAPI(title="claimcheck mock backend")

    @app.post("/v1/next_token")
    async def next_token(request: Request):
        body = await request.json()
        query = BackendQuery(input_text=body["input"])
        try:
            dist = backend.next_token_probs(query, tuple(body.get("prefix", ())))
        except ContextOverflow as exc:
            return JSONResponse({"error": str(exc)}, status_code=413)
        return {"top": [{"token": t, "prob": p} for t, p in dist.entries]}

    @app.post("/v1/generate")
    async def generate(request: Request):
        body = await request.json()
        query = BackendQuery(
            input_text=body["input"],
            max_new_tokens=int(body.get("max_new_tokens", DEFAULT_OUTPUT_BUDGET)),
        )
        try:
            out = backend.generate(query, tuple(body.get("prefix", ())))
        except ContextOverflow as exc:
            return JSONResponse({"error": str(exc)}, status_code=413)
        return {"tokens": list(out.tokens), "probs": list(out.probs)}

    return app
