/**
 * In-memory stand-in for the review service, speaking the same REST shapes.
 * Tests point the app's injectable fetch at FakeService.fetch and assert on
 * the recorded calls, so the UI is exercised exactly as a thin client.
 */

import type {
  CheckResult, DocPayload, FetchLike, SentenceView, SessionView
} from "../src/api.js";

export const DOC: DocPayload = {
  doc_id: "cat-doc",
  sections: [
    { title: "Background", sentences: ["A cat sat on a mat.", "It was grey."] },
    { title: null, sentences: ["The mat was red."] }
  ]
};

export const SUMMARY = [
  "The cat sat on the mat.",
  "The cat was orange and large.",
  "The mat was red and worn."
];

const CLEAN_RESULT: CheckResult = {
  claim: SUMMARY[0],
  evidence: [0],
  revision: SUMMARY[0],
  edits: [],
  tags: {
    words: ["The", "cat", "sat", "on", "the", "mat", "."],
    incorrect: [false, false, false, false, false, false, false]
  },
  per_token_probs: null
};

const FLAWED_RESULT: CheckResult = {
  claim: SUMMARY[1],
  evidence: [1, 0],
  revision: "The cat was grey .",
  edits: [{ start: 3, end: 6, replacement: ["grey"], status: "suggested" }],
  tags: {
    words: ["The", "cat", "was", "orange", "and", "large", "."],
    incorrect: [false, false, false, true, true, true, false]
  },
  per_token_probs: null
};

const DELETION_RESULT: CheckResult = {
  claim: SUMMARY[2],
  evidence: [2],
  revision: "The mat was red .",
  edits: [{ start: 4, end: 6, replacement: [], status: "suggested" }],
  tags: {
    words: ["The", "mat", "was", "red", "and", "worn", "."],
    incorrect: [false, false, false, false, true, true, false]
  },
  per_token_probs: null
};

const CLEAN_GREY: CheckResult = {
  claim: "The cat was grey .",
  evidence: [1],
  revision: "The cat was grey .",
  edits: [],
  tags: {
    words: ["The", "cat", "was", "grey", "."],
    incorrect: [false, false, false, false, false]
  },
  per_token_probs: null
};

const CLEAN_TRIMMED_MAT: CheckResult = {
  claim: "The mat was red .",
  evidence: [2],
  revision: "The mat was red .",
  edits: [],
  tags: {
    words: ["The", "mat", "was", "red", "."],
    incorrect: [false, false, false, false, false]
  },
  per_token_probs: null
};

export const SCRIPTED: Array<[string, CheckResult]> = [
  [SUMMARY[0], CLEAN_RESULT],
  [SUMMARY[1], FLAWED_RESULT],
  [SUMMARY[2], DELETION_RESULT],
  ["The cat was grey .", CLEAN_GREY],
  ["The mat was red .", CLEAN_TRIMMED_MAT]
];

interface ServerSentence {
  text: string;
  checkedClaim: string | null;
  result: CheckResult | null;
  acceptedEdits: Set<number>;
  editVerdicts: Map<number, string>;
  evidenceVerdicts: Map<number, string>;
  newEvidence: Set<number>;
  sufficient: boolean | null;
  invalid: boolean;
}

interface ServerSession {
  id: string;
  doc: DocPayload;
  sentences: ServerSentence[];
}

// rough stand-in for the service's word tokenizer: whitespace split with a
// trailing period broken off, enough for the fixture sentences
const tokenize = (text: string): string[] =>
  text.split(/\s+/).filter(Boolean).flatMap((word) =>
    word.length > 1 && word.endsWith(".") ? [word.slice(0, -1), "."] : [word]);

const spliceWords = (result: CheckResult, accepted: Set<number>): string[] => {
  const out: string[] = [];
  let at = 0;
  result.edits.forEach((edit, i) => {
    out.push(...result.tags.words.slice(at, edit.start));
    if (accepted.has(i)) out.push(...edit.replacement);
    else out.push(...result.tags.words.slice(edit.start, edit.end));
    at = edit.end;
  });
  out.push(...result.tags.words.slice(at));
  return out;
};

const sameTokens = (a: string[], b: string[]): boolean =>
  a.length === b.length && a.every((word, i) => word === b[i]);

const json = (status: number, body: unknown): Response =>
  new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" }
  });

const sentenceView = (s: ServerSentence, index: number): SentenceView => ({
  index,
  text: s.text,
  checked_claim: s.checkedClaim,
  result: s.result,
  accepted_edits: [...s.acceptedEdits].sort((a, b) => a - b),
  edit_verdicts: [...s.editVerdicts.entries()]
    .sort((a, b) => a[0] - b[0])
    .map(([edit, verdict]) => ({ edit, verdict })),
  evidence_verdicts: [...s.evidenceVerdicts.entries()]
    .sort((a, b) => a[0] - b[0])
    .map(([id, verdict]) => ({ id, verdict })),
  new_evidence: [...s.newEvidence].sort((a, b) => a - b),
  sufficient: s.sufficient,
  invalid: s.invalid
});

export class FakeService {
  readonly calls: string[] = [];
  backendDown = false;
  private readonly sessions = new Map<string, ServerSession>();
  private readonly scripted = new Map(SCRIPTED);
  private nextId = 1;

  addSession(summary: string[] = SUMMARY, doc: DocPayload = DOC): string {
    const id = `s${this.nextId++}`;
    this.sessions.set(id, {
      id,
      doc,
      sentences: summary.map((text) => ({
        text,
        checkedClaim: null,
        result: null,
        acceptedEdits: new Set(),
        editVerdicts: new Map(),
        evidenceVerdicts: new Map(),
        newEvidence: new Set(),
        sufficient: null,
        invalid: false
      }))
    });
    return id;
  }

  callsMatching(pattern: RegExp): string[] {
    return this.calls.filter((entry) => pattern.test(entry));
  }

  private view(session: ServerSession): SessionView {
    return {
      session_id: session.id,
      doc: session.doc,
      sentences: session.sentences.map(sentenceView),
      created_at: 0,
      updated_at: 0
    };
  }

  private check(session: ServerSession, index: number): Response {
    if (this.backendDown) {
      return json(502, {
        error: "backend is down", code: "backend_unavailable", retriable: true
      });
    }
    const sentence = session.sentences[index];
    if (!sentence) {
      return json(404, { error: `sentence ${index}`, code: "not_found" });
    }
    const result = this.scripted.get(sentence.text);
    if (!result) {
      return json(502, {
        error: `no script for ${sentence.text}`, code: "backend_error", retriable: false
      });
    }
    sentence.result = result;
    sentence.checkedClaim = sentence.text;
    sentence.acceptedEdits = new Set();
    return json(200, { index, cached: false, result });
  }

  private verdict(session: ServerSession, body: Record<string, unknown>): Response {
    const index = body.index as number;
    const sentence = session.sentences[index];
    if (!sentence) {
      return json(404, { error: `sentence ${index}`, code: "not_found" });
    }
    const kind = body.kind as string;

    if (kind === "edit" || kind === "evidence") {
      if (!sentence.result || sentence.checkedClaim === null) {
        return json(409, { error: "not checked yet", code: "stale_edit" });
      }
      const expected = spliceWords(sentence.result, sentence.acceptedEdits);
      if (!sameTokens(tokenize(sentence.text), expected)) {
        return json(409, { error: "sentence changed", code: "stale_edit" });
      }
    }

    if (kind === "edit") {
      const editIndex = body.edit_index as number;
      const verdict = body.verdict as string;
      if (!sentence.result!.edits[editIndex]) {
        return json(400, { error: "bad edit index", code: "bad_request" });
      }
      sentence.editVerdicts.set(editIndex, verdict);
      if (verdict === "accepted") {
        sentence.acceptedEdits.add(editIndex);
        sentence.text = spliceWords(sentence.result!, sentence.acceptedEdits).join(" ");
      }
    } else if (kind === "evidence") {
      const id = body.evidence_id as number;
      if (!sentence.result!.evidence.includes(id)) {
        return json(400, { error: "not suggested", code: "bad_request" });
      }
      sentence.evidenceVerdicts.set(id, body.verdict as string);
    } else if (kind === "new_evidence") {
      const id = body.evidence_id as number;
      if (body.add === false) sentence.newEvidence.delete(id);
      else sentence.newEvidence.add(id);
    } else if (kind === "sufficiency") {
      sentence.sufficient = Boolean(body.verdict);
    } else if (kind === "invalid") {
      sentence.invalid = Boolean(body.verdict);
      if (sentence.invalid) {
        sentence.editVerdicts.clear();
        sentence.evidenceVerdicts.clear();
        sentence.newEvidence.clear();
        sentence.sufficient = null;
        sentence.acceptedEdits.clear();
      }
    } else {
      return json(400, { error: `unknown kind ${kind}`, code: "bad_request" });
    }
    return json(200, { sentence: sentenceView(sentence, index) });
  }

  private annotations(session: ServerSession): Response {
    const lines: string[] = [];
    session.sentences.forEach((s, index) => {
      const reviewed = s.invalid || s.editVerdicts.size > 0
        || s.evidenceVerdicts.size > 0 || s.newEvidence.size > 0
        || s.sufficient !== null;
      if (!reviewed) return;
      lines.push(JSON.stringify({
        session_id: session.id,
        index,
        claim: s.checkedClaim ?? s.text,
        edit_verdicts: s.invalid ? [] : [...s.editVerdicts.values()],
        evidence_verdicts: s.invalid ? [] : [...s.evidenceVerdicts.values()],
        corrected_revision: null,
        new_evidence: s.invalid ? [] : [...s.newEvidence].sort((a, b) => a - b),
        sufficient: s.invalid ? null : s.sufficient,
        invalid: s.invalid
      }));
    });
    return new Response(lines.map((l) => l + "\n").join(""), {
      status: 200,
      headers: { "content-type": "application/x-ndjson" }
    });
  }

  readonly fetch: FetchLike = async (input, init) => {
    const method = init?.method ?? "GET";
    const path = input.replace(/^https?:\/\/[^/]+/, "");
    this.calls.push(`${method} ${path}`);
    const body = init?.body ? JSON.parse(String(init.body)) : {};

    if (method === "GET" && path === "/sessions") {
      return json(200, { sessions: [...this.sessions.keys()] });
    }
    if (method === "POST" && path === "/sessions") {
      const summary = Array.isArray(body.summary) ? body.summary : [body.summary];
      const id = this.addSession(summary, body.doc);
      return json(201, this.view(this.sessions.get(id)!));
    }

    const match = path.match(/^\/sessions\/([^/]+)(\/.*)?$/);
    const session = match ? this.sessions.get(match[1]) : undefined;
    if (!match || !session) {
      return json(404, { error: path, code: "not_found" });
    }
    const rest = match[2] ?? "";

    if (method === "GET" && rest === "") return json(200, this.view(session));
    if (method === "GET" && rest === "/annotations") return this.annotations(session);
    if (method === "POST" && rest === "/check-all") {
      const results: Array<CheckResult | null> = [];
      const failed: Array<{ index: number; error: string }> = [];
      for (let i = 0; i < session.sentences.length; i++) {
        const response = this.check(session, i);
        if (response.status === 200) {
          results.push(((await response.json()) as { result: CheckResult }).result);
        } else {
          results.push(null);
          failed.push({ index: i, error: "check failed" });
        }
      }
      const consistent = failed.length > 0
        ? null
        : results.every((r) => r !== null && r.edits.length === 0);
      return json(200, { results, cached: results.map(() => false), failed, consistent, report: null });
    }
    const checkMatch = rest.match(/^\/check\/(\d+)$/);
    if (method === "POST" && checkMatch) {
      return this.check(session, Number(checkMatch[1]));
    }
    if (method === "POST" && rest === "/verdict") {
      return this.verdict(session, body);
    }
    const editMatch = rest.match(/^\/sentence\/(\d+)$/);
    if (method === "PUT" && editMatch) {
      const sentence = session.sentences[Number(editMatch[1])];
      const text = String(body.text ?? "").split(/\s+/).filter(Boolean).join(" ");
      if (!sentence || !text) {
        return json(400, { error: "bad edit", code: "bad_request" });
      }
      sentence.text = text;
      return json(200, { sentence: sentenceView(sentence, Number(editMatch[1])) });
    }
    return json(404, { error: path, code: "not_found" });
  };
}

/** Waits for queued promise callbacks from fire-and-forget handlers. */
export const flush = async (rounds = 6): Promise<void> => {
  for (let i = 0; i < rounds; i++) await Promise.resolve();
};
