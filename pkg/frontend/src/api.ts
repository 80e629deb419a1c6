/**
 * Typed client for the claimcheck review service. Every call goes through
 * the REST API; the browser never computes diffs or verdicts itself.
 */

export interface DocSectionPayload {
  title: string | null;
  sentences: string[];
}

export interface DocPayload {
  doc_id: string;
  sections: DocSectionPayload[];
}

export interface EditSpan {
  start: number;
  end: number;
  replacement: string[];
  status: "suggested" | "accepted" | "rejected";
}

export interface CheckResult {
  claim: string;
  evidence: number[];
  revision: string;
  edits: EditSpan[];
  tags: { words: string[]; incorrect: boolean[] };
  per_token_probs: number[] | null;
}

export interface SentenceView {
  index: number;
  text: string;
  checked_claim: string | null;
  result: CheckResult | null;
  accepted_edits: number[];
  edit_verdicts: Array<{ edit: number; verdict: string }>;
  evidence_verdicts: Array<{ id: number; verdict: string }>;
  new_evidence: number[];
  sufficient: boolean | null;
  invalid: boolean;
}

export interface SessionView {
  session_id: string;
  doc: DocPayload;
  sentences: SentenceView[];
  created_at: number;
  updated_at: number;
}

export interface CheckResponse {
  index: number;
  cached: boolean;
  result: CheckResult;
}

export interface CheckAllResponse {
  results: Array<CheckResult | null>;
  cached: boolean[];
  failed: Array<{ index: number; error: string }>;
  consistent: boolean | null;
  report: unknown;
}

export type Verdict =
  | { index: number; kind: "edit"; edit_index: number; verdict: "accepted" | "rejected" }
  | { index: number; kind: "evidence"; evidence_id: number; verdict: "relevant" | "not_relevant" }
  | { index: number; kind: "new_evidence"; evidence_id: number; add: boolean }
  | { index: number; kind: "sufficiency"; verdict: boolean }
  | { index: number; kind: "invalid"; verdict: boolean };

/** Error envelope raised for any non-2xx response. */
export class ApiError extends Error {
  readonly status: number;
  readonly code: string;
  readonly retriable: boolean;

  constructor(status: number, code: string, message: string, retriable = false) {
    super(message);
    this.name = "ApiError";
    this.status = status;
    this.code = code;
    this.retriable = retriable;
  }

  get isStale(): boolean {
    return this.code === "stale_edit";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export interface Client {
  listSessions(): Promise<string[]>;
  createSession(doc: DocPayload | { doc_id: string; text: string }, summary: string | string[]): Promise<SessionView>;
  getSession(id: string): Promise<SessionView>;
  checkSentence(id: string, index: number, tau?: number): Promise<CheckResponse>;
  checkAll(id: string, tau?: number): Promise<CheckAllResponse>;
  sendVerdict(id: string, verdict: Verdict): Promise<SentenceView>;
  editSentence(id: string, index: number, text: string): Promise<SentenceView>;
  fetchAnnotations(id: string): Promise<string>;
}

const asError = async (response: Response): Promise<ApiError> => {
  let code = "unknown";
  let message = `${response.status} ${response.statusText}`;
  let retriable = false;
  try {
    const body = await response.json();
    if (body && typeof body === "object") {
      code = typeof body.code === "string" ? body.code : code;
      message = typeof body.error === "string" ? body.error : message;
      retriable = body.retriable === true;
    }
  } catch {
    // non-JSON error body, keep the status line
  }
  return new ApiError(response.status, code, message, retriable);
};

export const createClient = (baseUrl: string, fetchFn?: FetchLike): Client => {
  const doFetch: FetchLike = fetchFn ?? ((input, init) => fetch(input, init));
  const base = baseUrl.replace(/\/+$/, "");

  const request = async <T>(method: string, path: string, body?: unknown): Promise<T> => {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await doFetch(`${base}${path}`, init);
    if (!response.ok) throw await asError(response);
    return (await response.json()) as T;
  };

  return {
    async listSessions() {
      const body = await request<{ sessions: string[] }>("GET", "/sessions");
      return body.sessions;
    },

    createSession(doc, summary) {
      return request<SessionView>("POST", "/sessions", { doc, summary });
    },

    getSession(id) {
      return request<SessionView>("GET", `/sessions/${id}`);
    },

    checkSentence(id, index, tau) {
      const body = tau === undefined ? {} : { tau };
      return request<CheckResponse>("POST", `/sessions/${id}/check/${index}`, body);
    },

    checkAll(id, tau) {
      const body = tau === undefined ? {} : { tau };
      return request<CheckAllResponse>("POST", `/sessions/${id}/check-all`, body);
    },

    async sendVerdict(id, verdict) {
      const body = await request<{ sentence: SentenceView }>(
        "POST", `/sessions/${id}/verdict`, verdict,
      );
      return body.sentence;
    },

    async editSentence(id, index, text) {
      const body = await request<{ sentence: SentenceView }>(
        "PUT", `/sessions/${id}/sentence/${index}`, { text },
      );
      return body.sentence;
    },

    async fetchAnnotations(id) {
      const response = await doFetch(`${base}/sessions/${id}/annotations`, { method: "GET" });
      if (!response.ok) throw await asError(response);
      return response.text();
    }
  };
};
