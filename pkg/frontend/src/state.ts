/**
 * View state and the pure transitions the UI applies to it. Everything
 * factual comes from service responses; this module only arranges it for
 * rendering, so reloading a session reconstructs an identical view.
 */

import type { SentenceView, SessionView } from "./api.js";

export type Mode = "review" | "annotate";

export interface DocSentence {
  id: number;
  section: number;
  title: string | null;
  text: string;
}

export interface Toast {
  message: string;
  kind: "retriable" | "stale" | "plain";
  index: number | null;
}

export interface ViewState {
  session: SessionView | null;
  sessionIds: string[];
  mode: Mode;
  /** document sentence id under an evidence hover, at most one at a time */
  hover: number | null;
  /** summary indices with a check in flight */
  busy: Set<number>;
  /** verdict/edit calls in flight; mode switches wait for zero */
  pendingVerdicts: number;
  /** summary index collecting new-evidence clicks, annotate mode only */
  markingEvidenceFor: number | null;
  banner: string | null;
  toast: Toast | null;
}

export const initialState = (): ViewState => ({
  session: null,
  sessionIds: [],
  mode: "review",
  hover: null,
  busy: new Set(),
  pendingVerdicts: 0,
  markingEvidenceFor: null,
  banner: null,
  toast: null
});

/**
 * Flatten the document payload into addressable sentences. Ids run 0..n-1
 * in reading order across sections, matching the SENT ids the service's
 * evidence lists refer to.
 */
export const docSentences = (session: SessionView): DocSentence[] => {
  const out: DocSentence[] = [];
  let id = 0;
  session.doc.sections.forEach((section, s) => {
    for (const text of section.sentences) {
      out.push({ id, section: s, title: section.title, text });
      id += 1;
    }
  });
  return out;
};

export const setSession = (state: ViewState, session: SessionView): ViewState => ({
  ...state,
  session,
  hover: null,
  markingEvidenceFor: null,
  banner: null
});

export const setSessionIds = (state: ViewState, ids: string[]): ViewState => ({
  ...state,
  sessionIds: ids
});

/** Replace one sentence with the view the service returned for it. */
export const applySentence = (state: ViewState, sentence: SentenceView): ViewState => {
  if (!state.session) return state;
  const sentences = state.session.sentences.slice();
  sentences[sentence.index] = sentence;
  return { ...state, session: { ...state.session, sentences } };
};

export const setHover = (state: ViewState, id: number | null): ViewState =>
  state.hover === id ? state : { ...state, hover: id };

export const setBusy = (state: ViewState, index: number, on: boolean): ViewState => {
  const busy = new Set(state.busy);
  if (on) busy.add(index);
  else busy.delete(index);
  return { ...state, busy };
};

export const beginVerdict = (state: ViewState): ViewState => ({
  ...state,
  pendingVerdicts: state.pendingVerdicts + 1
});

export const endVerdict = (state: ViewState): ViewState => ({
  ...state,
  pendingVerdicts: Math.max(0, state.pendingVerdicts - 1)
});

/** Mode switches are refused while verdicts are still in flight. */
export const setMode = (state: ViewState, mode: Mode): ViewState => {
  if (state.pendingVerdicts > 0) return state;
  return { ...state, mode, markingEvidenceFor: null };
};

export const setMarking = (state: ViewState, index: number | null): ViewState => ({
  ...state,
  markingEvidenceFor: state.markingEvidenceFor === index ? null : index
});

export const setBanner = (state: ViewState, banner: string | null): ViewState => ({
  ...state,
  banner
});

export const setToast = (state: ViewState, toast: Toast | null): ViewState => ({
  ...state,
  toast
});

/** The sentence's result is current only if it was computed for this text. */
export const resultIsCurrent = (sentence: SentenceView): boolean =>
  sentence.result !== null && sentence.checked_claim === sentence.text;

export const verdictFor = (sentence: SentenceView, editIndex: number): string | null => {
  for (const entry of sentence.edit_verdicts) {
    if (entry.edit === editIndex) return entry.verdict;
  }
  return null;
};

export const evidenceVerdictFor = (sentence: SentenceView, id: number): string | null => {
  for (const entry of sentence.evidence_verdicts) {
    if (entry.id === id) return entry.verdict;
  }
  return null;
};

/** Id of the neighbouring session for the summary-cycling controls. */
export const cycleTarget = (state: ViewState, step: 1 | -1): string | null => {
  if (!state.session || state.sessionIds.length < 2) return null;
  const at = state.sessionIds.indexOf(state.session.session_id);
  if (at < 0) return null;
  const n = state.sessionIds.length;
  return state.sessionIds[(at + step + n) % n];
};
