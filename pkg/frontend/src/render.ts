import type { SentenceView } from "./api.js";
import type { Mode, ViewState } from "./state.js";
import {
  cycleTarget, docSentences, evidenceVerdictFor, resultIsCurrent, verdictFor
} from "./state.js";

export interface Handlers {
  onCheck(index: number): void;
  onCheckAll(): void;
  onHoverEvidence(id: number | null): void;
  onJumpToEvidence(id: number): void;
  onEditVerdict(index: number, editIndex: number, verdict: "accepted" | "rejected"): void;
  onEvidenceVerdict(index: number, id: number, verdict: "relevant" | "not_relevant"): void;
  onToggleMarking(index: number): void;
  onDocSentenceClick(id: number): void;
  onRemoveNewEvidence(index: number, id: number): void;
  onSufficiency(index: number, verdict: boolean): void;
  onInvalid(index: number, verdict: boolean): void;
  onSaveText(index: number, text: string): void;
  onModeSwitch(mode: Mode): void;
  onCycle(step: 1 | -1): void;
  onToastAction(): void;
  onDismissToast(): void;
}

const el = <K extends keyof HTMLElementTagNameMap>(
  tag: K, className?: string, text?: string,
): HTMLElementTagNameMap[K] => {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
};

const button = (className: string, label: string, onClick: () => void): HTMLButtonElement => {
  const btn = el("button", className, label);
  btn.type = "button";
  btn.addEventListener("click", (e) => {
    e.preventDefault();
    onClick();
  });
  return btn;
};

/** Toggle the single hover highlight without rebuilding the view. */
export const applyHover = (root: HTMLElement, id: number | null): void => {
  for (const node of root.querySelectorAll(".cc-doc-sentence.is-highlighted")) {
    node.classList.remove("is-highlighted");
  }
  if (id !== null) {
    root.querySelector(`.cc-doc-sentence[data-id="${id}"]`)?.classList.add("is-highlighted");
  }
};

const renderDocPane = (state: ViewState, handlers: Handlers): HTMLElement => {
  const pane = el("section", "cc-pane cc-doc-pane");
  pane.appendChild(el("h2", "cc-pane-title", "Reference document"));
  if (!state.session) return pane;

  const marking = state.markingEvidenceFor;
  const markedIds = new Set(
    marking === null ? [] : state.session.sentences[marking]?.new_evidence ?? [],
  );

  let currentSection = -1;
  let sectionEl: HTMLElement | null = null;
  for (const sentence of docSentences(state.session)) {
    if (sentence.section !== currentSection) {
      currentSection = sentence.section;
      sectionEl = el("div", "cc-doc-section");
      if (sentence.title) sectionEl.appendChild(el("h3", "cc-doc-heading", sentence.title));
      pane.appendChild(sectionEl);
    }
    const span = el("span", "cc-doc-sentence", sentence.text + " ");
    span.dataset.id = String(sentence.id);
    span.id = `doc-sent-${sentence.id}`;
    if (state.hover === sentence.id) span.classList.add("is-highlighted");
    if (marking !== null) {
      span.classList.add("is-markable");
      if (markedIds.has(sentence.id)) span.classList.add("is-new-evidence");
      span.addEventListener("click", () => handlers.onDocSentenceClick(sentence.id));
    }
    sectionEl!.appendChild(span);
  }
  return pane;
};

const statusIcon = (state: ViewState, sentence: SentenceView): HTMLElement => {
  if (state.busy.has(sentence.index)) return el("span", "cc-status cc-spinner", "…");
  if (sentence.invalid) return el("span", "cc-status is-invalid", "∅");
  if (!resultIsCurrent(sentence)) return el("span", "cc-status is-unchecked", "?");
  const result = sentence.result!;
  const clean = result.edits.length === 0 && !result.tags.incorrect.some(Boolean);
  return clean
    ? el("span", "cc-status is-ok", "✓")
    : el("span", "cc-status is-flagged", "!");
};

const renderSuggestion = (
  sentence: SentenceView, handlers: Handlers,
): HTMLElement => {
  const result = sentence.result!;
  const box = el("div", "cc-suggestion");
  const line = el("p", "cc-claim-line");
  const words = result.tags.words;
  const edits = result.edits
    .map((edit, editIndex) => ({ edit, editIndex }))
    .sort((a, b) => a.edit.start - b.edit.start);

  let at = 0;
  for (const { edit, editIndex } of edits) {
    if (edit.start > at) {
      line.appendChild(el("span", "cc-span-keep", words.slice(at, edit.start).join(" ") + " "));
    }
    const verdict = verdictFor(sentence, editIndex);
    const block = el("span", "cc-edit-block");
    block.dataset.edit = String(editIndex);
    if (verdict === "accepted") block.classList.add("is-accepted");
    if (verdict === "rejected") block.classList.add("is-rejected");

    if (edit.end > edit.start) {
      block.appendChild(el("del", "cc-span-del", words.slice(edit.start, edit.end).join(" ")));
    }
    if (edit.replacement.length > 0) {
      block.appendChild(el("ins", "cc-span-ins", " " + edit.replacement.join(" ")));
    }
    if (verdict === null) {
      block.appendChild(button("cc-mini-btn cc-accept", "✓", () =>
        handlers.onEditVerdict(sentence.index, editIndex, "accepted")));
      block.appendChild(button("cc-mini-btn cc-reject", "✗", () =>
        handlers.onEditVerdict(sentence.index, editIndex, "rejected")));
    }
    line.appendChild(block);
    line.appendChild(document.createTextNode(" "));
    at = edit.end;
  }
  if (at < words.length) {
    line.appendChild(el("span", "cc-span-keep", words.slice(at).join(" ")));
  }
  box.appendChild(line);
  return box;
};

const renderEvidence = (
  state: ViewState, sentence: SentenceView, handlers: Handlers,
): HTMLElement | null => {
  const result = sentence.result!;
  if (result.evidence.length === 0) return null;
  const row = el("div", "cc-evidence-row");
  const ids = result.evidence.slice().sort((a, b) => a - b);
  for (const id of ids) {
    const chip = el("span", "cc-evidence-chip", `SENT${id}`);
    chip.dataset.id = String(id);
    const verdict = evidenceVerdictFor(sentence, id);
    if (verdict === "relevant") chip.classList.add("is-relevant");
    if (verdict === "not_relevant") chip.classList.add("is-not-relevant");
    chip.addEventListener("mouseenter", () => handlers.onHoverEvidence(id));
    chip.addEventListener("mouseleave", () => handlers.onHoverEvidence(null));
    chip.addEventListener("click", () => handlers.onJumpToEvidence(id));
    if (state.mode === "annotate" && verdict === null) {
      chip.appendChild(button("cc-mini-btn cc-accept", "✓", () =>
        handlers.onEvidenceVerdict(sentence.index, id, "relevant")));
      chip.appendChild(button("cc-mini-btn cc-reject", "✗", () =>
        handlers.onEvidenceVerdict(sentence.index, id, "not_relevant")));
    }
    row.appendChild(chip);
  }
  return row;
};

const renderAnnotationControls = (
  state: ViewState, sentence: SentenceView, handlers: Handlers,
): HTMLElement => {
  const row = el("div", "cc-annotate-row");

  const markBtn = button("cc-btn cc-mark-evidence", "Mark evidence", () =>
    handlers.onToggleMarking(sentence.index));
  if (state.markingEvidenceFor === sentence.index) markBtn.classList.add("is-active");
  row.appendChild(markBtn);

  if (sentence.new_evidence.length > 0) {
    for (const id of sentence.new_evidence) {
      const chip = el("span", "cc-new-evidence-chip", `+SENT${id}`);
      chip.dataset.id = String(id);
      chip.appendChild(button("cc-mini-btn", "×", () =>
        handlers.onRemoveNewEvidence(sentence.index, id)));
      row.appendChild(chip);
    }
  }

  const suffBtn = button(
    "cc-btn cc-sufficiency",
    sentence.sufficient === true ? "Sufficient ✓" : "Sufficient?",
    () => handlers.onSufficiency(sentence.index, sentence.sufficient !== true),
  );
  if (sentence.sufficient === true) suffBtn.classList.add("is-on");
  row.appendChild(suffBtn);

  const invalidBtn = button(
    "cc-btn cc-invalid",
    sentence.invalid ? "INVALID ✓" : "INVALID",
    () => handlers.onInvalid(sentence.index, !sentence.invalid),
  );
  if (sentence.invalid) invalidBtn.classList.add("is-on");
  row.appendChild(invalidBtn);

  return row;
};

const renderSentenceCard = (
  state: ViewState, sentence: SentenceView, handlers: Handlers,
): HTMLElement => {
  const card = el("article", "cc-sentence-card");
  card.dataset.index = String(sentence.index);
  if (sentence.invalid) card.classList.add("is-invalid");

  const header = el("div", "cc-card-header");
  header.appendChild(statusIcon(state, sentence));
  header.appendChild(el("span", "cc-card-label", `Sentence ${sentence.index}`));
  const checkBtn = button("cc-btn cc-check-btn", "Check", () =>
    handlers.onCheck(sentence.index));
  checkBtn.dataset.index = String(sentence.index);
  if (state.busy.has(sentence.index)) checkBtn.disabled = true;
  header.appendChild(checkBtn);
  card.appendChild(header);

  const editor = el("textarea", "cc-free-edit") as HTMLTextAreaElement;
  editor.value = sentence.text;
  editor.dataset.baseline = sentence.text;
  editor.rows = 2;
  card.appendChild(editor);
  card.appendChild(button("cc-btn cc-save-text", "Save", () =>
    handlers.onSaveText(sentence.index, editor.value)));

  if (sentence.result && !resultIsCurrent(sentence) && !state.busy.has(sentence.index)) {
    card.appendChild(el("p", "cc-stale-note", "Text changed since its last check."));
  }

  if (resultIsCurrent(sentence) && !sentence.invalid) {
    const result = sentence.result!;
    if (result.edits.length > 0) {
      card.appendChild(renderSuggestion(sentence, handlers));
    }
    const evidence = renderEvidence(state, sentence, handlers);
    if (evidence) card.appendChild(evidence);
  }

  if (state.mode === "annotate") {
    card.appendChild(renderAnnotationControls(state, sentence, handlers));
  }
  return card;
};

const renderToolbar = (state: ViewState, handlers: Handlers): HTMLElement => {
  const bar = el("header", "cc-toolbar");
  bar.appendChild(el("span", "cc-app-title", "claimcheck"));

  if (state.session) {
    bar.appendChild(el("span", "cc-session-id", state.session.session_id));
    bar.appendChild(button("cc-btn cc-check-all", "Check all", handlers.onCheckAll));
  }

  const modes: Mode[] = ["review", "annotate"];
  const toggle = el("span", "cc-mode-toggle");
  for (const mode of modes) {
    const btn = button(`cc-btn cc-mode-${mode}`, mode, () => handlers.onModeSwitch(mode));
    if (state.mode === mode) btn.classList.add("is-active");
    if (state.pendingVerdicts > 0) btn.disabled = true;
    toggle.appendChild(btn);
  }
  bar.appendChild(toggle);

  if (state.mode === "annotate" && state.session) {
    const prev = button("cc-btn cc-cycle-prev", "◀ summary", () => handlers.onCycle(-1));
    const next = button("cc-btn cc-cycle-next", "summary ▶", () => handlers.onCycle(1));
    if (cycleTarget(state, -1) === null) prev.disabled = true;
    if (cycleTarget(state, 1) === null) next.disabled = true;
    bar.appendChild(prev);
    bar.appendChild(next);
  }
  return bar;
};

const renderToast = (state: ViewState, handlers: Handlers): HTMLElement | null => {
  if (!state.toast) return null;
  const toast = el("div", "cc-toast", state.toast.message + " ");
  if (state.toast.kind === "retriable") {
    toast.classList.add("is-retriable");
    toast.appendChild(button("cc-btn cc-toast-action", "Retry", handlers.onToastAction));
  }
  if (state.toast.kind === "stale") {
    toast.classList.add("is-stale");
    toast.appendChild(button("cc-btn cc-toast-action", "Re-check", handlers.onToastAction));
  }
  toast.appendChild(button("cc-btn cc-toast-dismiss", "Dismiss", handlers.onDismissToast));
  return toast;
};

/** Rebuild the whole view from state, preserving in-progress textarea drafts. */
export const render = (root: HTMLElement, state: ViewState, handlers: Handlers): void => {
  // a draft survives a re-render only while the server-side text it diverged
  // from is still in place; once the service rewrites the sentence the new
  // text wins
  const drafts = new Map<string, { value: string; baseline: string }>();
  for (const area of root.querySelectorAll<HTMLTextAreaElement>(".cc-free-edit")) {
    const index = area.closest<HTMLElement>(".cc-sentence-card")?.dataset.index;
    const baseline = area.dataset.baseline ?? "";
    if (index !== undefined && area.value !== baseline) {
      drafts.set(index, { value: area.value, baseline });
    }
  }

  const app = el("div", "cc-app");
  app.appendChild(renderToolbar(state, handlers));
  if (state.banner) app.appendChild(el("div", "cc-banner", state.banner));

  const panes = el("main", "cc-panes");
  panes.appendChild(renderDocPane(state, handlers));

  const summaryPane = el("section", "cc-pane cc-summary-pane");
  summaryPane.appendChild(el("h2", "cc-pane-title", "Generated text"));
  if (state.session) {
    for (const sentence of state.session.sentences) {
      summaryPane.appendChild(renderSentenceCard(state, sentence, handlers));
    }
  } else if (!state.banner) {
    summaryPane.appendChild(el("p", "cc-empty", "No session loaded."));
  }
  panes.appendChild(summaryPane);
  app.appendChild(panes);

  const toast = renderToast(state, handlers);
  if (toast) app.appendChild(toast);

  root.replaceChildren(app);

  for (const area of root.querySelectorAll<HTMLTextAreaElement>(".cc-free-edit")) {
    const index = area.closest<HTMLElement>(".cc-sentence-card")?.dataset.index;
    if (index === undefined) continue;
    const draft = drafts.get(index);
    if (draft !== undefined && draft.baseline === area.dataset.baseline) {
      area.value = draft.value;
    }
  }
};
