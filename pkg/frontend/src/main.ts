import { ApiError, createClient } from "./api.js";
import type { Client, FetchLike } from "./api.js";
import { applyHover, render } from "./render.js";
import type { Handlers } from "./render.js";
import {
  applySentence, beginVerdict, cycleTarget, endVerdict, initialState,
  setBanner, setBusy, setHover, setMarking, setMode, setSession,
  setSessionIds, setToast,
} from "./state.js";
import type { Mode, ViewState } from "./state.js";

export interface AppOptions {
  baseUrl?: string;
  fetchFn?: FetchLike;
}

export interface App {
  readonly client: Client;
  state(): ViewState;
  loadSessions(): Promise<void>;
  openSession(id: string): Promise<void>;
  refresh(): Promise<void>;
  handlers: Handlers;
}

/**
 * Wire the view to the service. All mutations round-trip through the REST
 * API and the view is re-rendered from whatever the service answered, so a
 * reload always reconstructs the same picture.
 */
export const createApp = (root: HTMLElement, options: AppOptions = {}): App => {
  const client = createClient(options.baseUrl ?? "", options.fetchFn);
  let state = initialState();
  // the action a toast's Retry / Re-check button runs
  let toastAction: (() => void) | null = null;

  const paint = () => render(root, state, handlers);

  const update = (next: ViewState) => {
    state = next;
    paint();
  };

  const fail = (error: unknown, index: number | null, retry: () => void) => {
    if (error instanceof ApiError && error.isStale) {
      toastAction = () => {
        void handlers.onCheck(index ?? 0);
      };
      update(setToast(state, {
        message: "Sentence changed since its last check.",
        kind: "stale",
        index,
      }));
      return;
    }
    if (error instanceof ApiError && error.retriable) {
      toastAction = retry;
      update(setToast(state, {
        message: `Backend unavailable: ${error.message}`,
        kind: "retriable",
        index,
      }));
      return;
    }
    const message = error instanceof Error ? error.message : String(error);
    update(setToast(state, { message, kind: "plain", index }));
  };

  const sessionId = (): string | null => state.session?.session_id ?? null;

  const runVerdict = async (send: () => Promise<void>, index: number, retry: () => void) => {
    update(beginVerdict(state));
    try {
      await send();
    } catch (error) {
      fail(error, index, retry);
    } finally {
      update(endVerdict(state));
    }
  };

  const handlers: Handlers = {
    onCheck(index) {
      const id = sessionId();
      if (!id || state.busy.has(index)) return;
      update(setBusy(setToast(state, null), index, true));
      client.checkSentence(id, index).then(
        async () => {
          const session = await client.getSession(id);
          update(setBusy(setSession(state, session), index, false));
        },
        (error) => {
          update(setBusy(state, index, false));
          fail(error, index, () => handlers.onCheck(index));
        },
      );
    },

    onCheckAll() {
      const id = sessionId();
      if (!id || !state.session) return;
      let next = setToast(state, null);
      for (const sentence of state.session.sentences) {
        next = setBusy(next, sentence.index, true);
      }
      update(next);
      client.checkAll(id).then(
        async (outcome) => {
          const session = await client.getSession(id);
          let fresh = setSession(state, session);
          fresh = { ...fresh, busy: new Set() };
          update(fresh);
          if (outcome.failed.length > 0) {
            fail(
              new ApiError(502, "backend_error",
                `${outcome.failed.length} sentences failed to check`, true),
              null, () => handlers.onCheckAll(),
            );
          }
        },
        (error) => {
          update({ ...state, busy: new Set() });
          fail(error, null, () => handlers.onCheckAll());
        },
      );
    },

    onHoverEvidence(id) {
      state = setHover(state, id);
      applyHover(root, id);
    },

    onJumpToEvidence(id) {
      const target = root.querySelector<HTMLElement>(`#doc-sent-${id}`);
      target?.scrollIntoView({ block: "center", behavior: "smooth" });
    },

    onEditVerdict(index, editIndex, verdict) {
      const id = sessionId();
      if (!id) return;
      void runVerdict(async () => {
        const sentence = await client.sendVerdict(id, {
          index, kind: "edit", edit_index: editIndex, verdict,
        });
        update(applySentence(setToast(state, null), sentence));
      }, index, () => handlers.onEditVerdict(index, editIndex, verdict));
    },

    onEvidenceVerdict(index, evidenceId, verdict) {
      const id = sessionId();
      if (!id) return;
      void runVerdict(async () => {
        const sentence = await client.sendVerdict(id, {
          index, kind: "evidence", evidence_id: evidenceId, verdict,
        });
        update(applySentence(setToast(state, null), sentence));
      }, index, () => handlers.onEvidenceVerdict(index, evidenceId, verdict));
    },

    onToggleMarking(index) {
      update(setMarking(state, index));
    },

    onDocSentenceClick(docId) {
      const id = sessionId();
      const index = state.markingEvidenceFor;
      if (!id || index === null) return;
      void runVerdict(async () => {
        const sentence = await client.sendVerdict(id, {
          index, kind: "new_evidence", evidence_id: docId, add: true,
        });
        update(applySentence(state, sentence));
      }, index, () => handlers.onDocSentenceClick(docId));
    },

    onRemoveNewEvidence(index, docId) {
      const id = sessionId();
      if (!id) return;
      void runVerdict(async () => {
        const sentence = await client.sendVerdict(id, {
          index, kind: "new_evidence", evidence_id: docId, add: false,
        });
        update(applySentence(state, sentence));
      }, index, () => handlers.onRemoveNewEvidence(index, docId));
    },

    onSufficiency(index, verdict) {
      const id = sessionId();
      if (!id) return;
      void runVerdict(async () => {
        const sentence = await client.sendVerdict(id, {
          index, kind: "sufficiency", verdict,
        });
        update(applySentence(state, sentence));
      }, index, () => handlers.onSufficiency(index, verdict));
    },

    onInvalid(index, verdict) {
      const id = sessionId();
      if (!id) return;
      void runVerdict(async () => {
        const sentence = await client.sendVerdict(id, {
          index, kind: "invalid", verdict,
        });
        update(applySentence(state, sentence));
      }, index, () => handlers.onInvalid(index, verdict));
    },

    onSaveText(index, text) {
      const id = sessionId();
      if (!id) return;
      void runVerdict(async () => {
        const sentence = await client.editSentence(id, index, text);
        update(applySentence(setToast(state, null), sentence));
      }, index, () => handlers.onSaveText(index, text));
    },

    onModeSwitch(mode: Mode) {
      update(setMode(state, mode));
    },

    onCycle(step) {
      const target = cycleTarget(state, step);
      if (target) void app.openSession(target);
    },

    onToastAction() {
      const action = toastAction;
      toastAction = null;
      update(setToast(state, null));
      action?.();
    },

    onDismissToast() {
      toastAction = null;
      update(setToast(state, null));
    }
  };

  const app: App = {
    client,
    handlers,
    state: () => state,

    async loadSessions() {
      try {
        update(setSessionIds(state, await client.listSessions()));
      } catch (error) {
        const message = error instanceof Error ? error.message : String(error);
        update(setBanner(state, `Could not reach the service: ${message}`));
      }
    },

    async openSession(id) {
      try {
        const session = await client.getSession(id);
        update(setSession(state, session));
      } catch (error) {
        const message = error instanceof Error ? error.message : String(error);
        update(setBanner(state, `Could not load session ${id}: ${message}`));
      }
    },

    async refresh() {
      const id = sessionId();
      if (id) await app.openSession(id);
    }
  };

  paint();
  return app;
};

const bootstrap = async () => {
  const root = document.getElementById("app");
  if (!root) return;
  const app = createApp(root, { baseUrl: "" });
  await app.loadSessions();
  const ids = app.state().sessionIds;
  if (ids.length > 0) await app.openSession(ids[0]);
};

// only self-start in a real page; tests drive createApp directly
if (typeof document !== "undefined" && document.getElementById("app")) {
  void bootstrap();
}
