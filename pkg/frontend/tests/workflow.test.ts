import { beforeEach, describe, expect, it, vi } from "vitest";

import { createClient } from "../src/api.js";
import type { FetchLike } from "../src/api.js";
import { createApp } from "../src/main.js";
import type { App } from "../src/main.js";
import { FakeService, SUMMARY } from "./fixtures.js";

// jsdom leaves scrollIntoView unimplemented
let scrollSpy: ReturnType<typeof vi.fn>;

beforeEach(() => {
  scrollSpy = vi.fn();
  Element.prototype.scrollIntoView = scrollSpy;
});

/** Let fire-and-forget handler chains drain (fetch, json, re-render). */
const settle = async (): Promise<void> => {
  for (let i = 0; i < 4; i++) {
    await new Promise((resolve) => setTimeout(resolve, 0));
  }
};

interface Setup {
  fake: FakeService;
  root: HTMLElement;
  app: App;
  ids: string[];
}

const setup = async (
  summaries: string[][] = [SUMMARY], fetchFn?: FetchLike,
): Promise<Setup> => {
  const fake = new FakeService();
  const ids = summaries.map((summary) => fake.addSession(summary));
  document.body.innerHTML = '<div id="app"></div>';
  const root = document.getElementById("app")!;
  const app = createApp(root, {
    baseUrl: "http://svc:8000",
    fetchFn: fetchFn ?? fake.fetch
  });
  await app.loadSessions();
  await app.openSession(ids[0]);
  return { fake, root, app, ids };
};

const click = (root: HTMLElement, selector: string): void => {
  const node = root.querySelector<HTMLElement>(selector);
  if (!node) throw new Error(`nothing matches ${selector}`);
  node.click();
};

const textarea = (root: HTMLElement, index: number): HTMLTextAreaElement =>
  root.querySelector<HTMLTextAreaElement>(
    `.cc-sentence-card[data-index="${index}"] .cc-free-edit`,
  )!;

describe("checking sentences", () => {
  it("sends exactly one request per icon click, even when clicked twice", async () => {
    const { fake, root } = await setup();
    click(root, '.cc-check-btn[data-index="0"]');
    click(root, '.cc-check-btn[data-index="0"]');
    await settle();
    expect(fake.callsMatching(/POST \/sessions\/s1\/check\/0$/)).toHaveLength(1);
    const status = root.querySelector('.cc-sentence-card[data-index="0"] .cc-status')!;
    expect(status.classList.contains("is-ok")).toBe(true);
  });

  it("renders suggested edits after a check-all pass", async () => {
    const { fake, root } = await setup();
    click(root, ".cc-check-all");
    await settle();
    expect(fake.callsMatching(/check-all$/)).toHaveLength(1);
    const flawed = root.querySelector('.cc-sentence-card[data-index="1"]')!;
    expect(flawed.querySelector(".cc-span-del")?.textContent).toBe("orange and large");
    expect(flawed.querySelector(".cc-span-ins")?.textContent?.trim()).toBe("grey");
    expect(root.querySelector(".cc-toast")).toBeNull();
  });

  it("keeps partial results and warns when some sentences fail", async () => {
    const { root } = await setup([[SUMMARY[0], "An unscripted claim."]]);
    click(root, ".cc-check-all");
    await settle();
    const toast = root.querySelector(".cc-toast")!;
    expect(toast.classList.contains("is-retriable")).toBe(true);
    expect(toast.textContent).toContain("failed to check");
    const ok = root.querySelector('.cc-sentence-card[data-index="0"] .cc-status')!;
    const bad = root.querySelector('.cc-sentence-card[data-index="1"] .cc-status')!;
    expect(ok.classList.contains("is-ok")).toBe(true);
    expect(bad.classList.contains("is-unchecked")).toBe(true);
  });
});

describe("evidence navigation", () => {
  it("highlights the hovered marker's sentence, one at a time", async () => {
    const { root } = await setup();
    click(root, '.cc-check-btn[data-index="1"]');
    await settle();
    const card = '.cc-sentence-card[data-index="1"]';
    const chip0 = root.querySelector<HTMLElement>(`${card} .cc-evidence-chip[data-id="0"]`)!;
    const chip1 = root.querySelector<HTMLElement>(`${card} .cc-evidence-chip[data-id="1"]`)!;

    chip0.dispatchEvent(new MouseEvent("mouseenter"));
    expect(root.querySelectorAll(".cc-doc-sentence.is-highlighted")).toHaveLength(1);
    expect(root.querySelector("#doc-sent-0")!.classList.contains("is-highlighted")).toBe(true);

    chip1.dispatchEvent(new MouseEvent("mouseenter"));
    expect(root.querySelectorAll(".cc-doc-sentence.is-highlighted")).toHaveLength(1);
    expect(root.querySelector("#doc-sent-1")!.classList.contains("is-highlighted")).toBe(true);

    chip1.dispatchEvent(new MouseEvent("mouseleave"));
    expect(root.querySelectorAll(".cc-doc-sentence.is-highlighted")).toHaveLength(0);
  });

  it("does not wipe an in-progress draft while hovering", async () => {
    const { root } = await setup();
    click(root, '.cc-check-btn[data-index="1"]');
    await settle();
    textarea(root, 0).value = "draft in progress";
    const chip = root.querySelector<HTMLElement>(".cc-evidence-chip")!;
    chip.dispatchEvent(new MouseEvent("mouseenter"));
    chip.dispatchEvent(new MouseEvent("mouseleave"));
    expect(textarea(root, 0).value).toBe("draft in progress");
  });

  it("scrolls the document to a clicked marker", async () => {
    const { root } = await setup();
    click(root, '.cc-check-btn[data-index="1"]');
    await settle();
    click(root, '.cc-evidence-chip[data-id="0"]');
    expect(scrollSpy).toHaveBeenCalledTimes(1);
    expect(scrollSpy).toHaveBeenCalledWith({ block: "center", behavior: "smooth" });
  });
});

describe("acting on suggestions", () => {
  it("rewrites the sentence when a deletion is accepted, then re-checks clean", async () => {
    const { fake, root } = await setup();
    click(root, '.cc-check-btn[data-index="2"]');
    await settle();
    expect(textarea(root, 2).value).toBe("The mat was red and worn.");

    click(root, '.cc-sentence-card[data-index="2"] .cc-accept');
    await settle();
    expect(textarea(root, 2).value).toBe("The mat was red .");
    expect(fake.callsMatching(/verdict$/)).toHaveLength(1);
    const card = root.querySelector('.cc-sentence-card[data-index="2"]')!;
    expect(card.querySelector(".cc-stale-note")).not.toBeNull();

    click(root, '.cc-check-btn[data-index="2"]');
    await settle();
    const status = root.querySelector('.cc-sentence-card[data-index="2"] .cc-status')!;
    expect(status.classList.contains("is-ok")).toBe(true);
  });

  it("keeps the text and hides the buttons when an edit is rejected", async () => {
    const { fake, root } = await setup();
    click(root, '.cc-check-btn[data-index="1"]');
    await settle();
    click(root, '.cc-sentence-card[data-index="1"] .cc-reject');
    await settle();
    expect(textarea(root, 1).value).toBe("The cat was orange and large.");
    const block = root.querySelector('.cc-sentence-card[data-index="1"] .cc-edit-block')!;
    expect(block.classList.contains("is-rejected")).toBe(true);
    expect(block.querySelector(".cc-mini-btn")).toBeNull();
    expect(fake.callsMatching(/verdict$/)).toHaveLength(1);
  });

  it("saves freeform edits through the service, which normalizes spacing", async () => {
    const { fake, root } = await setup();
    textarea(root, 0).value = "The   cat sat\tdown.";
    click(root, '.cc-sentence-card[data-index="0"] .cc-save-text');
    await settle();
    expect(fake.callsMatching(/PUT \/sessions\/s1\/sentence\/0$/)).toHaveLength(1);
    expect(textarea(root, 0).value).toBe("The cat sat down.");
  });

  it("blocks mode switching while a verdict is in flight", async () => {
    const fake = new FakeService();
    const id = fake.addSession();
    const pending: Array<() => void> = [];
    const gated: FetchLike = async (input, init) => {
      if (init?.method === "POST" && /\/verdict$/.test(input)) {
        await new Promise<void>((resolve) => pending.push(resolve));
      }
      return fake.fetch(input, init);
    };
    document.body.innerHTML = '<div id="app"></div>';
    const root = document.getElementById("app")!;
    const app = createApp(root, { baseUrl: "http://svc:8000", fetchFn: gated });
    await app.loadSessions();
    await app.openSession(id);

    click(root, '.cc-check-btn[data-index="1"]');
    await settle();
    click(root, '.cc-sentence-card[data-index="1"] .cc-accept');
    expect(pending).toHaveLength(1);
    expect(app.state().pendingVerdicts).toBe(1);
    expect(root.querySelector<HTMLButtonElement>(".cc-mode-annotate")!.disabled).toBe(true);

    pending[0]();
    await settle();
    expect(app.state().pendingVerdicts).toBe(0);
    expect(root.querySelector<HTMLButtonElement>(".cc-mode-annotate")!.disabled).toBe(false);
    expect(textarea(root, 1).value).toBe("The cat was grey .");
  });
});

describe("failure handling", () => {
  it("offers a retry while the backend is down and recovers on retry", async () => {
    const { fake, root } = await setup();
    fake.backendDown = true;
    click(root, '.cc-check-btn[data-index="0"]');
    await settle();
    const toast = root.querySelector(".cc-toast")!;
    expect(toast.classList.contains("is-retriable")).toBe(true);
    expect(toast.querySelector(".cc-toast-action")?.textContent).toBe("Retry");

    fake.backendDown = false;
    click(root, ".cc-toast-action");
    await settle();
    expect(root.querySelector(".cc-toast")).toBeNull();
    expect(fake.callsMatching(/check\/0$/)).toHaveLength(2);
    const status = root.querySelector('.cc-sentence-card[data-index="0"] .cc-status')!;
    expect(status.classList.contains("is-ok")).toBe(true);
  });

  it("turns a stale-edit conflict into a re-check shortcut", async () => {
    const { fake, root } = await setup();
    click(root, '.cc-check-btn[data-index="1"]');
    await settle();

    // another client rewrites the sentence behind this tab's back
    const other = createClient("http://svc:8000", fake.fetch);
    await other.editSentence("s1", 1, "The cat was grey .");

    click(root, '.cc-sentence-card[data-index="1"] .cc-accept');
    await settle();
    const toast = root.querySelector(".cc-toast")!;
    expect(toast.classList.contains("is-stale")).toBe(true);
    expect(toast.querySelector(".cc-toast-action")?.textContent).toBe("Re-check");

    click(root, ".cc-toast-action");
    await settle();
    expect(fake.callsMatching(/POST \/sessions\/s1\/check\/1$/)).toHaveLength(2);
    expect(root.querySelector(".cc-toast")).toBeNull();
    expect(textarea(root, 1).value).toBe("The cat was grey .");
    const status = root.querySelector('.cc-sentence-card[data-index="1"] .cc-status')!;
    expect(status.classList.contains("is-ok")).toBe(true);
  });
});

describe("annotation workflow", () => {
  const checkedAnnotateSetup = async (): Promise<Setup> => {
    const ctx = await setup();
    click(ctx.root, ".cc-check-all");
    await settle();
    click(ctx.root, ".cc-mode-annotate");
    return ctx;
  };

  it("collects new evidence through document clicks", async () => {
    const { fake, root, app, ids } = await checkedAnnotateSetup();
    click(root, '.cc-sentence-card[data-index="0"] .cc-mark-evidence');
    expect(root.querySelectorAll(".cc-doc-sentence.is-markable")).toHaveLength(3);

    click(root, "#doc-sent-2");
    await settle();
    const chip = root.querySelector<HTMLElement>(
      '.cc-sentence-card[data-index="0"] .cc-new-evidence-chip',
    )!;
    expect(chip.dataset.id).toBe("2");
    expect(root.querySelector("#doc-sent-2")!.classList.contains("is-new-evidence")).toBe(true);
    expect(fake.callsMatching(/verdict$/)).toHaveLength(1);

    const lines = (await app.client.fetchAnnotations(ids[0]))
      .trim().split("\n").map((line) => JSON.parse(line));
    expect(lines.find((line) => line.index === 0)!.new_evidence).toEqual([2]);

    click(root, '.cc-sentence-card[data-index="0"] .cc-new-evidence-chip .cc-mini-btn');
    await settle();
    expect(root.querySelector(".cc-new-evidence-chip")).toBeNull();
  });

  it("marks a sentence invalid and exports the flag", async () => {
    const { root, app, ids } = await checkedAnnotateSetup();
    click(root, '.cc-sentence-card[data-index="1"] .cc-invalid');
    await settle();
    const card = root.querySelector('.cc-sentence-card[data-index="1"]')!;
    expect(card.classList.contains("is-invalid")).toBe(true);

    const lines = (await app.client.fetchAnnotations(ids[0]))
      .trim().split("\n").filter(Boolean).map((line) => JSON.parse(line));
    expect(lines).toHaveLength(1);
    expect(lines[0]).toMatchObject({ index: 1, invalid: true, edit_verdicts: [] });
  });

  it("records sufficiency and evidence relevance verdicts", async () => {
    const { root, app, ids } = await checkedAnnotateSetup();
    const card = '.cc-sentence-card[data-index="0"]';
    click(root, `${card} .cc-evidence-chip[data-id="0"] .cc-accept`);
    await settle();
    const chip = root.querySelector(`${card} .cc-evidence-chip[data-id="0"]`)!;
    expect(chip.classList.contains("is-relevant")).toBe(true);

    click(root, `${card} .cc-sufficiency`);
    await settle();
    expect(root.querySelector(`${card} .cc-sufficiency`)!.classList.contains("is-on")).toBe(true);

    const lines = (await app.client.fetchAnnotations(ids[0]))
      .trim().split("\n").map((line) => JSON.parse(line));
    const line = lines.find((entry) => entry.index === 0)!;
    expect(line.sufficient).toBe(true);
    expect(line.evidence_verdicts).toEqual(["relevant"]);
  });

  it("cycles between summaries, wrapping at both ends", async () => {
    const { root } = await setup([SUMMARY, ["Another summary sentence."]]);
    click(root, ".cc-mode-annotate");
    expect(root.querySelector(".cc-session-id")!.textContent).toBe("s1");

    click(root, ".cc-cycle-next");
    await settle();
    expect(root.querySelector(".cc-session-id")!.textContent).toBe("s2");
    expect(textarea(root, 0).value).toBe("Another summary sentence.");

    click(root, ".cc-cycle-next");
    await settle();
    expect(root.querySelector(".cc-session-id")!.textContent).toBe("s1");
  });

  it("disables cycling when there is nowhere to go", async () => {
    const { root } = await setup();
    click(root, ".cc-mode-annotate");
    expect(root.querySelector<HTMLButtonElement>(".cc-cycle-next")!.disabled).toBe(true);
    expect(root.querySelector<HTMLButtonElement>(".cc-cycle-prev")!.disabled).toBe(true);
  });
});
